from django.apps import AppConfig


class InvpdeConfig(AppConfig):
    name = "invpde"
    verbose_name = "Invariant PDE engine"
