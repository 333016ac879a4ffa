import json

from django.core.management.base import BaseCommand, CommandError

from invpde.exceptions import InvPDEError
from invpde.expr import MAX_DIMENSION
from invpde.harness import InvarianceSuite, Suite
from invpde.serializers import TrialReportSerializer
from invpde.utils import configure_logging


def positive_int(value):
    number = int(value)
    if number < 1:
        raise ValueError(value)
    return number


def non_negative_int(value):
    number = int(value)
    if number < 0:
        raise ValueError(value)
    return number


class Command(BaseCommand):
    help = "Run a randomized invariance suite and print its report"
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument(
            "--suite",
            dest="suite",
            required=True,
            choices=[suite.value for suite in Suite],
            help="Which check to run",
        )
        parser.add_argument("-n", dest="n", type=int, required=True, help="Number of independent variables")
        parser.add_argument("--trials", dest="trials", type=positive_int, help="Number of trials")
        parser.add_argument("--tol", dest="tol", type=float, help="Tolerance on the per-trial error measure")
        parser.add_argument("--seed", dest="seed", type=non_negative_int, default=0, help="Random seed")

    def handle(self, *args, **options):
        configure_logging(options["verbosity"])
        n = options["n"]
        if not 1 <= n <= MAX_DIMENSION:
            raise CommandError(f"n must be between 1 and {MAX_DIMENSION}", returncode=2)

        try:
            suite = InvarianceSuite(options["suite"], n)
            report = suite.run(options["trials"], options["tol"], options["seed"])
        except (InvPDEError, ValueError) as e:
            raise CommandError(f"{type(e).__name__}: {e}", returncode=2)

        self.stdout.write(json.dumps(TrialReportSerializer(report).data))
        if not report.passed:
            raise CommandError(f"{report.failures} of {report.trials} trials failed", returncode=1)
