import logging
import os

from django.conf import settings

VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO}


def get_thread_cap():
    """Maximum number of worker threads for verification suites"""
    value = getattr(settings, "INVPDE_THREADS", None)
    if value is None:
        value = os.environ.get("INVPDE_THREADS")
    try:
        return max(int(value), 1) if value not in (None, "") else 1
    except (TypeError, ValueError):
        raise ValueError(f"INVPDE_THREADS must be a positive integer, got {value!r}")


def configure_logging(verbosity):
    """Route the invpde logger to stderr at the level matching Django's --verbosity"""
    logger = logging.getLogger("invpde")
    logger.setLevel(VERBOSITY_LEVELS.get(verbosity, logging.DEBUG))
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    return logger
