import logging
import os
from unittest.mock import patch

from django.test import SimpleTestCase, override_settings

from invpde.utils import configure_logging, get_thread_cap


class TestGetThreadCap(SimpleTestCase):
    @override_settings(INVPDE_THREADS=4)
    def test_setting(self):
        self.assertEqual(get_thread_cap(), 4)

    @override_settings(INVPDE_THREADS=0)
    def test_at_least_one_thread(self):
        self.assertEqual(get_thread_cap(), 1)

    @override_settings(INVPDE_THREADS=None)
    def test_environment_fallback(self):
        with patch.dict(os.environ, {"INVPDE_THREADS": "3"}):
            self.assertEqual(get_thread_cap(), 3)
        with patch.dict(os.environ, {"INVPDE_THREADS": ""}):
            self.assertEqual(get_thread_cap(), 1)

    @override_settings(INVPDE_THREADS="many")
    def test_invalid_value(self):
        with self.assertRaises(ValueError):
            get_thread_cap()


class TestConfigureLogging(SimpleTestCase):
    def setUp(self):
        logger = logging.getLogger("invpde")
        self.addCleanup(logger.setLevel, logger.level)

    def test_levels_follow_verbosity(self):
        for verbosity, level in ((0, logging.WARNING), (1, logging.INFO), (2, logging.DEBUG), (3, logging.DEBUG)):
            self.assertEqual(configure_logging(verbosity).level, level)

    def test_single_handler(self):
        configure_logging(1)
        logger = configure_logging(2)
        self.assertEqual(len(logger.handlers), 1)
