"""Tests for the logging_utils module."""

import logging
import os
import sys
import tempfile
import unittest
from logging.handlers import RotatingFileHandler
from unittest.mock import MagicMock, patch

from slice_planner.utils.logging_utils import get_logger, set_level, setup_logger


class TestLoggingUtils(unittest.TestCase):
    """Test cases for the logging_utils module."""

    def setUp(self):
        """Set up test fixtures."""
        logging.Logger.manager.loggerDict.clear()
        root = logging.getLogger()
        if root.handlers:
            for handler in root.handlers:
                root.removeHandler(handler)
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        for existing in list(logging.Logger.manager.loggerDict.values()):
            if isinstance(existing, logging.Logger):
                for handler in existing.handlers:
                    handler.close()
        self.tmp.cleanup()

    def test_setup_logger_defaults(self):
        """Test that setup_logger creates a logger with default settings."""
        log_file = os.path.join(self.tmp.name, "planner.log")
        with patch(
            "slice_planner.utils.logging_utils.CONFIG",
            {
                "LOG_FILE": log_file,
                "LOG_LEVEL": "INFO",
                "LOG_MAX_BYTES": 1024,
                "LOG_BACKUP_COUNT": 3,
            },
        ):
            logger = setup_logger("test_logger")

            self.assertEqual(logger.name, "test_logger")
            self.assertEqual(logger.level, logging.INFO)

            self.assertEqual(len(logger.handlers), 2)  # Console and file handler

            file_handler = next(h for h in logger.handlers if isinstance(h, RotatingFileHandler))
            self.assertEqual(file_handler.baseFilename, os.path.abspath(log_file))
            self.assertEqual(file_handler.maxBytes, 1024)
            self.assertEqual(file_handler.backupCount, 3)

    def test_console_goes_to_stderr(self):
        """Test that console output never mixes with result tables on stdout."""
        with patch("slice_planner.utils.logging_utils.CONFIG", {}):
            logger = setup_logger("console_logger")

            self.assertEqual(len(logger.handlers), 1)
            self.assertIs(logger.handlers[0].stream, sys.stderr)

    def test_setup_logger_creates_log_dir(self):
        """Test that a missing log directory is created."""
        log_file = os.path.join(self.tmp.name, "nested", "run.log")
        setup_logger("nested_logger", log_file=log_file, level="DEBUG")
        self.assertTrue(os.path.isdir(os.path.dirname(log_file)))

    def test_setup_logger_unknown_level_falls_back_to_warning(self):
        """Test that an unknown level name falls back to WARNING."""
        with patch("slice_planner.utils.logging_utils.CONFIG", {}):
            logger = setup_logger("odd_logger", level="chatty")
            self.assertEqual(logger.level, logging.WARNING)

    def test_setup_logger_replaces_handlers(self):
        """Test that setting up a logger twice does not duplicate handlers."""
        with patch("slice_planner.utils.logging_utils.CONFIG", {}):
            setup_logger("twice")
            logger = setup_logger("twice")
            self.assertEqual(len(logger.handlers), 1)

    def test_get_logger(self):
        """Test that get_logger namespaces the component under slice_planner."""
        with patch("slice_planner.utils.logging_utils.setup_logger") as mock_setup:
            mock_logger = MagicMock()
            mock_setup.return_value = mock_logger

            logger = get_logger("planner.planner")

            mock_setup.assert_called_once_with("slice_planner.planner.planner")
            self.assertEqual(logger, mock_logger)

    def test_set_level(self):
        """Test that set_level changes every slice planner logger but no others."""
        with patch("slice_planner.utils.logging_utils.CONFIG", {}):
            ours = get_logger("cli")
            other = setup_logger("someone.else")
        set_level("DEBUG")
        self.assertEqual(ours.level, logging.DEBUG)
        self.assertEqual(other.level, logging.WARNING)


if __name__ == "__main__":
    unittest.main()
