"""Logging for the slice planner.

Every component logs through ``get_logger`` under the ``slice_planner`` namespace.
Console output goes to stderr so that result tables printed on stdout stay
machine-readable; an optional rotating file receives the same records.
"""

import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional

from .config import CONFIG

NAMESPACE = "slice_planner"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _resolve_level(level_name: Optional[str]) -> int:
    """Map a level name to its number; unknown names mean WARNING."""
    level = logging.getLevelName(str(level_name or "WARNING").upper())
    return level if isinstance(level, int) else logging.WARNING


def _handlers(log_file: Optional[str], max_bytes: int, backup_count: int) -> list[logging.Handler]:
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(
            RotatingFileHandler(log_file, maxBytes=max_bytes, backupCount=backup_count)
        )
    formatter = logging.Formatter(LOG_FORMAT)
    for handler in handlers:
        handler.setFormatter(formatter)
    return handlers


def setup_logger(
    name: str,
    log_file: Optional[str] = None,
    level: Optional[str] = None,
    max_bytes: Optional[int] = None,
    backup_count: Optional[int] = None,
) -> logging.Logger:
    """Configure a logger with a stderr handler and an optional rotating file.

    Calling it again for the same name replaces the handlers instead of adding
    more.

    Args:
        name: Full logger name.
        log_file: Log file path; defaults to ``LOG_FILE`` from the configuration.
        level: Level name; defaults to ``LOG_LEVEL``.
        max_bytes: Rotation size; defaults to ``LOG_MAX_BYTES``.
        backup_count: Rotated files kept; defaults to ``LOG_BACKUP_COUNT``.

    Returns:
        The configured logger.
    """
    logger = logging.getLogger(name)
    logger.setLevel(_resolve_level(level or CONFIG.get("LOG_LEVEL")))
    logger.handlers.clear()

    for handler in _handlers(
        log_file or CONFIG.get("LOG_FILE"),
        int(max_bytes or CONFIG.get("LOG_MAX_BYTES", 10485760)),
        int(backup_count or CONFIG.get("LOG_BACKUP_COUNT", 5)),
    ):
        logger.addHandler(handler)
    return logger


def get_logger(component_name: str) -> logging.Logger:
    """Logger for a component, e.g. ``get_logger("planner.sweep")``."""
    return setup_logger(f"{NAMESPACE}.{component_name}")


def set_level(level_name: str) -> None:
    """Change the level of every slice planner logger created so far.

    The CLI calls this for ``--log-level`` after the module loggers exist.
    """
    level = _resolve_level(level_name)
    for name, existing in logging.Logger.manager.loggerDict.items():
        if name.startswith(f"{NAMESPACE}.") and isinstance(existing, logging.Logger):
            existing.setLevel(level)
