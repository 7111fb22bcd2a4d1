"""Configuration module for the slice planner.

This module handles loading and accessing configuration values from environment
variables and default settings. Scenario files and CLI flags override these values
per run.
"""

import os
from typing import Any, Dict

from dotenv import load_dotenv

load_dotenv()

DEFAULT_CONFIG = {
    "LOG_LEVEL": "WARNING",
    "LOG_FILE": None,  # Console only unless set
    "LOG_MAX_BYTES": 10 * 1024 * 1024,  # 10 MB
    "LOG_BACKUP_COUNT": 5,
    "RESULTS_DIR": "results",
    # Planner defaults
    "GAMMA": 10,
    "K_PATHS": 1,
    "MAX_CANDIDATES": 64,
    "MAX_INSTANCE_REPLICATION": 3,
    "UNBOUNDED_DELAY_BUDGET_MS": 1000,  # Processing budget when a service sets no delay target
    # Brute-force limits
    "ORACLE_MAX_NODES": 12,
    "ORACLE_MAX_CHAIN_LEN": 4,
    "ORACLE_MAX_STRINGS": 500000,
    "ORACLE_MAX_HOPS": 6,
    "SWEEP_WORKERS": 4,
    "LOGFIRE_SERVICE_NAME": "slice-planner",
}


def _coerce(default: Any, raw: str) -> Any:
    """Convert an environment string to the type of its default, when it parses."""
    for kind in (int, float):
        if isinstance(default, kind) and not isinstance(default, bool):
            try:
                return kind(raw)
            except ValueError:
                return raw
    return raw


def get_config() -> Dict[str, Any]:
    """Get the application configuration.

    Only keys of ``DEFAULT_CONFIG`` are read from the environment. Numeric
    values keep their numeric type when the variable parses; anything else is
    kept as the raw string and rejected later by the typed getters.

    Returns:
        Dict[str, Any]: The configuration dictionary.
    """
    return {
        key: default if (raw := os.getenv(key)) is None else _coerce(default, raw)
        for key, default in DEFAULT_CONFIG.items()
    }


class ConfigDict(dict):
    """Extended dictionary class that adds typed getters to the configuration."""

    def get_int(self, key: str) -> int:
        """Get a configuration value as an integer.

        Args:
            key: The configuration key.

        Returns:
            int: The converted value.

        Raises:
            ValueError: If the key is missing or the value is not an integer.
        """
        value = self.get(key)
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ValueError(f"Configuration value {key}={value!r} is not an integer")

    def get_float(self, key: str) -> float:
        """Get a configuration value as a float.

        Args:
            key: The configuration key.

        Returns:
            float: The converted value.

        Raises:
            ValueError: If the key is missing or the value is not a number.
        """
        value = self.get(key)
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ValueError(f"Configuration value {key}={value!r} is not a number")


CONFIG = ConfigDict(get_config())
