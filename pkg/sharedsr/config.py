"""
Configuration management.

Process-level settings come from environment variables (optionally via a
``.env`` file); per-run settings come from a flat ``key = value`` file
validated against ``RunConfig``, with command-line flags overriding it.
"""

import os
from pathlib import Path
from typing import Any

from dotenv import load_dotenv
from pydantic import ValidationError

from sharedsr.exceptions import ConfigError
from sharedsr.models.schemas import RunConfig

LIST_KEYS = {"features", "categories"}


class Config:
    """
    Process configuration loaded from environment variables.

    Provides logging and worker settings with validation and default values.
    """

    def __init__(self) -> None:
        """Load configuration from environment variables."""
        load_dotenv()

        # Logging Configuration
        self.log_level = os.getenv("SHAREDSR_LOG_LEVEL", "INFO")
        self.log_file = os.getenv("SHAREDSR_LOG_FILE", "")
        self.log_json = os.getenv("SHAREDSR_LOG_JSON", "false").lower() == "true"

        # Execution Configuration
        self.workers = int(os.getenv("SHAREDSR_WORKERS", "1"))
        self.app_env = os.getenv("SHAREDSR_ENV", "production")

    @property
    def is_development(self) -> bool:
        """Check if running in development environment."""
        return self.app_env.lower() == "development"

    def validate_config(self) -> None:
        """
        Validate configuration settings.

        Raises:
            ValueError: If any configuration is invalid.
        """
        if self.log_level.upper() not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"SHAREDSR_LOG_LEVEL {self.log_level!r} is not a logging level")
        if self.workers < 1:
            raise ValueError("SHAREDSR_WORKERS must be positive")

    def to_dict(self) -> dict:
        """Configuration as a dictionary."""
        return {
            "log_level": self.log_level,
            "log_file": self.log_file,
            "log_json": self.log_json,
            "workers": self.workers,
            "app_env": self.app_env,
        }


_config: Config | None = None


def get_config() -> Config:
    """Get global configuration instance."""
    global _config
    if _config is None:
        _config = Config()
    return _config


def read_key_values(path: str | Path) -> dict[str, Any]:
    """
    Read a flat ``key = value`` file.

    Blank lines and ``#`` comments are ignored. ``features`` and
    ``categories`` hold comma-separated column lists.

    Raises:
        ConfigError: On a missing file, a line without ``=`` or a repeated key.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    values: dict[str, Any] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"{path}:{number}: duplicate key {key!r}")
        values[key] = [v.strip() for v in value.split(",") if v.strip()] if key in LIST_KEYS else value
    return values


def load_run_config(
    path: str | Path | None = None, overrides: dict[str, Any] | None = None
) -> RunConfig:
    """
    Build a validated run configuration.

    Args:
        path: Optional config file.
        overrides: Values from command-line flags; ``None`` entries are ignored.

    Raises:
        ConfigError: On unknown keys or invalid values.
    """
    values = read_key_values(path) if path else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration: {e}") from e
