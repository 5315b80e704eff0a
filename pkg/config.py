"""
Process settings for the projection lab.

Values come from the environment (a local .env file is honoured through
python-dotenv). Nothing here is scientific input: scenario parameters always
come from command-line flags or scenario config files.
"""
import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError, field_validator

from errors import ConfigError

load_dotenv()

APP_NAME = "projection-lab"
APP_VERSION = "1.0.0"

_TRUTHY = {"1", "true", "yes", "on"}
_FALSY = {"0", "false", "no", "off"}


class Settings(BaseModel):
    database_url: str = "sqlite:///./lab_runs.db"
    record_runs: bool = True
    log_level: str = "WARNING"
    sweep_workers: int = 4
    default_energy: float = 1.0

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v):
        v = v.upper()
        if v not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level {v}")
        return v

    @field_validator("sweep_workers")
    @classmethod
    def validate_workers(cls, v):
        if v < 1:
            raise ValueError("sweep_workers must be at least 1")
        return v

    @field_validator("default_energy")
    @classmethod
    def validate_energy(cls, v):
        if not v > 0:
            raise ValueError("default_energy must be > 0")
        return v


def _read_flag(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    if raw.strip().lower() in _TRUTHY:
        return True
    if raw.strip().lower() in _FALSY:
        return False
    raise ConfigError(f"{name} must be a boolean flag, got {raw!r}")


def _settings_from_env() -> Settings:
    values = {"record_runs": _read_flag("LAB_RECORD_RUNS", True)}
    for env_name, field in (
        ("LAB_DATABASE_URL", "database_url"),
        ("LAB_LOG_LEVEL", "log_level"),
        ("LAB_SWEEP_WORKERS", "sweep_workers"),
        ("LAB_DEFAULT_ENERGY", "default_energy"),
    ):
        raw = os.getenv(env_name)
        if raw is not None and raw.strip():
            values[field] = raw.strip()
    try:
        return Settings(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid environment settings: {e}") from e


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return _settings_from_env()


def reload_settings() -> Settings:
    """Drop the cached settings and read the environment again."""
    get_settings.cache_clear()
    return get_settings()
