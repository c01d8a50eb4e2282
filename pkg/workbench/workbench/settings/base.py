"""
Django base settings for the workbench.

Workbench values come from environment variables prefixed ``GEOLOC_``.
There is no database, URL configuration or middleware; only management
commands run.
"""

import os
from typing import Any, Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class WorkbenchSettings(BaseSettings):
    """Process-wide settings read from the environment."""

    model_config = SettingsConfigDict(env_prefix="GEOLOC_", extra="ignore")

    log_level: str = Field(default="INFO", description="Level of the 'apps' logger")
    log_format: Literal["json", "simple"] = Field(
        default="json", description="Console log formatter"
    )
    default_seed: int = Field(default=42, ge=0, description="Seed used when --seed is omitted")


settings = WorkbenchSettings()

SECRET_KEY = os.environ.get("SECRET_KEY", "django-insecure-workbench-has-no-web-layer")

DATABASES: dict[str, Any] = {}

USE_TZ = True

LOG_LEVEL = settings.log_level.upper()
DEFAULT_SEED = settings.default_seed

INSTALLED_APPS = [
    "apps.core",
    "apps.fingerprints",
    "apps.filters",
    "apps.geomap",
    "apps.mobility",
    "apps.datasets",
    "apps.neural",
    "apps.rss_image",
    "apps.pipelines",
    "apps.metrics",
]


def build_logging(level: str, formatter: str) -> dict[str, Any]:
    """Logging dictConfig for the given level and console formatter."""
    return {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "verbose": {
                "format": "{levelname} {asctime} {module} {process:d} {message}",
                "style": "{",
            },
            "simple": {
                "format": "{levelname} {name}: {message}",
                "style": "{",
            },
            "json": {
                "()": "apps.core.logging.JsonFormatter",
            },
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "stream": "ext://sys.stderr",
                "formatter": formatter,
            },
        },
        "root": {
            "handlers": ["console"],
            "level": "WARNING",
        },
        "loggers": {
            "apps": {
                "handlers": ["console"],
                "level": level,
                "propagate": False,
            },
            # matplotlib font discovery is chatty at INFO
            "matplotlib": {
                "level": "WARNING",
            },
        },
    }


LOGGING = build_logging(LOG_LEVEL, settings.log_format)
