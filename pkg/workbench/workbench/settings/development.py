"""
Development settings: human-readable, verbose logs.
"""

from .base import *  # noqa: F401, F403

LOGGING = build_logging("DEBUG", "simple")  # noqa: F405
