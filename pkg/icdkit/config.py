"""
icdkit - Configuration

Settings are read from the environment, optionally seeded from a ``.env`` file.
Every numerical default used across the package lives here.
"""

import dataclasses
import logging
import os
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

from dotenv import load_dotenv

from icdkit.errors import ConfigurationError

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


@dataclass(frozen=True)
class Settings:
    """Numerical knobs shared by every module."""
    tol: float = 1e-9
    nullspace_tol: float = 1e-10
    seed: int = 0
    positivity_samples: int = 1000
    positivity_steps: int = 50
    opt_restarts: int = 32
    opt_steps: int = 500
    opt_step_size: float = 0.05
    workers: int = 1
    log_level: str = "WARNING"

    def replace(self, **overrides) -> "Settings":
        """Return a copy with some fields replaced (None values are ignored)."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **overrides)


# env key -> (field, parser)
ENV_KEYS = {
    "ICDKIT_TOL": ("tol", float),
    "ICDKIT_NULLSPACE_TOL": ("nullspace_tol", float),
    "ICDKIT_SEED": ("seed", int),
    "ICDKIT_POSITIVITY_SAMPLES": ("positivity_samples", int),
    "ICDKIT_POSITIVITY_STEPS": ("positivity_steps", int),
    "ICDKIT_OPT_RESTARTS": ("opt_restarts", int),
    "ICDKIT_OPT_STEPS": ("opt_steps", int),
    "ICDKIT_OPT_STEP_SIZE": ("opt_step_size", float),
    "ICDKIT_WORKERS": ("workers", int),
    "ICDKIT_LOG_LEVEL": ("log_level", str),
}

_NON_NEGATIVE = {"tol", "nullspace_tol", "seed", "positivity_samples", "positivity_steps", "opt_steps"}
_POSITIVE = {"opt_restarts", "opt_step_size", "workers"}


def _parse(key: str, raw: str, parser: Callable):
    try:
        return parser(raw)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {raw!r}")


def validate(settings: Settings) -> Settings:
    """Check ranges of all settings, raising ConfigurationError on the first bad one."""
    for field in _NON_NEGATIVE:
        if getattr(settings, field) < 0:
            raise ConfigurationError(f"{field} must be non-negative, got {getattr(settings, field)}")
    for field in _POSITIVE:
        if getattr(settings, field) <= 0:
            raise ConfigurationError(f"{field} must be positive, got {getattr(settings, field)}")
    if logging.getLevelName(settings.log_level.upper()) is None or \
            not isinstance(logging.getLevelName(settings.log_level.upper()), int):
        raise ConfigurationError(f"unknown log level {settings.log_level!r}")
    return settings


def load_settings(environ: Optional[Mapping[str, str]] = None, dotenv: bool = True) -> Settings:
    """Load settings from ``environ`` (default: process environment after reading .env)."""
    if environ is None:
        if dotenv:
            load_dotenv()
        environ = os.environ
    values = {}
    for key, (field, parser) in ENV_KEYS.items():
        raw = environ.get(key)
        if raw is not None and raw != "":
            values[field] = _parse(key, raw, parser)
    return validate(Settings(**values))


def configure_logging(level: str = "WARNING") -> None:
    """Configure root logging once, for command line use."""
    logging.basicConfig(level=getattr(logging, level.upper(), logging.WARNING), format=LOG_FORMAT)
