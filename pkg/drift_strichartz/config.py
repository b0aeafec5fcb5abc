"""
Configuration for the drift-Strichartz toolkit.
Tolerances, fit windows, grid defaults and worker counts are read from
DRIFT_* environment variables (a .env file is honoured) into a validated
pydantic model.
"""

import os
import logging
from typing import Any, Dict, Optional
from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator

logger = logging.getLogger(__name__)

# Load environment variables
load_dotenv()

PROPAGATION_METHODS = ("sheared-spectral", "chirp-interp", "kernel-quadrature")
GRAMIAN_METHODS = ("augmented-exponential", "adaptive-quadrature")

# Settings field -> environment variable
_ENV_KEYS = {
    "rank_tol": "DRIFT_RANK_TOL",
    "cluster_tol": "DRIFT_CLUSTER_TOL",
    "imag_axis_tol": "DRIFT_IMAG_AXIS_TOL",
    "zero_block_tol": "DRIFT_ZERO_BLOCK_TOL",
    "fit_t_lo": "DRIFT_FIT_T_LO",
    "fit_t_hi": "DRIFT_FIT_T_HI",
    "fit_samples": "DRIFT_FIT_SAMPLES",
    "fit_residual_max": "DRIFT_FIT_RESIDUAL_MAX",
    "anomalous_margin": "DRIFT_ANOMALOUS_MARGIN",
    "grid_n": "DRIFT_GRID_N",
    "grid_L": "DRIFT_GRID_L",
    "margin": "DRIFT_MARGIN",
    "support_mass": "DRIFT_SUPPORT_MASS",
    "workers": "DRIFT_WORKERS",
    "method": "DRIFT_METHOD",
    "gramian_method": "DRIFT_GRAMIAN_METHOD",
    "test_mode": "DRIFT_TEST_MODE",
    "quadrature_rel": "DRIFT_QUADRATURE_REL",
    "log_level": "DRIFT_LOG_LEVEL",
    "log_file": "DRIFT_LOG_FILE",
}


class Settings(BaseModel):
    """Validated runtime settings."""

    rank_tol: float = Field(1e-9, gt=0, lt=1)
    cluster_tol: float = Field(1e-7, gt=0, lt=1)
    imag_axis_tol: float = Field(1e-8, gt=0, lt=1)
    zero_block_tol: float = Field(1e-10, gt=0, lt=1)
    fit_t_lo: float = Field(50.0, gt=0)
    fit_t_hi: float = Field(500.0, gt=0)
    fit_samples: int = Field(64, ge=8)
    fit_residual_max: float = Field(0.15, gt=0)
    anomalous_margin: float = Field(0.25, ge=0)
    grid_n: int = Field(128, ge=16)
    grid_L: float = Field(16.0, gt=0)
    margin: float = Field(0.25, gt=0, lt=0.5)
    support_mass: float = Field(1.0 - 1e-6, gt=0.5, lt=1)
    workers: int = Field(default_factory=lambda: os.cpu_count() or 1, ge=1)
    method: str = "sheared-spectral"
    gramian_method: str = "augmented-exponential"
    test_mode: bool = False
    quadrature_rel: float = Field(1e-12, gt=0)
    log_level: str = "INFO"
    log_file: Optional[str] = None

    @field_validator("method")
    @classmethod
    def _check_method(cls, value: str) -> str:
        if value not in PROPAGATION_METHODS:
            raise ValueError(f"method must be one of {PROPAGATION_METHODS}, got {value!r}")
        return value

    @field_validator("gramian_method")
    @classmethod
    def _check_gramian_method(cls, value: str) -> str:
        if value not in GRAMIAN_METHODS:
            raise ValueError(f"gramian_method must be one of {GRAMIAN_METHODS}, got {value!r}")
        return value

    @field_validator("grid_n")
    @classmethod
    def _check_power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError(f"grid_n must be a power of two, got {value}")
        return value

    @field_validator("log_level")
    @classmethod
    def _check_log_level(cls, value: str) -> str:
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {value!r}")
        return value


def load_settings(**overrides: Any) -> Settings:
    """
    Build settings from the environment, with explicit overrides taking precedence.

    Args:
        **overrides: Settings fields to set directly (None values are ignored)

    Returns:
        Validated Settings instance
    """
    values: Dict[str, Any] = {}
    for name, env_key in _ENV_KEYS.items():
        raw = os.getenv(env_key)
        if raw is not None and raw != "":
            values[name] = raw
    values.update({k: v for k, v in overrides.items() if v is not None})
    settings = Settings(**values)
    logger.debug(f"Loaded settings: {settings.model_dump()}")
    return settings


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Return the process-wide settings, loading them on first use."""
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def set_settings(settings: Settings) -> None:
    """Install settings built elsewhere (the CLI does this after parsing flags)."""
    global _settings
    _settings = settings


def reset_settings() -> None:
    """Forget cached settings so the next get_settings() re-reads the environment."""
    global _settings
    _settings = None
