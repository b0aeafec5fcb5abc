"""
Tests for the settings layer.
"""

import pytest
from pydantic import ValidationError

from drift_strichartz.config import Settings, get_settings, load_settings, reset_settings


def test_defaults():
    settings = load_settings()
    assert settings.rank_tol == 1e-9
    assert settings.cluster_tol == 1e-7
    assert settings.imag_axis_tol == 1e-8
    assert settings.zero_block_tol == 1e-10
    assert (settings.fit_t_lo, settings.fit_t_hi, settings.fit_samples) == (50.0, 500.0, 64)
    assert settings.method == "sheared-spectral"
    assert settings.gramian_method == "augmented-exponential"
    assert settings.workers >= 1
    assert settings.test_mode is False


def test_environment_is_read(monkeypatch):
    monkeypatch.setenv("DRIFT_RANK_TOL", "1e-6")
    monkeypatch.setenv("DRIFT_METHOD", "chirp-interp")
    monkeypatch.setenv("DRIFT_TEST_MODE", "true")
    settings = load_settings()
    assert settings.rank_tol == 1e-6
    assert settings.method == "chirp-interp"
    assert settings.test_mode is True


def test_explicit_overrides_win(monkeypatch):
    monkeypatch.setenv("DRIFT_GRID_N", "64")
    settings = load_settings(grid_n=256, workers=None)
    assert settings.grid_n == 256


@pytest.mark.parametrize("overrides", [
    {"method": "leapfrog"},
    {"gramian_method": "simpson"},
    {"grid_n": 100},
    {"rank_tol": 0.0},
    {"margin": 0.5},
    {"log_level": "chatty"},
])
def test_invalid_values_rejected(overrides):
    with pytest.raises(ValidationError):
        load_settings(**overrides)


def test_log_level_is_normalized():
    assert Settings(log_level="debug").log_level == "DEBUG"


def test_cached_until_reset(monkeypatch):
    first = get_settings()
    monkeypatch.setenv("DRIFT_FIT_SAMPLES", "16")
    assert get_settings() is first
    reset_settings()
    assert get_settings().fit_samples == 16
