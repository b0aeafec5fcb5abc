"""
Shared fixtures: every test starts from default settings with no DRIFT_*
variables leaking in from the environment.
"""

import os

import pytest

from drift_strichartz.config import load_settings, reset_settings, set_settings


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    for key in list(os.environ):
        if key.startswith("DRIFT_"):
            monkeypatch.delenv(key, raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def settings_with():
    """Install settings with the given overrides for the rest of the test."""
    def install(**overrides):
        settings = load_settings(**overrides)
        set_settings(settings)
        return settings
    return install
