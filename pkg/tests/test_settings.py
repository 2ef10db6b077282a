import os

import pytest
from pydantic import ValidationError

from dartprune.settings import Settings


@pytest.fixture(autouse=True)
def _clean_env(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    for name in ("DARTPRUNE_LOG_LEVEL", "DARTPRUNE_JSON_LOGS", "DARTPRUNE_METRICS_PATH", "DARTPRUNE_SEED"):
        monkeypatch.delenv(name, raising=False)


def test_defaults():
    settings = Settings.from_env()
    assert settings.log_level == "WARNING"
    assert settings.json_logs is False
    assert settings.metrics_path is None
    assert settings.default_seed == 0


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("DARTPRUNE_LOG_LEVEL", "debug")
    monkeypatch.setenv("DARTPRUNE_JSON_LOGS", "true")
    monkeypatch.setenv("DARTPRUNE_METRICS_PATH", "/tmp/dartprune.prom")
    monkeypatch.setenv("DARTPRUNE_SEED", "42")
    settings = Settings.from_env()
    assert settings.log_level == "DEBUG"
    assert settings.json_logs is True
    assert str(settings.metrics_path) == "/tmp/dartprune.prom"
    assert settings.default_seed == 42


def test_dotenv_file_is_read(tmp_path):
    (tmp_path / ".env").write_text("DARTPRUNE_SEED=7\n")
    try:
        assert Settings.from_env().default_seed == 7
    finally:
        os.environ.pop("DARTPRUNE_SEED", None)


def test_environment_wins_over_dotenv(tmp_path, monkeypatch):
    (tmp_path / ".env").write_text("DARTPRUNE_SEED=7\n")
    monkeypatch.setenv("DARTPRUNE_SEED", "3")
    assert Settings.from_env().default_seed == 3


def test_bad_values(monkeypatch):
    monkeypatch.setenv("DARTPRUNE_LOG_LEVEL", "chatty")
    with pytest.raises(ValidationError):
        Settings.from_env()
    monkeypatch.setenv("DARTPRUNE_LOG_LEVEL", "INFO")
    monkeypatch.setenv("DARTPRUNE_SEED", "-1")
    with pytest.raises(ValidationError):
        Settings.from_env()
