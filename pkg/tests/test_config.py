import os

import pytest

from dpsketch.config import Settings, get_settings


def test_defaults():
    settings = get_settings()
    assert settings == Settings()
    assert settings.db_path is None


def test_values_from_environment(monkeypatch):
    monkeypatch.setenv("DPSKETCH_SEED", "18446744073709551615")
    monkeypatch.setenv("DPSKETCH_WORKERS", " 8 ")
    monkeypatch.setenv("DPSKETCH_LOG_LEVEL", "debug")
    monkeypatch.setenv("DPSKETCH_DB_PATH", "runs.db")
    monkeypatch.setenv("DPSKETCH_HTTP_TIMEOUT", "2.5")
    settings = get_settings()
    assert settings.seed == 2 ** 64 - 1
    assert settings.workers == 8
    assert settings.log_level == "DEBUG"
    assert settings.db_path == "runs.db"
    assert settings.http_timeout == 2.5


def test_dotenv_file_is_read(tmp_path):
    (tmp_path / ".env").write_text("DPSKETCH_SEED=42\n", encoding="utf-8")
    try:
        assert get_settings().seed == 42
    finally:
        os.environ.pop("DPSKETCH_SEED", None)


@pytest.mark.parametrize(
    "name, raw, attr, expected",
    [
        ("DPSKETCH_SEED", "abc", "seed", 0),
        ("DPSKETCH_SEED", "-3", "seed", 0),
        ("DPSKETCH_SEED", str(2 ** 64), "seed", 0),
        ("DPSKETCH_WORKERS", "many", "workers", 4),
        ("DPSKETCH_LOG_LEVEL", "LOUD", "log_level", "INFO"),
        ("DPSKETCH_CACHE_SIZE", "0", "cache_size", 16),
        ("DPSKETCH_CACHE_TTL", "x", "cache_ttl", 3600),
        ("DPSKETCH_HTTP_TIMEOUT", "-1", "http_timeout", 30.0),
        ("DPSKETCH_HTTP_TIMEOUT", "soon", "http_timeout", 30.0),
    ],
)
def test_malformed_values_fall_back(monkeypatch, name, raw, attr, expected):
    monkeypatch.setenv(name, raw)
    assert getattr(get_settings(), attr) == expected


def test_zero_workers_is_fatal(monkeypatch):
    monkeypatch.setenv("DPSKETCH_WORKERS", "0")
    with pytest.raises(RuntimeError, match="DPSKETCH_WORKERS"):
        get_settings()


def test_cache_byte_budget(monkeypatch):
    assert get_settings().cache_max_mb is None
    monkeypatch.setenv("DPSKETCH_CACHE_MB", "64")
    assert get_settings().cache_max_mb == 64
    monkeypatch.setenv("DPSKETCH_CACHE_MB", "lots")
    assert get_settings().cache_max_mb is None
