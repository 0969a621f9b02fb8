import pytest

ENV_VARS = (
    "DPSKETCH_SEED",
    "DPSKETCH_WORKERS",
    "DPSKETCH_LOG_LEVEL",
    "DPSKETCH_DB_PATH",
    "DPSKETCH_CACHE_SIZE",
    "DPSKETCH_CACHE_TTL",
    "DPSKETCH_CACHE_MB",
    "DPSKETCH_HTTP_TIMEOUT",
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch, tmp_path):
    """Har bir test toza muhitda: .env va DPSKETCH_* o'zgaruvchilarsiz."""
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)
