from dataclasses import dataclass
import logging
import os

from dotenv import find_dotenv, load_dotenv

logger = logging.getLogger(__name__)


@dataclass
class Settings:
    seed: int = 0
    workers: int = 4
    log_level: str = "INFO"
    db_path: str | None = None
    cache_size: int = 16
    cache_ttl: int = 3600
    cache_max_mb: int | None = None
    http_timeout: float = 30.0


def _read_int(name: str, default: int, minimum: int | None = None) -> int:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        value = int(raw.strip())
        if minimum is not None and value < minimum:
            raise ValueError(f"must be >= {minimum}")
        return value
    except (ValueError, TypeError) as exc:
        logger.warning(f"Invalid {name} value '{raw}': {exc}; using {default}")
        return default


def get_settings() -> Settings:
    # .env ishga tushirilgan papkadan o'qiladi
    load_dotenv(find_dotenv(usecwd=True))

    workers_raw = os.getenv("DPSKETCH_WORKERS", "4")
    try:
        workers = int(str(workers_raw).strip())
    except ValueError:
        logger.warning(f"Invalid DPSKETCH_WORKERS value '{workers_raw}', using 4")
        workers = 4
    if workers < 1:
        raise RuntimeError(f"DPSKETCH_WORKERS must be >= 1, got {workers}")

    seed = _read_int("DPSKETCH_SEED", 0, minimum=0)
    if seed >= 2 ** 64:
        logger.warning(f"DPSKETCH_SEED {seed} exceeds 64 bits, using 0")
        seed = 0

    log_level = os.getenv("DPSKETCH_LOG_LEVEL", "INFO").strip().upper() or "INFO"
    if not isinstance(logging.getLevelName(log_level), int):
        logger.warning(f"Unknown DPSKETCH_LOG_LEVEL '{log_level}', using INFO")
        log_level = "INFO"

    # Bo'sh qiymat ledger'ni o'chiradi
    db_path = os.getenv("DPSKETCH_DB_PATH", "").strip() or None

    # Bo'sh qiymat: bayt chegarasi yo'q
    cache_max_mb = _read_int("DPSKETCH_CACHE_MB", 0, minimum=0) or None

    # HTTP timeout (sekund)
    timeout_raw = os.getenv("DPSKETCH_HTTP_TIMEOUT", "30")
    try:
        http_timeout = float(str(timeout_raw).strip())
        if http_timeout <= 0:
            http_timeout = 30.0
    except Exception:
        http_timeout = 30.0

    return Settings(
        seed=seed,
        workers=workers,
        log_level=log_level,
        db_path=db_path,
        cache_size=_read_int("DPSKETCH_CACHE_SIZE", 16, minimum=1),
        cache_ttl=_read_int("DPSKETCH_CACHE_TTL", 3600, minimum=1),
        cache_max_mb=cache_max_mb,
        http_timeout=http_timeout,
    )
