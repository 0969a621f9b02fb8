import logging
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Dict, Hashable, Optional

import numpy as np

logger = logging.getLogger(__name__)


def payload_nbytes(value: Any) -> int:
    """Numpy massivlari egallagan baytlar (stream, oracle yoki ularning tuple'i)."""
    if isinstance(value, np.ndarray):
        return int(value.nbytes)
    if isinstance(value, (tuple, list)):
        return sum(payload_nbytes(v) for v in value)
    if hasattr(value, "__dict__"):
        return sum(payload_nbytes(v) for v in vars(value).values() if isinstance(v, (np.ndarray, tuple, list)))
    return 0


@dataclass
class _Entry:
    value: Any
    stored_at: float
    nbytes: int


class WorkloadCache:
    """Workload (stream + oracle) uchun LRU kesh: TTL va ixtiyoriy bayt chegarasi bilan."""

    def __init__(self, max_size: int = 16, ttl_seconds: int = 3600, max_bytes: Optional[int] = None):
        if max_size < 1:
            raise ValueError(f"max_size must be >= 1, got {max_size}")
        self.max_size = max_size
        self.ttl_seconds = ttl_seconds
        self.max_bytes = max_bytes
        self._entries: "OrderedDict[Hashable, _Entry]" = OrderedDict()
        self._bytes = 0
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.evictions = 0

    def get(self, key: Hashable) -> Optional[Any]:
        with self._lock:
            entry = self._entries.get(key)
            if entry is None:
                self.misses += 1
                return None
            # TTL saqlangan paytdan hisoblanadi
            if time.time() - entry.stored_at > self.ttl_seconds:
                self._drop(key)
                self.misses += 1
                return None
            self._entries.move_to_end(key)
            self.hits += 1
            return entry.value

    def set(self, key: Hashable, value: Any) -> bool:
        """Qiymatni saqlash; bayt chegarasidan katta bo'lsa saqlanmaydi."""
        nbytes = payload_nbytes(value)
        with self._lock:
            if self.max_bytes is not None and nbytes > self.max_bytes:
                logger.debug(f"Workload {key} ({nbytes} bytes) exceeds the cache byte budget, not cached")
                return False
            if key in self._entries:
                self._drop(key)
            self._entries[key] = _Entry(value, time.time(), nbytes)
            self._bytes += nbytes
            while len(self._entries) > self.max_size or (
                self.max_bytes is not None and self._bytes > self.max_bytes
            ):
                oldest = next(iter(self._entries))
                logger.debug(f"Evicting workload {oldest} from cache")
                self._drop(oldest)
                self.evictions += 1
            return True

    def _drop(self, key: Hashable) -> None:
        entry = self._entries.pop(key)
        self._bytes -= entry.nbytes

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()
            self._bytes = 0
            self.hits = self.misses = self.evictions = 0

    def stats(self) -> Dict[str, Optional[int]]:
        return {
            "size": len(self._entries),
            "max_size": self.max_size,
            "bytes": self._bytes,
            "max_bytes": self.max_bytes,
            "ttl_seconds": self.ttl_seconds,
            "hits": self.hits,
            "misses": self.misses,
            "evictions": self.evictions,
        }


_workload_cache = WorkloadCache()


def configure_cache(max_size: int, ttl_seconds: int, max_bytes: Optional[int] = None) -> None:
    """Settings dan kesh chegaralarini o'rnatish."""
    global _workload_cache
    _workload_cache = WorkloadCache(max_size=max_size, ttl_seconds=ttl_seconds, max_bytes=max_bytes)


def get_cached_workload(key: Hashable) -> Optional[Any]:
    return _workload_cache.get(key)


def cache_workload(key: Hashable, value: Any) -> None:
    if value is not None:
        _workload_cache.set(key, value)


def clear_cache() -> None:
    _workload_cache.clear()


def get_cache_stats() -> Dict[str, Optional[int]]:
    return _workload_cache.stats()
