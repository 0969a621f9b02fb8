"""Seeded 64-bit hash families for sketch rows.

Each row r of a sketch owns two functions: an index hash h_r mapping items onto
[0, w) and a sign hash g_r mapping items onto {-1, +1}. Both are keyed
splitmix64-style mixers; the family tag keeps h and g decorrelated.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

MASK64 = 0xFFFF_FFFF_FFFF_FFFF
MAX_WIDTH = 1 << 32

_GOLDEN = 0x9E37_79B9_7F4A_7C15
_MIX1 = 0xBF58_476D_1CE4_E5B9
_MIX2 = 0x94D0_49BB_1331_11EB

# Family tags
INDEX_TAG = 0x68  # "h"
SIGN_TAG = 0x67  # "g"
LEVEL_TAG = 0x4C  # "L"

ItemLike = Union[int, np.integer, np.ndarray]


class HashError(ValueError):
    """Noto'g'ri hash parametrlari (width, seed yoki item)."""


def _splitmix_int(x: int) -> int:
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_key(master_seed: int, *tags: int) -> int:
    """Master seed va teglardan 64-bitli kalit hosil qilish."""
    if not 0 <= master_seed <= MASK64:
        raise HashError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    key = _splitmix_int(master_seed)
    for tag in tags:
        key = _splitmix_int(key ^ (int(tag) & MASK64))
    return key


def _as_items(item: ItemLike) -> np.ndarray:
    arr = np.asarray(item)
    if arr.dtype.kind == "i":
        if np.any(arr < 0):
            raise HashError("items must be non-negative 64-bit identifiers")
        return arr.astype(np.uint64)
    if arr.dtype.kind == "u":
        return arr.astype(np.uint64, copy=False)
    if arr.dtype.kind == "b":
        return arr.astype(np.uint64)
    raise HashError(f"items must be unsigned 64-bit integers, got dtype {arr.dtype}")


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_MIX1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def mix64(items: ItemLike, key: int) -> np.ndarray:
    """Keyed avalanche mix of every item; always returns a 1-d uint64 array."""
    z = np.atleast_1d(_as_items(items)).ravel()
    k1 = np.uint64(key & MASK64)
    k2 = np.uint64(_splitmix_int(key))
    with np.errstate(over="ignore"):
        z = _mix((z ^ k1) + np.uint64(_GOLDEN))
        z = _mix(z ^ k2)
    return z


def _mulhi(z: np.ndarray, width: int) -> np.ndarray:
    # high 64 bits of z * width, exact for width < 2**32
    w = np.uint64(width)
    hi = z >> np.uint64(32)
    lo = z & np.uint64(0xFFFF_FFFF)
    with np.errstate(over="ignore"):
        return (hi * w + ((lo * w) >> np.uint64(32))) >> np.uint64(32)


def _check_width(width: int) -> int:
    width = int(width)
    if width < 1 or width >= MAX_WIDTH:
        raise HashError(f"width must be in [1, 2**32), got {width}")
    return width


def _restore_shape(out: np.ndarray, item: ItemLike):
    shape = np.shape(item)
    if shape == ():
        return int(out[0])
    return out.reshape(shape)


@dataclass(frozen=True)
class HashSeed:
    master_seed: int
    row: int

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed <= MASK64:
            raise HashError(f"master_seed out of 64-bit range: {self.master_seed}")
        if self.row < 0:
            raise HashError(f"row must be non-negative, got {self.row}")

    @cached_property
    def index_key(self) -> int:
        return derive_key(self.master_seed, self.row, INDEX_TAG)

    @cached_property
    def sign_key(self) -> int:
        return derive_key(self.master_seed, self.row, SIGN_TAG)


def hash_index(seed: HashSeed, item: ItemLike, width: int):
    """Item(lar)ni [0, width) oralig'iga joylashtirish (h_r)."""
    width = _check_width(width)
    out = _mulhi(mix64(item, seed.index_key), width).astype(np.int64)
    return _restore_shape(out, item)


def hash_sign(seed: HashSeed, item: ItemLike):
    """Item(lar) uchun {-1, +1} belgisi (g_r)."""
    top = mix64(item, seed.sign_key) >> np.uint64(63)
    out = 1 - 2 * top.astype(np.int8)
    return _restore_shape(out, item)


class RowHashes:
    """All d row hashes of one sketch, evaluated in bulk."""

    def __init__(self, master_seed: int, depth: int, width: int):
        if depth < 1:
            raise HashError(f"depth must be >= 1, got {depth}")
        self.master_seed = master_seed
        self.depth = depth
        self.width = _check_width(width)
        self.seeds = [HashSeed(master_seed, r) for r in range(depth)]

    def indices(self, items: ItemLike) -> np.ndarray:
        """(depth, n) int64 column indices."""
        return np.stack([
            _mulhi(mix64(items, s.index_key), self.width).astype(np.int64)
            for s in self.seeds
        ])

    def signs(self, items: ItemLike) -> np.ndarray:
        """(depth, n) int8 signs."""
        return np.stack([
            (1 - 2 * (mix64(items, s.sign_key) >> np.uint64(63)).astype(np.int8))
            for s in self.seeds
        ])
