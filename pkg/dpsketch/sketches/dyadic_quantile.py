"""Dyadic Count-Min / CountSketch quantile sketches (DCM / DCS).

Level j (0 <= j < B) summarises the dyadic intervals [k 2^j, (k+1) 2^j) with
one linear sketch keyed by k = floor(x / 2^j). A prefix [0, x) is the sum of at
most B such intervals: at every level where the current index is odd, its left
sibling is a full interval inside the prefix.

The private variant replaces each level's CountSketch with a private one at
budget rho / B; by additive zCDP composition the whole stack costs rho.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Union

import numpy as np

from .dp_linear_sketch import new_private
from .dp_mechanism import PrivacyBudget, calibrate_sigma, noise_bound_E, split_budget
from .hashing import LEVEL_TAG, ItemLike, derive_key
from .linear_sketch import (
    BYTES_PER_COUNTER,
    CounterMatrix,
    SketchParams,
    StreamOp,
    Variant,
    new_nonprivate,
    odd_ceil,
)

logger = logging.getLogger(__name__)

MAX_UNIVERSE_BITS = 63


class DyadicParamsError(ValueError):
    """Dyadic sketch parametrlari noto'g'ri."""


class UniverseError(ValueError):
    """Item universe chegarasidan tashqarida."""


@dataclass(frozen=True)
class DyadicParams:
    universe_bits: int
    gamma: float
    variant: Variant
    level_rows: int
    level_cols: int
    private: bool = False
    rho: Optional[float] = None
    level_beta: Optional[float] = None

    def __post_init__(self) -> None:
        if not isinstance(self.variant, Variant):
            object.__setattr__(self, "variant", Variant.parse(self.variant))
        if not 1 <= self.universe_bits <= MAX_UNIVERSE_BITS:
            raise DyadicParamsError(
                f"universe_bits must be in [1, {MAX_UNIVERSE_BITS}], got {self.universe_bits}"
            )
        if not 0.0 < self.gamma < 1.0:
            raise DyadicParamsError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.level_rows < 1 or self.level_cols < 1:
            raise DyadicParamsError("per-level rows and cols must be >= 1")
        if self.variant is Variant.COUNT_SKETCH and self.level_rows % 2 == 0:
            raise DyadicParamsError(f"DCS needs odd per-level rows, got {self.level_rows}")
        if self.private:
            if self.variant is not Variant.COUNT_SKETCH:
                raise DyadicParamsError("private dyadic sketches are defined for CountSketch levels only")
            if self.rho is None or not self.rho > 0:
                raise DyadicParamsError(f"private dyadic sketch needs rho > 0, got {self.rho}")
        if self.level_beta is None:
            object.__setattr__(self, "level_beta", self.gamma / self.levels)
        if not 0.0 < self.level_beta < 1.0:
            raise DyadicParamsError(f"level_beta must lie in (0, 1), got {self.level_beta}")

    @classmethod
    def build(
        cls,
        universe_bits: int,
        gamma: float,
        variant: "str | Variant" = Variant.COUNT_SKETCH,
        private: bool = False,
        rho: Optional[float] = None,
        row_scale: float = 1.0,
        col_scale: float = 1.0,
        level_beta: Optional[float] = None,
        amplify_beta: Optional[float] = None,
    ) -> "DyadicParams":
        """Darajalar soni va har bir daraja o'lchamini gamma dan hisoblash.

        d_q = max(3, odd ceil(ln(L / gamma))), w_q = ceil(sqrt(L d_q) / gamma),
        each scaled by its config constant. ``amplify_beta`` multiplies d_q by
        ceil(ln(1 / beta)).
        """
        variant = Variant.parse(variant)
        if not 1 <= universe_bits <= MAX_UNIVERSE_BITS:
            raise DyadicParamsError(f"universe_bits must be in [1, {MAX_UNIVERSE_BITS}], got {universe_bits}")
        if not 0.0 < gamma < 1.0:
            raise DyadicParamsError(f"gamma must lie in (0, 1), got {gamma}")
        if row_scale <= 0 or col_scale <= 0:
            raise DyadicParamsError("row_scale and col_scale must be positive")
        levels = universe_bits
        rows_raw = row_scale * math.log(levels / gamma)
        if amplify_beta is not None:
            if not 0.0 < amplify_beta < 1.0:
                raise DyadicParamsError(f"amplify_beta must lie in (0, 1), got {amplify_beta}")
            rows_raw *= math.ceil(math.log(1.0 / amplify_beta))
        rows = max(3, odd_ceil(rows_raw))
        cols = math.ceil(col_scale * math.sqrt(levels * rows) / gamma - 1e-9)
        return cls(
            universe_bits=universe_bits,
            gamma=gamma,
            variant=variant,
            level_rows=rows,
            level_cols=cols,
            private=private,
            rho=rho,
            level_beta=level_beta,
        )

    @property
    def levels(self) -> int:
        return self.universe_bits

    @property
    def universe(self) -> int:
        return 1 << self.universe_bits

    @property
    def budget(self) -> Optional[PrivacyBudget]:
        return PrivacyBudget(self.rho) if self.private else None

    @property
    def level_budget(self) -> Optional[PrivacyBudget]:
        if not self.private:
            return None
        return split_budget(self.budget, self.levels)

    @property
    def level_sigma(self) -> float:
        if not self.private:
            return 0.0
        return calibrate_sigma(self.level_rows, self.level_budget)

    @property
    def level_params(self) -> SketchParams:
        return SketchParams(
            gamma=self.gamma,
            beta=self.level_beta,
            variant=self.variant,
            rows=self.level_rows,
            cols=self.level_cols,
        )

    @property
    def space_bytes(self) -> int:
        return self.levels * self.level_rows * self.level_cols * BYTES_PER_COUNTER


class ExactLevel:
    """Exact net counts per dyadic node; oracle stand-in for a level sketch."""

    rho_spent = 0.0
    is_private = False

    def __init__(self) -> None:
        self._counts: Dict[int, int] = {}

    def update_many(self, keys: ItemLike, values: ItemLike) -> "ExactLevel":
        keys = np.atleast_1d(np.asarray(keys))
        values = np.atleast_1d(np.asarray(values, dtype=np.int64))
        if keys.size == 0:
            return self
        uniq, inverse = np.unique(keys, return_inverse=True)
        sums = np.bincount(inverse.ravel(), weights=values, minlength=uniq.size)
        for key, total in zip(uniq.tolist(), np.rint(sums).astype(np.int64).tolist()):
            if total:
                self._counts[key] = self._counts.get(key, 0) + total
        return self

    def update(self, op: StreamOp) -> "ExactLevel":
        self._counts[op.item] = self._counts.get(op.item, 0) + op.value
        return self

    def query_many(self, keys: ItemLike) -> np.ndarray:
        keys = np.atleast_1d(np.asarray(keys))
        return np.array([self._counts.get(k, 0) for k in keys.tolist()], dtype=np.float64)

    def total(self) -> int:
        return sum(self._counts.values())


Level = Union[CounterMatrix, ExactLevel]


class DyadicSketch:
    def __init__(self, params: DyadicParams, levels: List[Level], exact: bool = False):
        if len(levels) != params.levels:
            raise DyadicParamsError(f"expected {params.levels} levels, got {len(levels)}")
        self.params = params
        self.levels = levels
        self.exact = exact
        # ledger: fixed at construction, queries never spend budget
        self.rho_spent = params.rho if params.private else 0.0

    def _check_items(self, items: np.ndarray) -> np.ndarray:
        if items.dtype.kind == "i" and np.any(items < 0):
            raise UniverseError("items must be non-negative")
        items = items.astype(np.uint64)
        if np.any(items >= np.uint64(self.params.universe)):
            bad = int(items[items >= np.uint64(self.params.universe)][0])
            raise UniverseError(f"item {bad} is outside the universe [0, {self.params.universe})")
        return items

    def update_many(self, items: ItemLike, values: ItemLike) -> "DyadicSketch":
        """Har bir darajada floor(x / 2^j) kalitini yangilash."""
        items = self._check_items(np.atleast_1d(np.asarray(items)))
        values = np.atleast_1d(np.asarray(values, dtype=np.int64))
        for j, level in enumerate(self.levels):
            level.update_many(items >> np.uint64(j), values)
        return self

    def update(self, op: StreamOp) -> "DyadicSketch":
        """O(B) level updates, each touching only its own d counters."""
        if op.item >= self.params.universe:
            raise UniverseError(f"item {op.item} is outside the universe [0, {self.params.universe})")
        for j, level in enumerate(self.levels):
            level.update(StreamOp(op.item >> j, op.value))
        return self

    def prefix_count_many(self, xs: ItemLike) -> np.ndarray:
        """Estimated #{stream items < x} for each x in [0, U]."""
        xs = np.atleast_1d(np.asarray(xs))
        if xs.dtype.kind == "i" and np.any(xs < 0):
            raise UniverseError("prefix bound must be non-negative")
        xs = xs.astype(np.uint64)
        universe = np.uint64(self.params.universe)
        if np.any(xs > universe):
            raise UniverseError(f"prefix bound exceeds the universe size {self.params.universe}")
        result = np.zeros(xs.shape, dtype=np.float64)
        full = xs == universe
        inner = ~full
        for j, level in enumerate(self.levels):
            node = xs >> np.uint64(j)
            odd = inner & ((node & np.uint64(1)) == np.uint64(1))
            if np.any(odd):
                result[odd] += level.query_many(node[odd] - np.uint64(1))
        if np.any(full):
            # [0, U) = two top-level halves; no root level is stored
            top = self.levels[-1].query_many(np.array([0, 1], dtype=np.uint64))
            result[full] = top[0] + top[1]
        return result

    def prefix_count(self, x: int) -> float:
        return float(self.prefix_count_many([x])[0])

    def rank_many(self, xs: ItemLike) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs))
        if xs.dtype.kind == "i" and np.any(xs < 0):
            raise UniverseError("rank argument must be non-negative")
        xs = xs.astype(np.uint64)
        if np.any(xs >= np.uint64(self.params.universe)):
            raise UniverseError(f"rank argument must be below the universe size {self.params.universe}")
        return self.prefix_count_many(xs + np.uint64(1))

    def rank(self, x: int) -> float:
        return float(self.rank_many([x])[0])

    def quantile_query(self, phi: float, n: int) -> int:
        """Smallest x with rank(x) >= phi * n, by binary search over [0, U)."""
        if not 0.0 < phi < 1.0:
            raise ValueError(f"phi must lie in (0, 1), got {phi}")
        if n <= 0:
            raise ValueError(f"stream size must be positive, got {n}")
        target = phi * n
        lo, hi = 0, self.params.universe - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.rank(mid) >= target:
                hi = mid
            else:
                lo = mid + 1
        return lo

    @property
    def space_bytes(self) -> int:
        return self.params.space_bytes


def new_dyadic(
    params: DyadicParams,
    master_seed: int,
    noise_seed: Optional[int] = None,
    exact: bool = False,
) -> DyadicSketch:
    """L ta darajali dyadic sketch yaratish."""
    if exact:
        if params.private:
            raise DyadicParamsError("exact-counter mode carries no noise; drop the private flag")
        return DyadicSketch(params, [ExactLevel() for _ in range(params.levels)], exact=True)

    level_params = params.level_params
    level_seeds = [derive_key(master_seed, LEVEL_TAG, j) for j in range(params.levels)]
    if not params.private:
        levels: List[Level] = [new_nonprivate(level_params, s) for s in level_seeds]
        return DyadicSketch(params, levels)

    if noise_seed is None:
        raise DyadicParamsError("private dyadic sketch needs a noise seed")
    children = np.random.SeedSequence(noise_seed).spawn(params.levels)
    level_budget = params.level_budget
    levels = [
        new_private(level_params, level_budget, seed, child)
        for seed, child in zip(level_seeds, children)
    ]
    logger.debug(
        f"Private DCS: {params.levels} levels x {level_params.shape}, "
        f"rho0={level_budget.rho:.5f} sigma_q={params.level_sigma:.4f}"
    )
    return DyadicSketch(params, levels)


def quantile_error_bound(params: DyadicParams, n: int) -> float:
    """sqrt(L ln(L / gamma)) * (N / w_q + E_level)."""
    if n < 0:
        raise ValueError(f"stream size must be non-negative, got {n}")
    levels = params.levels
    e_level = 0.0
    if params.private:
        e_level = noise_bound_E(params.level_rows, params.level_cols, params.level_beta, params.level_budget)
    return math.sqrt(levels * math.log(levels / params.gamma)) * (n / params.level_cols + e_level)
