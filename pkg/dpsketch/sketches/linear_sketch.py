"""Count-Min and CountSketch over the turnstile model.

A sketch is a d x w counter matrix plus one index hash and one sign hash per
row. Count-Min uses g_r = +1 and answers with the row minimum, CountSketch
answers with the median of the signed row counters. Private sketches only
differ in their initial counters (see dp_linear_sketch).
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from .hashing import MAX_WIDTH, ItemLike, RowHashes

logger = logging.getLogger(__name__)

BYTES_PER_COUNTER = 8
EXACT_LIMIT = 1 << 53


class SketchParamsError(ValueError):
    """Sketch parametrlari noto'g'ri."""


class MergeError(ValueError):
    """Ikki sketchni birlashtirib bo'lmaydi."""


class Variant(str, Enum):
    COUNT_MIN = "cm"
    COUNT_SKETCH = "cs"

    @classmethod
    def parse(cls, raw: "str | Variant") -> "Variant":
        if isinstance(raw, Variant):
            return raw
        lowered = str(raw).strip().lower()
        aliases = {
            "cm": cls.COUNT_MIN,
            "count_min": cls.COUNT_MIN,
            "count-min": cls.COUNT_MIN,
            "cs": cls.COUNT_SKETCH,
            "count_sketch": cls.COUNT_SKETCH,
            "countsketch": cls.COUNT_SKETCH,
        }
        if lowered not in aliases:
            raise SketchParamsError(f"Unknown sketch variant: {raw!r}")
        return aliases[lowered]


def _check_unit_interval(name: str, value: float) -> None:
    if not (0.0 < value < 1.0):
        raise SketchParamsError(f"{name} must lie in (0, 1), got {value}")


def odd_ceil(x: float) -> int:
    n = max(1, math.ceil(x - 1e-12))
    return n if n % 2 == 1 else n + 1


def rows_for_beta(beta: float, variant: Variant) -> int:
    """d = ceil(ln(2/beta)), rounded up to odd for CountSketch."""
    _check_unit_interval("beta", beta)
    raw = math.log(2.0 / beta)
    if variant is Variant.COUNT_SKETCH:
        return odd_ceil(raw)
    return max(1, math.ceil(raw - 1e-12))


@dataclass(frozen=True)
class SketchParams:
    gamma: float
    beta: float
    variant: Variant
    rows: int
    cols: int

    def __post_init__(self) -> None:
        _check_unit_interval("gamma", self.gamma)
        _check_unit_interval("beta", self.beta)
        if not isinstance(self.variant, Variant):
            object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.rows < 1:
            raise SketchParamsError(f"rows must be >= 1, got {self.rows}")
        if not 1 <= self.cols < MAX_WIDTH:
            raise SketchParamsError(f"cols must be in [1, 2**32), got {self.cols}")
        if self.variant is Variant.COUNT_SKETCH and self.rows % 2 == 0:
            raise SketchParamsError(f"CountSketch needs an odd row count, got {self.rows}")

    @classmethod
    def from_accuracy(cls, gamma: float, beta: float, variant: "str | Variant") -> "SketchParams":
        """gamma va beta dan d, w ni hisoblash."""
        variant = Variant.parse(variant)
        _check_unit_interval("gamma", gamma)
        rows = rows_for_beta(beta, variant)
        cols = max(1, math.ceil(1.0 / gamma - 1e-9))
        return cls(gamma=gamma, beta=beta, variant=variant, rows=rows, cols=cols)

    @classmethod
    def from_space(cls, space_kb: float, beta: float, variant: "str | Variant") -> "SketchParams":
        """Fixed byte budget: rows from beta first, then w = floor(budget / (8 d))."""
        variant = Variant.parse(variant)
        if space_kb <= 0:
            raise SketchParamsError(f"space budget must be positive, got {space_kb} KB")
        rows = rows_for_beta(beta, variant)
        cols = int(space_kb * 1024 // (BYTES_PER_COUNTER * rows))
        if cols < 1:
            raise SketchParamsError(
                f"space budget {space_kb} KB is too small for {rows} rows"
            )
        gamma = min(1.0 / cols, 0.999999)
        return cls(gamma=gamma, beta=beta, variant=variant, rows=rows, cols=cols)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @property
    def space_bytes(self) -> int:
        return self.rows * self.cols * BYTES_PER_COUNTER


@dataclass(frozen=True)
class StreamOp:
    item: int
    value: int

    def __post_init__(self) -> None:
        if self.value not in (-1, 1):
            raise ValueError(f"StreamOp value must be +1 or -1, got {self.value}")
        if self.item < 0:
            raise ValueError(f"StreamOp item must be non-negative, got {self.item}")


class CounterMatrix:
    """d x w counters: an exact integer layer plus an initialization-noise layer."""

    def __init__(
        self,
        params: SketchParams,
        master_seed: int,
        noise: Optional[np.ndarray] = None,
        rho_spent: float = 0.0,
        noise_profile=None,
    ):
        self.params = params
        self.master_seed = master_seed
        self.hashes = RowHashes(master_seed, params.rows, params.cols)
        self.counts = np.zeros(params.shape, dtype=np.int64)
        if noise is None:
            self.noise = np.zeros(params.shape, dtype=np.float64)
            self.is_private = False
        else:
            noise = np.asarray(noise, dtype=np.float64)
            if noise.shape != params.shape:
                raise SketchParamsError(
                    f"noise shape {noise.shape} does not match sketch shape {params.shape}"
                )
            self.noise = noise.copy()
            self.is_private = True
        self.rho_spent = float(rho_spent)
        self.noise_profile = noise_profile

    @property
    def shape(self) -> Tuple[int, int]:
        return self.params.shape

    @property
    def values(self) -> np.ndarray:
        return self.noise + self.counts

    def _signs(self, items: ItemLike) -> np.ndarray:
        if self.params.variant is Variant.COUNT_MIN:
            n = np.atleast_1d(np.asarray(items)).size
            return np.ones((self.params.rows, n), dtype=np.int8)
        return self.hashes.signs(items)

    def update_many(self, items: ItemLike, values: ItemLike) -> "CounterMatrix":
        """Bir nechta turnstile amallarini bir yo'la qo'llash."""
        items = np.atleast_1d(np.asarray(items))
        values = np.atleast_1d(np.asarray(values, dtype=np.int64))
        if items.shape != values.shape:
            raise ValueError("items and values must have the same length")
        if items.size == 0:
            return self
        if np.any((values != 1) & (values != -1)):
            raise ValueError("turnstile values must be +1 or -1")
        idx = self.hashes.indices(items)
        signs = self._signs(items).astype(np.int64)
        rows = np.broadcast_to(np.arange(self.params.rows)[:, None], idx.shape)
        np.add.at(self.counts, (rows, idx), values * signs)
        self._check_exact(self.counts[rows, idx])
        return self

    def update(self, op: StreamOp) -> "CounterMatrix":
        """O(d): adds g_r(x) * v at [r, h_r(x)] in every row."""
        idx = self.hashes.indices(op.item)[:, 0]
        rows = np.arange(self.params.rows)
        if self.params.variant is Variant.COUNT_MIN:
            self.counts[rows, idx] += op.value
        else:
            self.counts[rows, idx] += op.value * self.hashes.signs(op.item)[:, 0].astype(np.int64)
        self._check_exact(self.counts[rows, idx])
        return self

    @staticmethod
    def _check_exact(touched: np.ndarray) -> None:
        if touched.size and np.abs(touched).max() >= EXACT_LIMIT:
            logger.warning("Counter magnitude reached 2**53; float values are no longer exact")

    def query_many(self, items: ItemLike) -> np.ndarray:
        """Item(lar) chastotasini baholash (min yoki median)."""
        items = np.atleast_1d(np.asarray(items))
        if items.size == 0:
            return np.zeros(0, dtype=np.float64)
        idx = self.hashes.indices(items)
        rows = np.arange(self.params.rows)[:, None]
        arr = self.values[rows, idx]
        if self.params.variant is Variant.COUNT_MIN:
            return arr.min(axis=0)
        arr = arr * self.hashes.signs(items)
        return np.median(arr, axis=0)

    def query(self, item: int) -> float:
        return float(self.query_many([item])[0])

    def copy(self) -> "CounterMatrix":
        clone = CounterMatrix.__new__(CounterMatrix)
        clone.params = self.params
        clone.master_seed = self.master_seed
        clone.hashes = self.hashes
        clone.counts = self.counts.copy()
        clone.noise = self.noise.copy()
        clone.is_private = self.is_private
        clone.rho_spent = self.rho_spent
        clone.noise_profile = self.noise_profile
        return clone

    def __repr__(self) -> str:
        return (
            f"CounterMatrix(variant={self.params.variant.value}, shape={self.shape}, "
            f"private={self.is_private}, rho_spent={self.rho_spent})"
        )


def new_nonprivate(params: SketchParams, master_seed: int) -> CounterMatrix:
    return CounterMatrix(params, master_seed)


def update(sketch: CounterMatrix, op: StreamOp) -> CounterMatrix:
    return sketch.update(op)


def query(sketch: CounterMatrix, item: int) -> float:
    return sketch.query(item)


def merge(a: CounterMatrix, b: CounterMatrix, force: bool = False) -> CounterMatrix:
    """Counter-wise sum of two sketches built with the same params and seeds.

    Two private inputs are refused unless ``force`` is set; the forced result
    carries both noise layers and reports the summed zCDP budget.
    """
    if a.params != b.params:
        raise MergeError(f"params differ: {a.params} vs {b.params}")
    if a.master_seed != b.master_seed:
        raise MergeError(f"hash seeds differ: {a.master_seed} vs {b.master_seed}")
    if a.is_private and b.is_private and not force:
        raise MergeError("refusing to merge two private sketches: noise variance would double")

    merged = a.copy()
    merged.counts = a.counts + b.counts
    merged.noise = a.noise + b.noise
    merged.is_private = a.is_private or b.is_private
    merged.rho_spent = a.rho_spent + b.rho_spent
    if a.is_private and b.is_private:
        logger.warning(
            f"Forced merge of two private sketches, combined budget rho={merged.rho_spent}"
        )
        merged.noise_profile = None
    else:
        merged.noise_profile = a.noise_profile if a.is_private else b.noise_profile
    return merged
