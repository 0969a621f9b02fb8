import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from ..sketches.dp_linear_sketch import new_private
from ..sketches.dp_mechanism import PrivacyBudget, noise_profile
from ..sketches.hashing import RowHashes
from ..sketches.linear_sketch import SketchParams, Variant, new_nonprivate
from .workload import Stream

logger = logging.getLogger(__name__)

QueryFn = Callable[[np.ndarray], np.ndarray]


class MetricError(ValueError):
    """Metrikani hisoblab bo'lmaydi."""


@dataclass
class ExactSummary:
    """Brute-force oracle: exact net counts, total mass and rank function."""

    freq: Dict[int, int]
    total: int
    sorted_items: np.ndarray
    _ids: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, dtype=np.uint64))
    _cumulative: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, dtype=np.int64))

    def counts_of(self, items: np.ndarray) -> np.ndarray:
        items = np.atleast_1d(np.asarray(items, dtype=np.uint64))
        return np.array([self.freq.get(x, 0) for x in items.tolist()], dtype=np.int64)

    def rank_many(self, xs: np.ndarray) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=np.uint64))
        pos = np.searchsorted(self._ids, xs, side="right")
        padded = np.concatenate([[0], self._cumulative])
        return padded[pos]


def exact_counts(stream: Stream) -> ExactSummary:
    """Har bir item uchun aniq net sanoq (oracle)."""
    if len(stream) == 0:
        return ExactSummary(freq={}, total=0, sorted_items=np.zeros(0, dtype=np.uint64))
    ids, inverse = np.unique(stream.items, return_inverse=True)
    sums = np.bincount(inverse.ravel(), weights=stream.values.astype(np.int64), minlength=ids.size)
    sums = np.rint(sums).astype(np.int64)
    nonzero = sums != 0
    ids, sums = ids[nonzero], sums[nonzero]
    freq = dict(zip(ids.tolist(), sums.tolist()))
    return ExactSummary(
        freq=freq,
        total=int(sums.sum()),
        sorted_items=ids[sums > 0],
        _ids=ids,
        _cumulative=np.cumsum(sums),
    )


def exact_rank(summary: ExactSummary, x: int) -> int:
    """R(x): net count of all items <= x."""
    return int(summary.rank_many([x])[0])


def exact_quantile_item(summary: ExactSummary, phi: float) -> int:
    """Smallest positive-count item whose exact rank reaches phi * N."""
    items = summary.sorted_items
    if items.size == 0:
        raise MetricError("no items with positive net count")
    ranks = summary.rank_many(items)
    hits = np.flatnonzero(ranks >= phi * summary.total)
    return int(items[hits[0]] if hits.size else items[-1])


def are(query_fn: QueryFn, summary: ExactSummary) -> float:
    """Average relative error over items with positive net count."""
    items = summary.sorted_items
    if items.size == 0:
        raise MetricError("ARE needs at least one item with positive net count")
    truth = summary.counts_of(items).astype(np.float64)
    estimates = np.asarray(query_fn(items), dtype=np.float64)
    return float(np.mean(np.abs(truth - estimates) / truth))


def _top_k(items: np.ndarray, scores: np.ndarray, k: int) -> set:
    # larger score first, ties by smaller id
    order = np.lexsort((items, -scores))
    return set(items[order[:k]].tolist())


def f1_topk(query_fn: QueryFn, summary: ExactSummary, k: int) -> float:
    items = summary.sorted_items
    if k < 1:
        raise MetricError(f"k must be >= 1, got {k}")
    if items.size < k:
        raise MetricError(f"top-{k} needs at least {k} distinct items, got {items.size}")
    truth = summary.counts_of(items).astype(np.float64)
    estimates = np.asarray(query_fn(items), dtype=np.float64)
    hit = len(_top_k(items, estimates, k) & _top_k(items, truth, k))
    if hit == 0:
        return 0.0
    precision = recall = hit / k
    return 2 * precision * recall / (precision + recall)


def avg_rank_error(rank_fn: QueryFn, summary: ExactSummary, m: int) -> float:
    """Mean |R_hat(x_i) - R(x_i)| over the i/(m+1) quantile items, i = 1..m."""
    if m < 1:
        raise MetricError(f"m must be >= 1, got {m}")
    if summary.total < 1:
        raise MetricError("rank error needs a stream with positive total mass")
    targets = np.array(
        [exact_quantile_item(summary, i / (m + 1)) for i in range(1, m + 1)],
        dtype=np.uint64,
    )
    truth = summary.rank_many(targets).astype(np.float64)
    estimates = np.asarray(rank_fn(targets), dtype=np.float64)
    return float(np.mean(np.abs(estimates - truth)))


@dataclass
class AdversarialReport:
    deviations: np.ndarray
    skipped: int
    sigma: float
    shift: float

    @property
    def successes(self) -> int:
        return int(self.deviations.size)

    @property
    def median_deviation(self) -> float:
        if self.deviations.size == 0:
            return math.nan
        return float(np.median(self.deviations))


def _find_colliders(
    hashes: RowHashes,
    x: int,
    candidates: np.ndarray,
) -> Optional[np.ndarray]:
    """Row i < d-1 gets one y colliding with x only there; the first half share
    x's sign in that row, the second half carry the opposite sign."""
    depth = hashes.depth
    idx = hashes.indices(candidates)
    signs = hashes.signs(candidates)
    x_idx = hashes.indices(np.array([x], dtype=np.uint64))[:, 0]
    x_sign = hashes.signs(np.array([x], dtype=np.uint64))[:, 0]
    collide = idx == x_idx[:, None]
    single = (collide.sum(axis=0) == 1) & (candidates != np.uint64(x))
    half = (depth - 1) // 2
    found = []
    for i in range(depth - 1):
        wanted = x_sign[i] if i < half else -x_sign[i]
        hits = np.flatnonzero(collide[i] & single & (signs[i] == wanted))
        if hits.size == 0:
            return None
        found.append(candidates[hits[0]])
    return np.array(found, dtype=np.uint64)


def adversarial_lowerbound_check(
    params: SketchParams,
    budget: Optional[PrivacyBudget],
    trials: int,
    universe_bits: int = 16,
    seed: int = 0,
    n_x: int = 100,
    max_scan: int = 1 << 20,
) -> AdversarialReport:
    """Build the worst-case database around one item x and measure |f_hat(x) - f_tilde(x)|.

    Each y_i weighs n_y >> E, so the noise-free median sits on the one row
    holding only x and the private estimate moves by that row's noise alone.
    """
    if params.variant is not Variant.COUNT_SKETCH:
        raise MetricError("the adversarial construction is defined for CountSketch")
    if params.rows < 3:
        raise MetricError("the adversarial construction needs at least 3 rows")
    if trials < 1:
        raise MetricError(f"trials must be >= 1, got {trials}")
    depth, width = params.rows, params.cols
    universe = 1 << universe_bits
    needed = depth * width * (1 + 1 / max(width - 1, 1)) ** (depth - 1)
    if universe < needed:
        logger.warning(f"Universe 2^{universe_bits} is below k*d*(1+1/(d-1))^(k-1)={needed:.0f}; searches may fail")

    private = budget is not None and budget.rho > 0
    if private:
        profile = noise_profile(depth, width, params.beta, budget)
        sigma, shift = profile.sigma, profile.shift
    else:
        sigma, shift = 0.0, 0.0
    n_y = n_x + 100 + math.ceil(20 * (shift + sigma))
    candidates = np.arange(min(universe, max_scan), dtype=np.uint64)

    deviations = []
    skipped = 0
    for trial, child in enumerate(np.random.SeedSequence(seed).spawn(trials)):
        master_seed, noise_seed, pick = (int(v) for v in child.generate_state(3, dtype=np.uint64))
        x = pick % universe
        hashes = RowHashes(master_seed, depth, width)
        colliders = _find_colliders(hashes, x, candidates)
        if colliders is None:
            skipped += 1
            logger.info(f"Adversarial trial {trial}: no colliders within {candidates.size} ids, skipped")
            continue

        items = np.concatenate([
            np.full(n_x, x, dtype=np.uint64),
            np.repeat(colliders, n_y),
        ])
        values = np.ones(items.size, dtype=np.int64)
        baseline = new_nonprivate(params, master_seed).update_many(items, values)
        f_tilde = baseline.query(x)
        if private:
            noisy = new_private(params, budget, master_seed, noise_seed).update_many(items, values)
            f_hat = noisy.query(x)
        else:
            f_hat = f_tilde
        deviations.append(abs(f_hat - f_tilde))

    return AdversarialReport(
        deviations=np.array(deviations, dtype=np.float64),
        skipped=skipped,
        sigma=sigma,
        shift=shift,
    )
