"""Gaussian mechanism and zCDP accounting.

Budgets are tracked in zCDP (rho). (epsilon, delta) figures are a reporting
view only, via rho + 2 sqrt(rho ln(1/delta)).
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

logger = logging.getLogger(__name__)


class PrivacyParamsError(ValueError):
    """Maxfiylik parametrlari noto'g'ri."""


@dataclass(frozen=True)
class PrivacyBudget:
    rho: float

    def __post_init__(self) -> None:
        if math.isnan(self.rho) or self.rho < 0:
            raise PrivacyParamsError(f"rho must be non-negative, got {self.rho}")

    def require_positive(self) -> "PrivacyBudget":
        if self.rho <= 0:
            raise PrivacyParamsError(f"private construction needs rho > 0, got {self.rho}")
        return self

    def __add__(self, other: "PrivacyBudget") -> "PrivacyBudget":
        return PrivacyBudget(self.rho + other.rho)


@dataclass(frozen=True)
class NoiseProfile:
    sigma: float
    shift: float
    rows: int
    cols: int
    beta: float


def _check_rows(d: int) -> None:
    if d < 1:
        raise PrivacyParamsError(f"rows must be >= 1, got {d}")


def l2_sensitivity(d: int) -> float:
    """Replacing one item moves two counters per row by one: sqrt(2 d)."""
    _check_rows(d)
    return math.sqrt(2 * d)


def calibrate_sigma(d: int, budget: PrivacyBudget) -> float:
    """sigma = sqrt(Delta_2^2 / (2 rho)) = sqrt(d / rho)."""
    _check_rows(d)
    budget.require_positive()
    if math.isinf(budget.rho):
        return 0.0
    return math.sqrt(d / budget.rho)


def noise_bound_E(d: int, w: int, beta: float, budget: PrivacyBudget) -> float:
    """All d*w noises lie within [-E, E] except with probability beta/2."""
    _check_rows(d)
    if w < 1:
        raise PrivacyParamsError(f"cols must be >= 1, got {w}")
    if not 0.0 < beta < 1.0:
        raise PrivacyParamsError(f"beta must lie in (0, 1), got {beta}")
    sigma = calibrate_sigma(d, budget)
    return sigma * math.sqrt(2.0 * math.log(4.0 * d * w / beta))


def noise_profile(d: int, w: int, beta: float, budget: PrivacyBudget) -> NoiseProfile:
    return NoiseProfile(
        sigma=calibrate_sigma(d, budget),
        shift=noise_bound_E(d, w, beta, budget),
        rows=d,
        cols=w,
        beta=beta,
    )


def zcdp_to_dp(budget: PrivacyBudget, delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise PrivacyParamsError(f"delta must lie in (0, 1), got {delta}")
    rho = budget.rho
    return rho + 2.0 * math.sqrt(rho * math.log(1.0 / delta))


def split_budget(budget: PrivacyBudget, parts: int) -> PrivacyBudget:
    """Additive composition: ``parts`` mechanisms at rho/parts each cost rho."""
    if parts < 1:
        raise PrivacyParamsError(f"parts must be >= 1, got {parts}")
    return PrivacyBudget(budget.rho / parts)


def compose(*budgets: PrivacyBudget) -> PrivacyBudget:
    return PrivacyBudget(math.fsum(b.rho for b in budgets))


def sample_gaussian(
    rng: np.random.Generator,
    mean: float,
    sigma: float,
    size: Optional[Union[int, tuple]] = None,
):
    """Draw N(mean, sigma^2) from a caller-owned generator.

    This is the only place noise enters a sketch; a discrete Gaussian sampler
    would replace it here.
    """
    if math.isnan(sigma) or sigma < 0:
        raise PrivacyParamsError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        if size is None:
            return float(mean)
        return np.full(size, float(mean), dtype=np.float64)
    draws = rng.normal(loc=mean, scale=sigma, size=size)
    if size is None:
        return float(draws)
    return draws
