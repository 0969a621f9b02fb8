"""Private Count-Min / CountSketch: Gaussian noise at initialization only.

Update and query are the non-private ones from linear_sketch, so a private
sketch answers any number of queries without spending more budget.
"""

import logging
from typing import Tuple, Union

import numpy as np

from .dp_mechanism import PrivacyBudget, noise_profile, sample_gaussian
from .linear_sketch import CounterMatrix, SketchParams, Variant

logger = logging.getLogger(__name__)


def new_private(
    params: SketchParams,
    budget: PrivacyBudget,
    master_seed: int,
    noise_seed: Union[int, np.random.SeedSequence],
) -> CounterMatrix:
    """Noise bilan ishga tushirilgan xususiy sketch yaratish.

    CountSketch counters start at N(0, sigma^2); Count-Min counters start at
    E + N(0, sigma^2) so that estimates do not underestimate w.h.p.
    """
    budget.require_positive()
    profile = noise_profile(params.rows, params.cols, params.beta, budget)
    rng = np.random.default_rng(noise_seed)
    mean = profile.shift if params.variant is Variant.COUNT_MIN else 0.0
    noise = sample_gaussian(rng, mean, profile.sigma, size=params.shape)
    logger.debug(
        f"Private {params.variant.value} sketch {params.shape}: "
        f"sigma={profile.sigma:.4f} E={profile.shift:.4f} rho={budget.rho}"
    )
    return CounterMatrix(
        params,
        master_seed,
        noise=noise,
        rho_spent=budget.rho,
        noise_profile=profile,
    )


def additional_error_bound(params: SketchParams, budget: PrivacyBudget) -> Tuple[float, float]:
    """Uniform bound on f_hat(x) - f_tilde(x) for all x, w.p. 1 - beta/2."""
    shift = noise_profile(params.rows, params.cols, params.beta, budget).shift
    if params.variant is Variant.COUNT_MIN:
        return 0.0, 2.0 * shift
    return -shift, shift


def pointwise_error_bound(
    params: SketchParams,
    budget: PrivacyBudget,
    n: int,
) -> Tuple[float, float]:
    """Bounds on f_hat(x) - f(x) for one item, w.p. 1 - beta."""
    if n < 0:
        raise ValueError(f"stream size must be non-negative, got {n}")
    lower, upper = additional_error_bound(params, budget)
    hash_error = params.gamma * n
    if params.variant is Variant.COUNT_MIN:
        return lower, hash_error + upper
    return -hash_error + lower, hash_error + upper
