"""Quadratic cost regularized by relative entropy against a Gaussian prior.

The closed-form minimizer lives here together with grid-based tools
(discretized densities, the functional evaluated by quadrature and the
Gibbs-form posterior) that serve as independent numerical oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from .errors import DegenerateNormalizer, PrecisionViolation, SupportTooNarrow
from .model_config import MAX_PRECISION, GaussianDist

DEFAULT_GRID_POINTS = 20001
DEFAULT_GRID_WIDTH = 10.0  # in standard deviations
COVERAGE_SDS = 8.0


@dataclass(frozen=True)
class QuadraticCost:
    """Cost ``c2 * a^2 / 2 + c1 * a`` of the market trading rate."""

    c2: float
    c1: float

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        return 0.5 * self.c2 * a * a + self.c1 * a


class DiscretizedDensity:
    """Density sampled on a uniform grid.

    ``weights`` are density values, so ``h * weights.sum() == 1``. When the
    density was built from a log-density the log values are kept too, which
    lets far-tail points (where ``weights`` underflows) still carry mass
    information through :func:`gibbs_posterior_oracle`.
    """

    def __init__(self, grid, weights, log_weights=None, normalize=True):
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size < 3:
            raise ValueError("grid must be one-dimensional with at least 3 points")
        h = (grid[-1] - grid[0]) / (grid.size - 1)
        if not h > 0 or not np.allclose(np.diff(grid), h, rtol=1e-9, atol=0):
            raise ValueError("grid must be uniform and increasing")
        self.grid = grid
        self.h = float(h)
        if log_weights is not None:
            log_weights = np.asarray(log_weights, dtype=float)
            if normalize:
                log_weights = log_weights - (logsumexp(log_weights) + math.log(self.h))
                # large log values leave rounding of order 1e-16 |log w| in the mass
                log_weights = log_weights - math.log(self.h * np.exp(log_weights).sum())
            self.log_weights = log_weights
            self.weights = np.exp(log_weights)
        else:
            weights = np.asarray(weights, dtype=float)
            if np.any(weights < 0) or not np.all(np.isfinite(weights)):
                raise ValueError("weights must be finite and nonnegative")
            if normalize:
                total = self.h * weights.sum()
                if not total > 0:
                    raise DegenerateNormalizer("density has zero mass on the grid")
                weights = weights / total
            self.weights = weights
            with np.errstate(divide="ignore"):
                self.log_weights = np.log(weights)
        mass = self.h * self.weights.sum()
        if abs(mass - 1.0) > 1e-10:
            raise ValueError(f"density mass {mass} differs from 1")

    @classmethod
    def from_gaussian(cls, dist: GaussianDist, grid) -> "DiscretizedDensity":
        return cls(grid, None, log_weights=dist.logpdf(grid))

    def mean(self) -> float:
        return float(self.h * np.sum(self.weights * self.grid))

    def variance(self) -> float:
        mu = self.mean()
        return float(self.h * np.sum(self.weights * (self.grid - mu) ** 2))

    def total_variation(self, other: "DiscretizedDensity") -> float:
        if self.grid.shape != other.grid.shape or not np.allclose(self.grid, other.grid):
            raise ValueError("densities live on different grids")
        return 0.5 * self.h * float(np.abs(self.weights - other.weights).sum())


def _check_prior(prior: GaussianDist) -> None:
    if not prior.precision > 0:
        raise PrecisionViolation("prior precision must be > 0")
    if prior.precision > MAX_PRECISION:
        raise PrecisionViolation(f"prior precision {prior.precision} exceeds {MAX_PRECISION:g}; "
                                 "Dirac priors are only handled as limits")


def kl_gaussian(p: GaussianDist, q: GaussianDist) -> float:
    """Kullback-Leibler divergence ``KL(p || q)`` of two normal laws."""
    sp, sq = p.precision, q.precision
    if not (sp > 0 and sq > 0):
        raise PrecisionViolation("precisions must be > 0")
    d = sq / sp - 1.0
    # d - log1p(d) keeps full precision when the precisions nearly agree
    return 0.5 * ((d - math.log1p(d)) + sq * (p.mean - q.mean) ** 2)


def kl_gaussian_array(mean, precision, prior_mean, prior_precision):
    """Vectorized ``KL(N(mean, 1/precision) || N(prior_mean, 1/prior_precision))``."""
    mean = np.asarray(mean, dtype=float)
    ratio = np.asarray(prior_precision, dtype=float) / np.asarray(precision, dtype=float)
    d = ratio - 1.0
    return 0.5 * ((d - np.log1p(d)) + prior_precision * (mean - prior_mean) ** 2)


def minimize_entropy_functional(cost: QuadraticCost, prior: GaussianDist,
                                beta: float) -> Tuple[GaussianDist, float]:
    """Minimize ``E_pi[cost(a)] + KL(pi || prior) / beta`` over densities ``pi``.

    The minimizer is Gaussian with precision ``s + beta c2`` and mean
    ``(s m - beta c1) / (s + beta c2)``.

    Returns
    -------
    posterior : GaussianDist
    min_value : float
    """
    if not beta > 0:
        raise ValueError("beta must be > 0")
    _check_prior(prior)
    s, m = prior.precision, prior.mean
    post = s + beta * cost.c2
    if not post > 0:
        raise PrecisionViolation(f"s + beta*c2 = {post} <= 0")
    shifted = s * m - beta * cost.c1
    w = shifted / post
    # s m^2 / 2b - (s m - b c1)^2 / (2 b post), expanded to avoid cancellation
    quad = (s * m * m * cost.c2 + 2 * s * m * cost.c1 - beta * cost.c1**2) / (2 * post)
    value = math.log1p(beta * cost.c2 / s) / (2 * beta) + quad
    return GaussianDist(w, post), value


def oracle_grid(prior: GaussianDist, posterior: Optional[GaussianDist] = None,
                width: float = DEFAULT_GRID_WIDTH, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Uniform grid centered at the prior mean covering ``width`` of the
    larger standard deviation around both the prior and the posterior."""
    sd = prior.std if posterior is None else max(prior.std, posterior.std)
    lo, hi = prior.mean - width * sd, prior.mean + width * sd
    if posterior is not None:
        half = max(abs(posterior.mean - prior.mean) + width * sd, width * sd)
        lo, hi = prior.mean - half, prior.mean + half
    return np.linspace(lo, hi, n_points)


def functional_value(pi: DiscretizedDensity, cost: QuadraticCost, prior: GaussianDist,
                     beta: float) -> float:
    """Riemann-sum value of ``E_pi[cost] + KL(pi || prior) / beta`` on ``pi``'s grid.

    Zero-weight points contribute nothing (``0 log 0 = 0``).
    """
    _check_prior(prior)
    posterior, _ = minimize_entropy_functional(cost, prior, beta)
    spread = COVERAGE_SDS * posterior.std
    need_lo = min(prior.mean, posterior.mean) - spread
    need_hi = max(prior.mean, posterior.mean) + spread
    if pi.grid[0] > need_lo or pi.grid[-1] < need_hi:
        raise SupportTooNarrow(
            f"grid [{pi.grid[0]:.6g}, {pi.grid[-1]:.6g}] must cover [{need_lo:.6g}, {need_hi:.6g}]")
    w = pi.weights
    mask = w > 0
    a = pi.grid[mask]
    log_ratio = pi.log_weights[mask] - prior.logpdf(a)
    terms = cost(a) + log_ratio / beta
    return float(pi.h * np.sum(w[mask] * terms))


def gibbs_posterior_oracle(prior: DiscretizedDensity,
                           integrand: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]],
                           beta: float) -> DiscretizedDensity:
    """Gibbs reweighting ``pi(a) ~ prior(a) exp(-beta * integrand(a))`` on the grid."""
    values = integrand(prior.grid) if callable(integrand) else np.asarray(integrand, dtype=float)
    if values.shape != prior.grid.shape:
        raise ValueError("integrand must be sampled on the prior grid")
    if not np.all(np.isfinite(values)):
        raise ValueError("integrand must be finite on the grid")
    log_w = prior.log_weights - beta * values
    if not np.any(np.isfinite(log_w)):
        raise DegenerateNormalizer("all Gibbs weights underflow to zero")
    top = np.max(log_w)
    # check for underflow in the linear domain relative to the peak
    if not np.any(np.exp(log_w - top) > 0):
        raise DegenerateNormalizer("all Gibbs weights underflow to zero")
    return DiscretizedDensity(prior.grid, None, log_weights=log_w)
