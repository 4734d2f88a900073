"""Numerical checks of the max-min structure of the execution game.

For a fixed state ``(t, x)`` and a supplied gradient surrogate ``V_x`` the
Hamiltonians are

    Model 1:  E_pi[-eta v^2 + v V_x + (R_xa + gamma_M) x a + R_aa a^2 / 2] + KL(pi || prior) / beta
    Model 2:  E_pi[-eta_hat v^2 + v V_x + R_va v a + R_aa a^2 / 2 + gamma_M x a] + KL(pi || prior) / beta

with ``eta_hat = eta - R_vv / 2``. :func:`saddle_check` computes max-min and
min-max by numerical search over ``v`` and over Gaussian ``(mean,
precision)`` pairs; each inner step uses its own closed form, so the two
orders are evaluated along independent routes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.special import logsumexp

from .entropy_core import QuadraticCost, kl_gaussian_array, minimize_entropy_functional
from .errors import BoundaryHit, NonConcave, PrecisionViolation
from .model_config import GaussianDist, ModelParams, PriorSchedule, RiskSpecModel1, RiskSpecModel2

MAX_DOUBLINGS = 5
V_GRID_POINTS = 2001
PI_GRID_POINTS = 81


@dataclass(frozen=True)
class HamiltonianContext:
    """State and model inputs for one Hamiltonian evaluation.

    ``v_x`` stands in for the value gradient and ``offset`` for
    ``V_t + sigma_X^2 V_xx / 2``; neither is derived from a value function.
    """

    model: int
    t: float
    x: float
    v_x: float
    params: ModelParams
    prior: Union[GaussianDist, PriorSchedule]
    risk: Union[RiskSpecModel1, RiskSpecModel2]
    offset: float = 0.0

    def __post_init__(self):
        if self.model not in (1, 2):
            raise ValueError("model must be 1 or 2")
        expected = RiskSpecModel1 if self.model == 1 else RiskSpecModel2
        if not isinstance(self.risk, expected):
            raise TypeError(f"model {self.model} needs a {expected.__name__}")
        prior = self.prior_at()
        if not prior.precision + self.params.beta * self.risk_at().r_aa > 0:
            raise PrecisionViolation("s + beta*R_aa must be > 0")

    def prior_at(self) -> GaussianDist:
        return self.prior if isinstance(self.prior, GaussianDist) else self.prior.at(self.t)

    def risk_at(self):
        return self.risk.at(self.t)

    @property
    def v_curvature(self) -> float:
        """``eta`` (Model 1) or ``eta_hat = eta - R_vv / 2`` (Model 2)."""
        if self.model == 1:
            return self.params.eta
        return self.params.eta - 0.5 * self.risk_at().r_vv

    def cost(self, v: float) -> QuadraticCost:
        """Coefficients of the ``a``-dependent part at trading rate ``v``."""
        r = self.risk_at()
        if self.model == 1:
            return QuadraticCost(r.r_aa, (r.r_xa + self.params.gamma_M) * self.x)
        return QuadraticCost(r.r_aa, r.r_va * v + self.params.gamma_M * self.x)


def hamiltonian(ctx: HamiltonianContext, v, pi: GaussianDist):
    """Hamiltonian at rate ``v`` and Gaussian ``pi`` from the Gaussian moments
    ``E[a] = mean`` and ``E[a^2] = mean^2 + 1/precision``."""
    if not pi.precision > 0:
        raise PrecisionViolation("pi precision must be > 0")
    return _hamiltonian_array(ctx, np.asarray(v, dtype=float), pi.mean, pi.precision)


def _hamiltonian_array(ctx, v, mean, precision):
    prior = ctx.prior_at()
    r = ctx.risk_at()
    first = mean
    second = mean * mean + 1.0 / precision
    if ctx.model == 1:
        linear = (r.r_xa + ctx.params.gamma_M) * ctx.x * first
    else:
        linear = (r.r_va * v + ctx.params.gamma_M * ctx.x) * first
    kl = kl_gaussian_array(mean, precision, prior.mean, prior.precision)
    return (ctx.offset - ctx.v_curvature * v * v + v * ctx.v_x + linear
            + 0.5 * r.r_aa * second + kl / ctx.params.beta)


def inner_argmin(ctx: HamiltonianContext, v: float) -> GaussianDist:
    """Minimizing posterior at rate ``v``; its precision is ``s + beta R_aa``."""
    post, _ = minimize_entropy_functional(ctx.cost(v), ctx.prior_at(), ctx.params.beta)
    return post


def _min_over_pi(ctx, v):
    # closed-form inner minimum at fixed v
    _, value = minimize_entropy_functional(ctx.cost(v), ctx.prior_at(), ctx.params.beta)
    return ctx.offset - ctx.v_curvature * v * v + v * ctx.v_x + value


def _max_over_v(ctx, mean):
    # vertex of the concave quadratic in v at fixed pi
    r = ctx.risk_at()
    slope = ctx.v_x + (r.r_va * mean if ctx.model == 2 else 0.0)
    return slope * slope / (4 * ctx.v_curvature)


class SaddleResult(NamedTuple):
    maxmin: float
    minmax: float
    gap: float
    v_argmax: float
    pi_argmin: GaussianDist
    widenings: int


def _default_v_range(ctx) -> Tuple[float, float]:
    slope = abs(ctx.v_x)
    if ctx.model == 2:
        r = ctx.risk_at()
        prior = ctx.prior_at()
        post = prior.precision + ctx.params.beta * r.r_aa
        # size of the linear-in-v term left after the inner minimum
        slope += abs(r.r_va) * (ctx.params.beta * abs(ctx.params.gamma_M * ctx.x)
                                + prior.precision * (abs(prior.mean) + prior.std)) / post
    scale = slope / ctx.v_curvature + 1.0
    return -scale, scale


def _default_pi_range(ctx, v_scale: float):
    prior = ctx.prior_at()
    beta = ctx.params.beta
    r = ctx.risk_at()
    if ctx.model == 1:
        c1 = abs(ctx.cost(0.0).c1)
    else:
        c1 = abs(r.r_va) * v_scale + abs(ctx.params.gamma_M * ctx.x)
    denom = prior.precision + beta * abs(r.r_aa)
    half = 10 * prior.std + 2 * beta * c1 / denom
    log_s = math.log(prior.precision)
    return (prior.mean - half, prior.mean + half), (log_s - 5.0, log_s + 10.0)


def _maxmin(ctx, lo, hi):
    widen = 0
    while True:
        grid = np.linspace(lo, hi, V_GRID_POINTS)
        values = np.array([_min_over_pi(ctx, v) for v in grid])
        i = int(np.argmax(values))
        if 0 < i < len(grid) - 1:
            break
        if widen == MAX_DOUBLINGS:
            raise BoundaryHit(f"max over v stuck at grid edge after {MAX_DOUBLINGS} doublings")
        center, half = 0.5 * (lo + hi), hi - lo
        lo, hi = center - half, center + half
        widen += 1
    res = minimize_scalar(lambda v: -_min_over_pi(ctx, v), bounds=(grid[i - 1], grid[i + 1]),
                          method="bounded", options={"xatol": 1e-12 * max(1.0, abs(grid[i]))})
    best_v = float(res.x) if -res.fun >= values[i] else float(grid[i])
    return max(-res.fun, values[i]), best_v, widen


def _minmax(ctx, mean_range, logp_range):
    widen = 0
    (m_lo, m_hi), (l_lo, l_hi) = mean_range, logp_range
    while True:
        means = np.linspace(m_lo, m_hi, PI_GRID_POINTS)
        logs = np.linspace(l_lo, l_hi, PI_GRID_POINTS)
        mm, ll = np.meshgrid(means, logs, indexing="ij")
        vals = _objective_minmax(ctx, mm, np.exp(ll))
        i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
        edge_m = i in (0, PI_GRID_POINTS - 1)
        edge_l = j in (0, PI_GRID_POINTS - 1)
        if not (edge_m or edge_l):
            break
        if widen == MAX_DOUBLINGS:
            raise BoundaryHit(f"min over pi stuck at grid edge after {MAX_DOUBLINGS} doublings")
        if edge_m:
            c, h = 0.5 * (m_lo + m_hi), m_hi - m_lo
            m_lo, m_hi = c - h, c + h
        if edge_l:
            c, h = 0.5 * (l_lo + l_hi), l_hi - l_lo
            l_lo, l_hi = c - h, c + h
        widen += 1

    # polish in coordinates scaled to the grid spacing
    m0, l0 = means[i], logs[j]
    dm, dl = means[1] - means[0], logs[1] - logs[0]

    def f(z):
        return float(_objective_minmax(ctx, m0 + z[0] * dm, math.exp(l0 + z[1] * dl)))

    res = minimize(f, np.zeros(2), method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 0.0, "maxiter": 20000, "maxfev": 40000})
    z = res.x if res.fun <= vals[i, j] else np.zeros(2)
    mean, prec = m0 + z[0] * dm, math.exp(l0 + z[1] * dl)
    return min(res.fun, float(vals[i, j])), GaussianDist(float(mean), float(prec)), widen


def _objective_minmax(ctx, mean, precision):
    r = ctx.risk_at()
    prior = ctx.prior_at()
    second = mean * mean + 1.0 / precision
    linear = ctx.params.gamma_M * ctx.x * mean
    if ctx.model == 1:
        linear = linear + r.r_xa * ctx.x * mean
    kl = kl_gaussian_array(mean, precision, prior.mean, prior.precision)
    return (ctx.offset + _max_over_v(ctx, mean) + linear + 0.5 * r.r_aa * second
            + kl / ctx.params.beta)


def saddle_check(ctx: HamiltonianContext, v_grid: Optional[Tuple[float, float]] = None,
                 pi_grid: Optional[Tuple[Tuple[float, float], Tuple[float, float]]] = None) -> SaddleResult:
    """Compare ``max_v min_pi H`` with ``min_pi max_v H``.

    Parameters
    ----------
    v_grid : (lo, hi), optional
        Search interval for ``v``.
    pi_grid : ((mean_lo, mean_hi), (log_precision_lo, log_precision_hi)), optional
        Search box for the Gaussian ``pi``.

    Grids are doubled (at most five times) when the optimizer lands on an
    edge. Raises :class:`NonConcave` when ``H`` is not concave in ``v``.
    """
    if not ctx.v_curvature > 0:
        raise NonConcave(f"Hamiltonian is not concave in v (quadratic coefficient {-ctx.v_curvature:.6g})")
    lo, hi = v_grid if v_grid is not None else _default_v_range(ctx)
    maxmin, v_best, w1 = _maxmin(ctx, lo, hi)
    mean_range, logp_range = pi_grid if pi_grid is not None else _default_pi_range(ctx, max(abs(lo), abs(hi)))
    minmax, pi_best, w2 = _minmax(ctx, mean_range, logp_range)
    return SaddleResult(maxmin=float(maxmin), minmax=float(minmax), gap=abs(maxmin - minmax),
                        v_argmax=v_best, pi_argmin=pi_best, widenings=w1 + w2)


def inner_min_values(ctx: HamiltonianContext, v: float, n_points: int = 20001) -> Tuple[float, float, float]:
    """Inner minimum of the Model 1 Isaacs expression, three ways.

    1. the reduced quadratic in ``x`` built from ``A_1``, ``B_1`` and ``c``;
    2. ``-(1/beta) log`` of the Gaussian integral, by completing the square;
    3. the same log-integral by trapezoidal quadrature in the log domain.

    ``ctx.offset`` stands in for ``V_t + sigma_X^2 V_xx / 2``.
    """
    if ctx.model != 1:
        raise ValueError("the reduction check applies to Model 1")
    p = ctx.params
    prior = ctx.prior_at()
    r = ctx.risk_at()
    beta, s, m, x = p.beta, prior.precision, prior.mean, ctx.x
    post = s + beta * r.r_aa
    if not post > 0:
        raise PrecisionViolation(f"s + beta*R_aa = {post} <= 0")
    k = r.r_xa + p.gamma_M
    common = (ctx.offset + v * ctx.v_x + 0.5 * p.gamma * p.sigma_X**2 + p.rho * p.sigma_S * p.sigma_X
              - p.eta * v * v)

    a1 = r.r_xx - beta * k * k / post
    b1 = k * s * m / post
    reduced = (common - math.log(s / post) / (2 * beta) + 0.5 * a1 * x * x + b1 * x
               + s * m * m * r.r_aa / (2 * post))

    # exponent: -s/2 (a-m)^2 - beta (k x a + R_aa a^2 / 2)
    shifted = s * m - beta * k * x
    log_integral = 0.5 * math.log(s / post) + shifted * shifted / (2 * post) - 0.5 * s * m * m
    completed = common + 0.5 * r.r_xx * x * x - log_integral / beta

    mean = shifted / post
    sd = 1.0 / math.sqrt(post)
    grid = np.linspace(mean - 14 * sd, mean + 14 * sd, n_points)
    h = grid[1] - grid[0]
    log_f = prior.logpdf(grid) - beta * (k * x * grid + 0.5 * r.r_aa * grid * grid)
    weights = np.full(n_points, h)
    weights[[0, -1]] *= 0.5
    log_q = logsumexp(log_f, b=weights)
    quadrature = common + 0.5 * r.r_xx * x * x - log_q / beta
    return reduced, completed, float(quadrature)


def inner_min_reduction_check(ctx: HamiltonianContext, v: float) -> float:
    """Largest pairwise gap among :func:`inner_min_values`, relative to
    ``max(1, |value|)``."""
    vals = inner_min_values(ctx, v)
    spread = max(vals) - min(vals)
    return spread / max(1.0, max(abs(u) for u in vals))
