"""Closed-form value coefficients, feedback strategies, expected inventory
paths and optimal posteriors for the two linear-quadratic models.

Both models share the same structure: the value function is
``V(t, x) = H2(t) x^2 / 2 + H1(t) x + H0(t)`` and the optimal trading rate
is affine in inventory, ``v*(t, x) = slope(t) * x + intercept(t)``.
:class:`LinearQuadraticStrategy` holds everything that only depends on that
structure; the subclasses supply ``H2``, ``H1`` and ``H0``.
"""

from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np
from scipy.integrate import simpson

from .errors import ClosedFormUnavailable, H0Unavailable, OutOfHorizon, PrecisionViolation
from .model_config import (
    GaussianDist,
    Model1Coeffs,
    Model2Coeffs,
    ModelParams,
    PriorSchedule,
    RiskSpecModel1,
    RiskSpecModel2,
    derive_model1_coeffs,
    derive_model2_coeffs,
)

TRAJECTORY_QUAD_POINTS = 2001
_TIME_SLACK = 1e-12


def _sinh_ratio(u_num, u_den):
    """``sinh(u_num) / sinh(u_den)`` for positive arguments without overflow."""
    u_num = np.asarray(u_num, dtype=float)
    u_den = np.asarray(u_den, dtype=float)
    return np.exp(u_num - u_den) * (-np.expm1(-2 * u_num)) / (-np.expm1(-2 * u_den))


def _coth(u):
    return 1.0 / np.tanh(u)


def _scalar(value):
    return float(value) if np.ndim(value) == 0 else value


class LinearQuadraticStrategy:
    """Shared evaluation logic for affine-feedback optimal strategies."""

    model: int = 0
    provenance: str = ""

    def __init__(self, params: ModelParams, prior: PriorSchedule, risk):
        self.params = params
        self.prior = prior
        self.risk = risk

    # subclasses provide these
    def h2(self, t):
        raise NotImplementedError

    def h1(self, t):
        raise NotImplementedError

    def h0(self, t):
        raise H0Unavailable("H0 is not available for this strategy")

    def _check_time(self, t):
        t = np.asarray(t, dtype=float)
        T = self.params.horizon
        if np.any(t < -_TIME_SLACK * T) or np.any(t > T * (1 + _TIME_SLACK)):
            raise OutOfHorizon(f"time outside [0, {T}]")
        return np.clip(t, 0.0, T)

    def _scalars(self, t):
        """Per-time ``(eta_eff, C, D)``; Model 1 has ``C = D = 0``."""
        raise NotImplementedError

    def feedback(self, t):
        """Slope and intercept of ``v*(t, x) = slope * x + intercept``."""
        t = self._check_time(t)
        eta_eff, c_shift, d_shift = self._scalars(t)
        slope = (self.h2(t) - c_shift) / (2 * eta_eff)
        intercept = (self.h1(t) - d_shift) / (2 * eta_eff)
        return slope, intercept

    def optimal_rate(self, t, x):
        slope, intercept = self.feedback(t)
        return slope * np.asarray(x, dtype=float) + intercept

    def value(self, t, x):
        """``V(t, x) = H2 x^2 / 2 + H1 x + H0``."""
        x = np.asarray(x, dtype=float)
        return 0.5 * self.h2(t) * x * x + self.h1(t) * x + self.h0(t)

    def posterior_mean(self, t, x, v=None):
        """Mean of the optimal market-rate posterior at ``(t, x[, v])``."""
        raise NotImplementedError

    def posterior_precision(self, t) -> float:
        t = float(t)
        s = self.prior.precision(t)
        total = s + self.params.beta * self.risk.at(t).r_aa
        if not total > 0:
            raise PrecisionViolation(f"s + beta*R_aa = {total} <= 0 at t={t}")
        return total

    def posterior(self, t, x, v=None) -> GaussianDist:
        return GaussianDist(float(self.posterior_mean(t, x, v)), self.posterior_precision(t))

    def expected_trajectory(self, t):
        raise NotImplementedError


class _ClosedFormBase(LinearQuadraticStrategy):
    provenance = "closed-form"
    _a_hat: float
    _alpha: float

    def _u(self, t):
        u = self._a_hat * (self.params.horizon - t) + self._alpha
        if np.any(u <= 1e-12):
            raise ClosedFormUnavailable("coth argument too close to zero")
        return u

    def _h0_terms(self):
        """``(e, C, P, Q, k)`` with ``H2 = -2 e A_hat coth(u) + C`` and
        ``H1 - D = P coth(u) - Q csch(u)``."""
        raise NotImplementedError

    def _source(self) -> float:
        p, c = self.params, self.coeffs
        prior = self.prior.at(0.0)
        return (0.5 * p.gamma * p.sigma_X**2 + p.rho * p.sigma_S * p.sigma_X
                - math.log(c.c) / (2 * p.beta)
                + prior.precision * prior.mean**2 * (1 - c.c) / (2 * p.beta))

    def h0(self, t):
        """``H0(t) = int_t^T [sigma_X^2 H2 / 2 + (H1 - D)^2 / (4 e) + k] ds`` in closed form."""
        t = self._check_time(t)
        p, a_hat, alpha = self.params, self._a_hat, self._alpha
        e, c_shift, pc, qc, k = self._h0_terms()
        u = self._u(t)

        def log_sinh(z):
            return z + np.log1p(-np.exp(-2 * z)) - math.log(2.0)

        def antiderivative(z):
            # int (P coth z - Q csch z)^2 dz
            return pc * pc * (z - 1 / np.tanh(z)) + 2 * pc * qc / np.sinh(z) - qc * qc / np.tanh(z)

        remaining = p.horizon - t
        int_h2 = -2 * e * (log_sinh(u) - log_sinh(alpha)) + c_shift * remaining
        int_sq = (antiderivative(u) - antiderivative(alpha)) / a_hat
        return _scalar(0.5 * p.sigma_X**2 * int_h2 + int_sq / (4 * e) + k * remaining)

    def _forcing(self, t):
        # intercept of the feedback rate, i.e. the inhomogeneous term of dx/dt
        return self.feedback(t)[1]

    def expected_trajectory(self, t):
        """Mean inventory under the optimal feedback.

        ``x(t) = sinh(u_t)/sinh(u_0) x0 + int_0^t sinh(u_t)/sinh(u_s) b(s) ds``
        where ``b`` is the feedback intercept; the integral is evaluated by
        composite Simpson and vanishes when the prior mean is zero.
        """
        t = self._check_time(t)
        x0 = self.params.x0
        u0 = self._u(0.0)
        out = x0 * _sinh_ratio(self._u(t), u0)
        if self._has_forcing():
            extra = []
            for ti in np.atleast_1d(t):
                if ti == 0:
                    extra.append(0.0)
                    continue
                s = np.linspace(0.0, ti, TRAJECTORY_QUAD_POINTS)
                f = self._forcing(s) * _sinh_ratio(self._u(ti), self._u(s))
                extra.append(simpson(f, x=s))
            out = out + np.asarray(extra).reshape(np.shape(out))
        return out if np.ndim(out) else float(out)

    def _has_forcing(self) -> bool:
        raise NotImplementedError


class StrategyModel1(_ClosedFormBase):
    """Closed-form Model 1 solution (constant coefficients, ``A_1 < 0``)."""

    model = 1

    def __init__(self, params: ModelParams, prior: Union[GaussianDist, PriorSchedule],
                 risk: RiskSpecModel1):
        prior = PriorSchedule.constant(prior) if isinstance(prior, GaussianDist) else prior
        if not (prior.is_constant and risk.is_constant):
            raise ClosedFormUnavailable("closed forms need constant coefficients")
        super().__init__(params, prior, risk)
        self.coeffs: Model1Coeffs = derive_model1_coeffs(params, prior.at(0.0), risk)
        if not self.coeffs.closed_form:
            raise ClosedFormUnavailable(
                f"Model 1 closed form needs A1 < 0 and g > eta*A1_hat (A1={self.coeffs.a1:.6g})")
        self._a_hat = self.coeffs.a1_hat
        self._alpha = self.coeffs.alpha1
        # H1 vanishes identically when B1 = 0
        self.h1_curve_is_zero = self.coeffs.b1 == 0

    def _scalars(self, t):
        return self.params.eta, 0.0, 0.0

    def _has_forcing(self):
        return not self.h1_curve_is_zero

    def h2(self, t):
        t = self._check_time(t)
        return _scalar(-2 * self.params.eta * self._a_hat * _coth(self._u(t)))

    def h1(self, t):
        t = self._check_time(t)
        b1, a_hat = self.coeffs.b1, self._a_hat
        if b1 == 0:
            return np.zeros_like(t) if np.ndim(t) else 0.0
        u = self._u(t)
        return _scalar((b1 / a_hat) * (_coth(u) - math.cosh(self._alpha) / np.sinh(u)))

    def _h0_terms(self):
        b1, a_hat = self.coeffs.b1, self._a_hat
        return self.params.eta, 0.0, b1 / a_hat, b1 * math.cosh(self._alpha) / a_hat, self._source()

    def posterior_mean(self, t, x, v=None):
        return model1_posterior_mean(self.params, self.prior.at(0.0), self.risk.at(0.0), x)


class StrategyModel2(_ClosedFormBase):
    """Closed-form Model 2 solution (constant coefficients, ``A_2 > 0``)."""

    model = 2

    def __init__(self, params: ModelParams, prior: Union[GaussianDist, PriorSchedule],
                 risk: RiskSpecModel2):
        prior = PriorSchedule.constant(prior) if isinstance(prior, GaussianDist) else prior
        if not (prior.is_constant and risk.is_constant):
            raise ClosedFormUnavailable("closed forms need constant coefficients")
        super().__init__(params, prior, risk)
        self.coeffs: Model2Coeffs = derive_model2_coeffs(params, prior.at(0.0), risk)
        if not self.coeffs.closed_form:
            raise ClosedFormUnavailable(
                f"Model 2 closed form needs A2 > 0 and acoth argument > 1 (A2={self.coeffs.a2:.6g})")
        self._a_hat = self.coeffs.a2_hat
        self._alpha = self.coeffs.alpha2

    def _scalars(self, t):
        c = self.coeffs
        return c.eta_tilde, c.c_shift, c.d_shift

    def _has_forcing(self):
        return self.coeffs.b2 != 0 or self.coeffs.d_shift != 0

    def h2(self, t):
        t = self._check_time(t)
        c = self.coeffs
        return _scalar(-2 * c.eta_tilde * self._a_hat * _coth(self._u(t)) + c.c_shift)

    def h1(self, t):
        t = self._check_time(t)
        c, a_hat, alpha = self.coeffs, self._a_hat, self._alpha
        if c.b2 == 0 and c.d_shift == 0:
            return np.zeros_like(t) if np.ndim(t) else 0.0
        u = self._u(t)
        return _scalar(-(c.d_shift * a_hat * math.sinh(alpha) + c.b2 * math.cosh(alpha)) / (a_hat * np.sinh(u))
                       + (c.b2 / a_hat) * _coth(u) + c.d_shift)

    def _h0_terms(self):
        c, a_hat, alpha = self.coeffs, self._a_hat, self._alpha
        q = (c.d_shift * a_hat * math.sinh(alpha) + c.b2 * math.cosh(alpha)) / a_hat
        return c.eta_tilde, c.c_shift, c.b2 / a_hat, q, self._source()

    def posterior_mean(self, t, x, v=None):
        if v is None:
            v = self.optimal_rate(t, x)
        return model2_posterior_mean(self.params, self.prior.at(0.0), self.risk.at(0.0), x, v)


def model1_posterior_mean(params: ModelParams, prior: GaussianDist, risk: RiskSpecModel1, x):
    """Posterior mean ``(s m - beta (gamma_M + R_xa) x) / (s + beta R_aa)``."""
    beta = params.beta
    total = prior.precision + beta * risk.r_aa
    if not total > 0:
        raise PrecisionViolation(f"s + beta*R_aa = {total} <= 0")
    x = np.asarray(x, dtype=float)
    return (prior.precision * prior.mean - beta * (params.gamma_M + risk.r_xa) * x) / total


def model2_posterior_mean(params: ModelParams, prior: GaussianDist, risk: RiskSpecModel2, x, v):
    """Posterior mean ``(s m - beta R_va v - beta gamma_M x) / (s + beta R_aa)``."""
    beta = params.beta
    total = prior.precision + beta * risk.r_aa
    if not total > 0:
        raise PrecisionViolation(f"s + beta*R_aa = {total} <= 0")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return (prior.precision * prior.mean - beta * risk.r_va * v - beta * params.gamma_M * x) / total


def posterior_model1(params: ModelParams, prior: GaussianDist, risk: RiskSpecModel1, x) -> GaussianDist:
    """Optimal market-rate posterior of Model 1 at inventory ``x``."""
    mean = model1_posterior_mean(params, prior, risk, x)
    return GaussianDist(float(mean), prior.precision + params.beta * risk.r_aa)


def posterior_model2(params: ModelParams, prior: GaussianDist, risk: RiskSpecModel2, x, v) -> GaussianDist:
    """Optimal market-rate posterior of Model 2 at inventory ``x`` and rate ``v``."""
    mean = model2_posterior_mean(params, prior, risk, x, v)
    return GaussianDist(float(mean), prior.precision + params.beta * risk.r_aa)


def optimal_strategy(model: int, params: ModelParams, prior, risk, n_steps: int = 1000,
                     prefer_closed_form: bool = True) -> LinearQuadraticStrategy:
    """Closed-form strategy when available, otherwise the Riccati solution.

    The returned object's ``provenance`` is ``"closed-form"`` or ``"solver"``.
    """
    from .riccati import SolvedStrategy, solve_model1, solve_model2

    if model not in (1, 2):
        raise ValueError(f"model must be 1 or 2, got {model}")
    prior = PriorSchedule.constant(prior) if isinstance(prior, GaussianDist) else prior
    if prefer_closed_form:
        try:
            cls = StrategyModel1 if model == 1 else StrategyModel2
            return cls(params, prior, risk)
        except ClosedFormUnavailable:
            pass
    solve = solve_model1 if model == 1 else solve_model2
    coeffs = solve(params, prior, risk, n_steps)
    return SolvedStrategy(coeffs, params, prior, risk)
