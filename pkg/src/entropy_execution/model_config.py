"""Model parameters, Gaussian priors, running-risk specifications and the
constant-coefficient scalars that feed the closed-form solutions.

Time-dependent inputs (prior mean/precision, risk coefficients) are plain
callables of ``t``; a float is treated as a constant schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

import numpy as np

from .errors import EtaTildeViolation, PrecisionViolation

Coefficient = Union[float, Callable[[float], float]]

# Precisions above this are treated as a Dirac prior and rejected by the
# entropy routines.
MAX_PRECISION = 1e15


def _evaluate(value: Coefficient, t: float) -> float:
    return float(value(t)) if callable(value) else float(value)


@dataclass(frozen=True)
class LinearSchedule:
    """``value(t) = a + b * t``; ``b = 0`` gives a constant."""

    a: float
    b: float = 0.0

    def __call__(self, t):
        return self.a + self.b * t


@dataclass(frozen=True)
class ModelParams:
    """Market and agent constants, in consistent units.

    ``delta`` is the terminal inventory penalty in ``g(x) = -delta x^2``.
    """

    gamma: float
    gamma_M: float
    eta: float
    delta: float
    beta: float
    sigma_S: float
    sigma_X: float
    rho: float
    horizon: float
    x0: float
    s0: float

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if not abs(self.rho) <= 1:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.gamma < 0 or self.delta < 0:
            raise ValueError("gamma and delta must be nonnegative")
        if self.sigma_S < 0 or self.sigma_X < 0:
            raise ValueError("volatilities must be nonnegative")

    @property
    def g(self) -> float:
        """Effective terminal coefficient ``delta - gamma / 2``."""
        return self.delta - 0.5 * self.gamma

    def replace(self, **changes) -> "ModelParams":
        values = {**self.__dict__, **changes}
        return ModelParams(**values)


@dataclass(frozen=True)
class GaussianDist:
    """Normal law parameterized by mean and precision (inverse variance)."""

    mean: float
    precision: float

    def __post_init__(self):
        if not self.precision > 0:
            raise PrecisionViolation(f"precision must be > 0, got {self.precision}")

    @property
    def variance(self) -> float:
        return 1.0 / self.precision

    @property
    def std(self) -> float:
        return 1.0 / math.sqrt(self.precision)

    def logpdf(self, a):
        a = np.asarray(a, dtype=float)
        return 0.5 * math.log(self.precision / (2 * math.pi)) - 0.5 * self.precision * (a - self.mean) ** 2

    def pdf(self, a):
        return np.exp(self.logpdf(a))


@dataclass(frozen=True)
class PriorSchedule:
    """Time-indexed Gaussian prior of the market trading rate."""

    mean_fn: Coefficient
    precision_fn: Coefficient

    @classmethod
    def constant(cls, prior: GaussianDist) -> "PriorSchedule":
        return cls(prior.mean, prior.precision)

    @property
    def is_constant(self) -> bool:
        return not callable(self.mean_fn) and not callable(self.precision_fn)

    def mean(self, t: float) -> float:
        return _evaluate(self.mean_fn, t)

    def precision(self, t: float) -> float:
        return _evaluate(self.precision_fn, t)

    def at(self, t: float) -> GaussianDist:
        return GaussianDist(self.mean(t), self.precision(t))

    def validate(self, times: Iterable[float]) -> None:
        for t in times:
            s = self.precision(t)
            if not s > 0:
                raise PrecisionViolation(f"prior precision {s} <= 0 at t={t}")


def _as_prior_schedule(prior) -> PriorSchedule:
    return PriorSchedule.constant(prior) if isinstance(prior, GaussianDist) else prior


@dataclass(frozen=True)
class RiskSpecModel1:
    """Running risk ``R_xx x^2 / 2 + R_xa x a + R_aa a^2 / 2``."""

    r_xx: Coefficient
    r_xa: Coefficient
    r_aa: Coefficient

    @property
    def is_constant(self) -> bool:
        return not any(callable(v) for v in (self.r_xx, self.r_xa, self.r_aa))

    def at(self, t: float) -> "RiskSpecModel1":
        return RiskSpecModel1(_evaluate(self.r_xx, t), _evaluate(self.r_xa, t), _evaluate(self.r_aa, t))

    def validate(self, prior, beta: float, times: Iterable[float]) -> None:
        """Check ``s_t + beta R_aa > 0`` on every sampled time."""
        prior = _as_prior_schedule(prior)
        for t in times:
            total = prior.precision(t) + beta * _evaluate(self.r_aa, t)
            if not total > 0:
                raise PrecisionViolation(f"s + beta*R_aa = {total} <= 0 at t={t}")


@dataclass(frozen=True)
class RiskSpecModel2:
    """Running risk ``R_vv v^2 / 2 + R_va v a + R_aa a^2 / 2``."""

    r_vv: Coefficient
    r_va: Coefficient
    r_aa: Coefficient

    @property
    def is_constant(self) -> bool:
        return not any(callable(v) for v in (self.r_vv, self.r_va, self.r_aa))

    def at(self, t: float) -> "RiskSpecModel2":
        return RiskSpecModel2(_evaluate(self.r_vv, t), _evaluate(self.r_va, t), _evaluate(self.r_aa, t))

    def validate(self, prior, params: ModelParams, times: Iterable[float]) -> None:
        prior = _as_prior_schedule(prior)
        beta = params.beta
        for t in times:
            s = prior.precision(t)
            r = self.at(t)
            total = s + beta * r.r_aa
            if not total > 0:
                raise PrecisionViolation(f"s + beta*R_aa = {total} <= 0 at t={t}")
            eta_tilde = params.eta - r.r_vv / 2 + beta * r.r_va**2 / (2 * total)
            if not eta_tilde > 0:
                raise EtaTildeViolation(f"eta_tilde = {eta_tilde} <= 0 at t={t}")


@dataclass(frozen=True)
class Model1Coeffs:
    """Derived Model 1 scalars. ``a1_hat``/``alpha1`` are ``None`` outside
    the closed-form regime (``A_1 < 0`` and ``g > eta * a1_hat``)."""

    a1: float
    b1: float
    c: float
    g: float
    a1_hat: Optional[float] = None
    alpha1: Optional[float] = None

    @property
    def closed_form(self) -> bool:
        return self.alpha1 is not None


@dataclass(frozen=True)
class Model2Coeffs:
    """Derived Model 2 scalars. ``alpha2`` is ``None`` when the closed form
    does not apply (``A_2 = 0`` or acoth argument ``<= 1``)."""

    a2: float
    b2: float
    eta_tilde: float
    c_shift: float
    d_shift: float
    g: float
    c: float = field(default=1.0)
    a2_hat: float = 0.0
    alpha2: Optional[float] = None

    @property
    def closed_form(self) -> bool:
        return self.alpha2 is not None


def _acoth_or_none(y: float) -> Optional[float]:
    # acoth(y) = atanh(1/y), defined for y > 1 only
    if not (y > 1 and math.isfinite(y)):
        return None
    return math.atanh(1.0 / y)


def derive_model1_coeffs(params: ModelParams, prior: GaussianDist, risk: RiskSpecModel1,
                         t: float = 0.0) -> Model1Coeffs:
    """Model 1 coefficients ``A_1, B_1, c, g`` and, when they exist, the
    closed-form constants ``A_1_hat`` and ``alpha_1``.

    Time-dependent risk coefficients are evaluated at ``t``.
    """
    r = risk.at(t)
    beta = params.beta
    s, m = prior.precision, prior.mean
    post = s + beta * r.r_aa
    if not post > 0:
        raise PrecisionViolation(f"s + beta*R_aa = {post} <= 0")
    k = params.gamma_M + r.r_xa
    a1 = r.r_xx - beta * k**2 / post
    b1 = k * s * m / post
    c = s / post
    g = params.g

    a1_hat = alpha1 = None
    if a1 < 0:
        a1_hat = math.sqrt(-a1 / (2 * params.eta))
        if g > 0:
            alpha1 = _acoth_or_none(g / (params.eta * a1_hat))
    return Model1Coeffs(a1=a1, b1=b1, c=c, g=g, a1_hat=a1_hat, alpha1=alpha1)


def derive_model2_coeffs(params: ModelParams, prior: GaussianDist, risk: RiskSpecModel2,
                         t: float = 0.0) -> Model2Coeffs:
    """Model 2 coefficients ``A_2, B_2, eta_tilde, C, D, g`` and, when they
    exist, ``A_2_hat`` and ``alpha_2``."""
    r = risk.at(t)
    beta = params.beta
    s, m = prior.precision, prior.mean
    post = s + beta * r.r_aa
    if not post > 0:
        raise PrecisionViolation(f"s + beta*R_aa = {post} <= 0")
    eta_tilde = params.eta - r.r_vv / 2 + beta * r.r_va**2 / (2 * post)
    if not eta_tilde > 0:
        raise EtaTildeViolation(f"eta_tilde = {eta_tilde} <= 0")
    gm = params.gamma_M
    a2 = beta * gm**2 / post
    b2 = gm * s * m / post
    c_shift = beta * gm * r.r_va / post
    d_shift = -r.r_va * s * m / post
    g = params.g

    a2_hat = math.sqrt(a2 / (2 * eta_tilde))
    alpha2 = None
    if a2_hat > 0:
        alpha2 = _acoth_or_none((2 * g + c_shift) / (2 * eta_tilde * a2_hat))
    return Model2Coeffs(a2=a2, b2=b2, eta_tilde=eta_tilde, c_shift=c_shift, d_shift=d_shift,
                        g=g, c=s / post, a2_hat=a2_hat, alpha2=alpha2)
