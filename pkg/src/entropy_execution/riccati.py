"""Backward RK4 integration of the value-coefficient ODE systems.

Both models reduce to the same system once written with an effective
temporary impact ``e``, shifts ``C, D`` and sources ``A, B, k``::

    dH2/dt = -(H2 - C)^2 / (2 e) + A
    dH1/dt = -(H2 - C)(H1 - D) / (2 e) - B
    dH0/dt = -[sigma_X^2 H2 / 2 + (H1 - D)^2 / (4 e) + k]

Model 1 uses ``e = eta, C = D = 0, A = -A_1, B = B_1``; Model 2 uses
``e = eta_tilde, A = A_2, B = B_2``. In both,
``k = gamma sigma_X^2 / 2 + rho sigma_S sigma_X - log(c) / (2 beta) + s m^2 (1 - c) / (2 beta)``.

Integration runs forward in reversed time ``tau = T - t`` on a uniform grid,
with coefficients re-evaluated at every RK4 stage time.

A large terminal penalty makes ``H2`` stiff near ``T`` (its rate scales
like ``g / e``). In that case the solver switches to the reciprocal
variables ``u = 1 / H2`` and ``y = H1 / H2``, whose dynamics

    du/dt = (1 - C u)^2 / (2 e) - A u^2
    dy/dt = (1 - C u)(D - C y) / (2 e) - B u - A y u

stay bounded however large ``g`` is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .closed_form import LinearQuadraticStrategy, model1_posterior_mean, model2_posterior_mean
from .errors import BlowUp, H0Unavailable
from .model_config import (
    GaussianDist,
    ModelParams,
    PriorSchedule,
    RiskSpecModel1,
    RiskSpecModel2,
    derive_model1_coeffs,
    derive_model2_coeffs,
)

BLOWUP_THRESHOLD = 1e12
# h * |H2(T) - C| / e above this selects the reciprocal formulation
STIFFNESS_LIMIT = 0.5


@dataclass
class ValueCoefficients:
    """Sampled ``H2, H1, H0`` on the uniform grid ``[0, T]``.

    ``dh2``/``dh1``/``dh0`` hold the ODE right-hand sides at the nodes and
    are used for cubic Hermite interpolation between nodes.
    """

    grid: np.ndarray
    h2: np.ndarray
    h1: np.ndarray
    h0: Optional[np.ndarray]
    dh2: np.ndarray
    dh1: np.ndarray
    dh0: Optional[np.ndarray]
    model: int
    formulation: str = "value"

    @property
    def n_steps(self) -> int:
        return len(self.grid) - 1


def _as_schedule(prior) -> PriorSchedule:
    return PriorSchedule.constant(prior) if isinstance(prior, GaussianDist) else prior


class _System:
    """Coefficients ``(e, C, D, A, B, k)`` of the unified system at time ``t``."""

    def __init__(self, model, params, prior: PriorSchedule, risk):
        self.model = model
        self.params = params
        self.prior = prior
        self.risk = risk
        self._cached = None
        if prior.is_constant and risk.is_constant:
            self._cached = self._compute(0.0)

    def _compute(self, t):
        p = self.params
        prior = self.prior.at(t)
        if self.model == 1:
            c = derive_model1_coeffs(p, prior, self.risk, t)
            e, cs, ds, a, b = p.eta, 0.0, 0.0, -c.a1, c.b1
        else:
            c = derive_model2_coeffs(p, prior, self.risk, t)
            e, cs, ds, a, b = c.eta_tilde, c.c_shift, c.d_shift, c.a2, c.b2
        k = (0.5 * p.gamma * p.sigma_X**2 + p.rho * p.sigma_S * p.sigma_X
             - math.log(c.c) / (2 * p.beta)
             + prior.precision * prior.mean**2 * (1 - c.c) / (2 * p.beta))
        return e, cs, ds, a, b, k

    def __call__(self, t):
        return self._cached if self._cached is not None else self._compute(t)

    def value_rhs(self, t, h2, h1):
        """``d(H2, H1, H0)/dt`` at time ``t``."""
        e, cs, ds, a, b, k = self(t)
        sx2 = self.params.sigma_X**2
        return (-(h2 - cs) ** 2 / (2 * e) + a,
                -(h2 - cs) * (h1 - ds) / (2 * e) - b,
                -(0.5 * sx2 * h2 + (h1 - ds) ** 2 / (4 * e) + k))

    def reciprocal_rhs(self, t, u, y):
        """``d(u, y, H0)/dt`` with ``u = 1/H2``, ``y = H1/H2``."""
        e, cs, ds, a, b, k = self(t)
        one_cu = 1.0 - cs * u
        du = one_cu**2 / (2 * e) - a * u * u
        dy = one_cu * (ds - cs * y) / (2 * e) - b * u - a * y * u
        h2, h1 = 1.0 / u, y / u
        dh0 = -(0.5 * self.params.sigma_X**2 * h2 + (h1 - ds) ** 2 / (4 * e) + k)
        return du, dy, dh0


def _check_grid_validity(model, params, prior, risk, grid):
    if model == 1:
        risk.validate(prior, params.beta, grid)
    else:
        risk.validate(prior, params, grid)


def _integrate(system: _System, n_steps: int, formulation: str):
    """Classical RK4 from ``t = T`` down to ``t = 0``; returns node arrays."""
    p = system.params
    T = p.horizon
    h = T / n_steps
    grid = np.linspace(0.0, T, n_steps + 1)
    g = p.g
    h2 = np.empty(n_steps + 1)
    h1 = np.empty(n_steps + 1)
    h0 = np.empty(n_steps + 1)
    h2[-1], h1[-1], h0[-1] = -2 * g, 0.0, 0.0

    if formulation == "value":
        rhs = system.value_rhs
        state = (-2 * g, 0.0, 0.0)
    else:
        if g == 0:
            raise BlowUp("reciprocal formulation needs a nonzero terminal H2")
        rhs = system.reciprocal_rhs
        state = (-1.0 / (2 * g), 0.0, 0.0)

    for i in range(n_steps, 0, -1):
        t = grid[i]
        # backward step: d/dtau = -d/dt
        k1 = rhs(t, state[0], state[1])
        s2 = [state[j] - 0.5 * h * k1[j] for j in range(3)]
        k2 = rhs(t - 0.5 * h, s2[0], s2[1])
        s3 = [state[j] - 0.5 * h * k2[j] for j in range(3)]
        k3 = rhs(t - 0.5 * h, s3[0], s3[1])
        s4 = [state[j] - h * k3[j] for j in range(3)]
        k4 = rhs(t - h, s4[0], s4[1])
        state = tuple(state[j] - h / 6 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]) for j in range(3))

        if formulation == "value":
            v2, v1 = state[0], state[1]
        else:
            u = state[0]
            if not np.isfinite(u) or u == 0 or np.sign(u) != np.sign(h2[-1]):
                raise BlowUp(f"H2 changed sign or diverged near t={grid[i - 1]:.6g}")
            v2, v1 = 1.0 / u, state[1] / u
        if not (np.isfinite(v2) and np.isfinite(v1) and np.isfinite(state[2])) or abs(v2) > BLOWUP_THRESHOLD:
            raise BlowUp(f"|H2| exceeded {BLOWUP_THRESHOLD:g} before t=0 (at t={grid[i - 1]:.6g})")
        h2[i - 1], h1[i - 1], h0[i - 1] = v2, v1, state[2]

    d = [system.value_rhs(t, a, b) for t, a, b in zip(grid, h2, h1)]
    dh2, dh1, dh0 = (np.array(col) for col in zip(*d))
    return grid, h2, h1, h0, dh2, dh1, dh0


def _choose_formulation(system: _System, n_steps: int, formulation: str) -> str:
    if formulation in ("value", "reciprocal"):
        return formulation
    if formulation != "auto":
        raise ValueError(f"unknown formulation {formulation!r}")
    p = system.params
    e, cs = system(p.horizon)[:2]
    stiffness = (p.horizon / n_steps) * abs(-2 * p.g - cs) / e
    return "reciprocal" if stiffness > STIFFNESS_LIMIT and p.g != 0 else "value"


def _solve(model, params, prior, risk, n_steps, formulation, include_h0):
    if n_steps < 10:
        raise ValueError("n_steps must be >= 10")
    prior = _as_schedule(prior)
    grid = np.linspace(0.0, params.horizon, n_steps + 1)
    _check_grid_validity(model, params, prior, risk, grid)
    system = _System(model, params, prior, risk)
    form = _choose_formulation(system, n_steps, formulation)
    grid, h2, h1, h0, dh2, dh1, dh0 = _integrate(system, n_steps, form)
    if not include_h0:
        h0 = dh0 = None
    return ValueCoefficients(grid=grid, h2=h2, h1=h1, h0=h0, dh2=dh2, dh1=dh1, dh0=dh0,
                             model=model, formulation=form)


def solve_model1(params: ModelParams, prior_schedule, risk: RiskSpecModel1, n_steps: int = 1000,
                 formulation: str = "auto") -> ValueCoefficients:
    """Integrate the Model 1 system backward from ``H2(T) = -2g, H1(T) = H0(T) = 0``.

    Parameters
    ----------
    formulation : {"auto", "value", "reciprocal"}
        ``"auto"`` integrates ``H2`` directly unless the terminal penalty
        makes that stiff on the chosen grid.

    Raises
    ------
    BlowUp
        If ``|H2|`` exceeds ``1e12`` (finite-time explosion).
    """
    return _solve(1, params, prior_schedule, risk, n_steps, formulation, True)


def solve_model2(params: ModelParams, prior_schedule, risk: RiskSpecModel2, n_steps: int = 1000,
                 formulation: str = "auto", include_h0: bool = True) -> ValueCoefficients:
    """Integrate the Model 2 system backward from ``H2(T) = -2g, H1(T) = 0``.

    ``H0`` uses the constant terms of the Model 2 Hamilton-Jacobi equation;
    pass ``include_h0=False`` to leave it out.
    """
    return _solve(2, params, prior_schedule, risk, n_steps, formulation, include_h0)


class SolvedStrategy(LinearQuadraticStrategy):
    """Optimal strategy backed by numerically integrated value coefficients."""

    provenance = "solver"

    def __init__(self, coeffs: ValueCoefficients, params: ModelParams, prior, risk):
        super().__init__(params, _as_schedule(prior), risk)
        self.coeffs = coeffs
        self.model = coeffs.model
        self._system = _System(coeffs.model, params, self.prior, risk)
        g = coeffs.grid
        self._h2 = CubicHermiteSpline(g, coeffs.h2, coeffs.dh2)
        self._h1 = CubicHermiteSpline(g, coeffs.h1, coeffs.dh1)
        self._h0 = CubicHermiteSpline(g, coeffs.h0, coeffs.dh0) if coeffs.h0 is not None else None
        self._trajectory = None

    def _eval(self, spline, t):
        t = self._check_time(t)
        out = spline(t)
        return float(out) if np.ndim(out) == 0 else out

    def h2(self, t):
        return self._eval(self._h2, t)

    def h1(self, t):
        return self._eval(self._h1, t)

    def h0(self, t):
        if self._h0 is None:
            raise H0Unavailable("H0 was not integrated")
        return self._eval(self._h0, t)

    def _scalars(self, t):
        if np.ndim(t) == 0:
            e, cs, ds = self._system(float(t))[:3]
            return e, cs, ds
        rows = np.array([self._system(float(ti))[:3] for ti in np.ravel(t)])
        shape = np.shape(t)
        return tuple(rows[:, j].reshape(shape) for j in range(3))

    def posterior_mean(self, t, x, v=None):
        t = float(t)
        prior = self.prior.at(t)
        risk = self.risk.at(t)
        if self.model == 1:
            return model1_posterior_mean(self.params, prior, risk, x)
        if v is None:
            v = self.optimal_rate(t, x)
        return model2_posterior_mean(self.params, prior, risk, x, v)

    def expected_trajectory(self, t):
        """Mean inventory from RK4 integration of ``dx/dt = v*(t, x)`` on the
        solver grid, interpolated with cubic Hermite splines."""
        if self._trajectory is None:
            grid = self.coeffs.grid
            h = grid[1] - grid[0]
            x = np.empty_like(grid)
            x[0] = self.params.x0
            f = self.optimal_rate
            for i in range(len(grid) - 1):
                ti = grid[i]
                k1 = f(ti, x[i])
                k2 = f(ti + h / 2, x[i] + h / 2 * k1)
                k3 = f(ti + h / 2, x[i] + h / 2 * k2)
                k4 = f(ti + h, x[i] + h * k3)
                x[i + 1] = x[i] + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            dx = np.array([f(ti, xi) for ti, xi in zip(grid, x)])
            self._trajectory = CubicHermiteSpline(grid, x, dx)
        return self._eval(self._trajectory, t)
