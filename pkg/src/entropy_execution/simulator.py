"""Euler-Maruyama simulation of inventory and price under a trading strategy,
pathwise P&L, and the decomposition ``V = V_PnL + V_risk + V_entropy``.

Dynamics per step ``dt = T / n_steps``::

    X_{k+1} = X_k + v_k dt + sigma_X dW^X_k
    S_{k+1} = S_k + gamma (X_{k+1} - X_k) + gamma_M <a>_k dt + sigma_S dW^S_k

``<a>_k`` is the mean of the optimal market-rate posterior at the current
state, which for Model 2 also depends on the realized rate ``v_k``.

Noise comes from one counter-based Philox stream per path, keyed by
``(seed, path_index)``, so any path can be regenerated on its own and two
strategies simulated with the same config see identical Brownian paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .closed_form import LinearQuadraticStrategy, model1_posterior_mean, model2_posterior_mean, optimal_strategy
from .entropy_core import kl_gaussian_array
from .errors import ConfigMismatch, IncrementsMissing, NonfiniteState
from .model_config import GaussianDist, ModelParams, PriorSchedule, RiskSpecModel1, RiskSpecModel2

COMPONENTS = ("v_pnl", "v_risk", "v_entropy", "v_total")
QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
HISTOGRAM_BINS = 60


# --------------------------------------------------------------------------- strategies

class StrategyKind:
    """A feedback trading rule ``v = rate(t, x)`` evaluated on arrays of paths."""

    name = "strategy"
    model: Optional[int] = None

    def rate(self, t: float, x: np.ndarray, dt: float) -> np.ndarray:
        raise NotImplementedError


class OptimalFeedback(StrategyKind):
    """Affine feedback ``v*(t, x)`` of a closed-form or solver strategy."""

    name = "optimal"

    def __init__(self, strategy: LinearQuadraticStrategy):
        self.strategy = strategy
        self.model = strategy.model

    def rate(self, t, x, dt):
        slope, intercept = self.strategy.feedback(t)
        return slope * x + intercept


class AdaptedTWAP(StrategyKind):
    """``v = -x / (T - t)`` with ``T - t`` floored at one step, so the last
    step sells whatever is left."""

    name = "twap"

    def __init__(self, horizon: float):
        self.horizon = horizon

    def rate(self, t, x, dt):
        return -x / max(self.horizon - t, dt)


class FeedbackRule(StrategyKind):
    """Arbitrary rule ``rate_fn(t, x)``; handy for stubs such as ``v = 0``."""

    def __init__(self, rate_fn: Callable[[float, np.ndarray], np.ndarray], name: str = "custom"):
        self.rate_fn = rate_fn
        self.name = name

    def rate(self, t, x, dt):
        return np.broadcast_to(np.asarray(self.rate_fn(t, x), dtype=float), np.shape(x))


def zero_rate() -> FeedbackRule:
    return FeedbackRule(lambda t, x: 0.0, name="zero")


# --------------------------------------------------------------------------- config

@dataclass
class SimConfig:
    """Monte Carlo settings plus the model the paths are simulated under.

    ``quadratic_variation`` selects how :func:`pnl_transformed` discretizes
    the ``(sigma^X)^2 dt`` and ``rho sigma^S sigma^X dt`` integrals:
    ``"realized"`` uses the sampled increments (``(dW^X)^2`` and
    ``dW^X dW^S``), which makes the identity with :func:`pnl_definition` hold
    pathwise at first order; ``"deterministic"`` uses their expectations and
    only converges at order one half.
    """

    model: int
    params: ModelParams
    prior: PriorSchedule
    risk: object
    n_paths: int = 4096
    n_steps: int = 1000
    seed: int = 0
    antithetic: bool = False
    sample_market_rate: bool = False
    keep_paths: bool = False
    quadratic_variation: str = "realized"

    def __post_init__(self):
        if isinstance(self.prior, GaussianDist):
            self.prior = PriorSchedule.constant(self.prior)
        if self.model not in (1, 2):
            raise ValueError(f"model must be 1 or 2, got {self.model}")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.n_steps < 2:
            raise ValueError("n_steps must be >= 2")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        expected = RiskSpecModel1 if self.model == 1 else RiskSpecModel2
        if not isinstance(self.risk, expected):
            raise ConfigMismatch(f"model {self.model} needs a {expected.__name__}")
        if self.quadratic_variation not in ("realized", "deterministic"):
            raise ValueError("quadratic_variation must be 'realized' or 'deterministic'")

    @property
    def dt(self) -> float:
        return self.params.horizon / self.n_steps

    def replace(self, **changes) -> "SimConfig":
        values = {**self.__dict__, **changes}
        return SimConfig(**values)


def optimal_feedback(config: SimConfig, n_steps: Optional[int] = None) -> OptimalFeedback:
    """Optimal strategy for ``config``'s model (closed form when available)."""
    strat = optimal_strategy(config.model, config.params, config.prior, config.risk,
                             n_steps=n_steps or max(config.n_steps, 1000))
    return OptimalFeedback(strat)


# --------------------------------------------------------------------------- noise

def _path_generator(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(index)))


def _path_normals(config: SimConfig, index: int, n_draws: int) -> np.ndarray:
    if config.antithetic:
        z = _path_generator(config.seed, index // 2).standard_normal(n_draws)
        return -z if index % 2 else z
    return _path_generator(config.seed, index).standard_normal(n_draws)


def brownian_increments(config: SimConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Correlated increments ``(dW^X, dW^S)``, each of shape ``(n_paths, n_steps)``.

    ``dW^S = rho dW^X + sqrt(1 - rho^2) dW^perp``.
    """
    n, dt, rho = config.n_steps, config.dt, config.params.rho
    dwx = np.empty((config.n_paths, n))
    dws = np.empty((config.n_paths, n))
    sq = math.sqrt(dt)
    rho_perp = math.sqrt(max(0.0, 1.0 - rho * rho))
    for i in range(config.n_paths):
        z = _path_normals(config, i, 2 * n)
        dwx[i] = sq * z[:n]
        dws[i] = sq * (rho * z[:n] + rho_perp * z[n:])
    return dwx, dws


def _market_rate_normals(config: SimConfig) -> np.ndarray:
    # drawn after the Brownian normals of the same stream
    n = config.n_steps
    out = np.empty((config.n_paths, n))
    for i in range(config.n_paths):
        out[i] = _path_normals(config, i, 3 * n)[2 * n:]
    return out


def coarsen_increments(dw: np.ndarray, factor: int) -> np.ndarray:
    """Sum consecutive blocks of ``factor`` increments (same Brownian path on a coarser grid)."""
    n_paths, n = dw.shape
    if n % factor:
        raise ValueError("n_steps must be divisible by factor")
    return dw.reshape(n_paths, n // factor, factor).sum(axis=2)


# --------------------------------------------------------------------------- results

@dataclass
class SimPath:
    """One simulated trajectory. ``v``, ``a_mean`` and the increments hold one
    entry per interval; ``t``, ``X`` and ``S`` one per grid point.

    ``a_feed`` is the market rate actually entering ``dS`` (equal to
    ``a_mean`` unless market rates are sampled).
    """

    t: np.ndarray
    X: np.ndarray
    S: np.ndarray
    v: np.ndarray
    a_mean: np.ndarray
    a_feed: np.ndarray
    dWx: Optional[np.ndarray] = None
    dWs: Optional[np.ndarray] = None
    v_pnl: float = float("nan")
    v_risk: float = float("nan")
    v_entropy: float = float("nan")
    v_total: float = float("nan")
    path_index: int = 0


def _stats(x: np.ndarray) -> Dict[str, object]:
    n = x.size
    mean = float(np.mean(x))
    var = float(np.var(x, ddof=1)) if n > 1 else None
    se = math.sqrt(var / n) if var is not None else None
    return {
        "mean": mean,
        "variance": var,
        "std_error": se,
        "quantiles": {str(q): float(v) for q, v in zip(QUANTILES, np.quantile(x, QUANTILES))},
    }


@dataclass
class SimEnsemble:
    """Per-path decompositions of one strategy's ensemble.

    Full trajectories are only available when the config had ``keep_paths``.
    """

    strategy: str
    config: SimConfig
    v_pnl: np.ndarray
    v_risk: np.ndarray
    v_entropy: np.ndarray
    v_total: np.ndarray
    x_T: np.ndarray
    s_T: np.ndarray
    trajectories: Optional[Dict[str, np.ndarray]] = field(default=None, repr=False)

    @property
    def n_paths(self) -> int:
        return self.v_total.size

    def component(self, name: str) -> np.ndarray:
        if name not in COMPONENTS:
            raise KeyError(name)
        return getattr(self, name)

    def stats(self, name: str) -> Dict[str, object]:
        return _stats(self.component(name) if name != "x_T" else self.x_T)

    def summary(self) -> Dict[str, object]:
        out = {name: self.stats(name) for name in COMPONENTS}
        out["x_T"] = _stats(self.x_T)
        out["n_paths"] = self.n_paths
        return out

    def path(self, index: int) -> SimPath:
        if self.trajectories is None:
            raise IncrementsMissing("ensemble was simulated without keep_paths")
        tr = self.trajectories
        return SimPath(t=tr["t"], X=tr["X"][index], S=tr["S"][index], v=tr["v"][index],
                       a_mean=tr["a_mean"][index], a_feed=tr["a_feed"][index],
                       dWx=tr["dWx"][index], dWs=tr["dWs"][index],
                       v_pnl=float(self.v_pnl[index]), v_risk=float(self.v_risk[index]),
                       v_entropy=float(self.v_entropy[index]), v_total=float(self.v_total[index]),
                       path_index=index)

    def rows(self):
        """``(path_id, v_pnl, v_risk, v_entropy, v_total)`` per path."""
        for i in range(self.n_paths):
            yield i, self.v_pnl[i], self.v_risk[i], self.v_entropy[i], self.v_total[i]


# --------------------------------------------------------------------------- simulation

def _posterior_mean(config: SimConfig, t: float, x, v):
    prior = config.prior.at(t)
    risk = config.risk.at(t)
    if config.model == 1:
        return model1_posterior_mean(config.params, prior, risk, x)
    return model2_posterior_mean(config.params, prior, risk, x, v)


def _posterior_precision(config: SimConfig, t: float) -> float:
    return config.prior.precision(t) + config.params.beta * config.risk.at(t).r_aa


def _check_consistency(config: SimConfig, strategy: StrategyKind) -> None:
    if strategy.model is not None and strategy.model != config.model:
        raise ConfigMismatch(f"strategy is for model {strategy.model}, config is model {config.model}")
    inner = getattr(strategy, "strategy", None)
    if inner is not None and inner.params != config.params:
        raise ConfigMismatch("strategy was built with different model parameters")
    if isinstance(strategy, AdaptedTWAP) and strategy.horizon != config.params.horizon:
        raise ConfigMismatch("TWAP horizon differs from the configured horizon")


def _check_finite(k: int, *arrays) -> None:
    for arr in arrays:
        bad = ~np.isfinite(arr)
        if bad.any():
            idx = int(np.flatnonzero(bad)[0])
            raise NonfiniteState(f"state became non-finite on path {idx} at step {k}", path_index=idx, step=k)


def simulate_paths(config: SimConfig, strategy: StrategyKind,
                   increments: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> SimEnsemble:
    """Simulate ``config.n_paths`` paths of ``strategy``.

    Parameters
    ----------
    increments : tuple of arrays, optional
        Precomputed ``(dW^X, dW^S)`` of shape ``(n_paths, n_steps)``; by
        default they are drawn from the per-path Philox streams.
    """
    _check_consistency(config, strategy)
    p = config.params
    n, dt = config.n_steps, config.dt
    if increments is None:
        dwx, dws = brownian_increments(config)
    else:
        dwx, dws = (np.asarray(a, dtype=float) for a in increments)
        if dwx.shape != (config.n_paths, n) or dws.shape != (config.n_paths, n):
            raise ConfigMismatch("increments must have shape (n_paths, n_steps)")
    market_z = _market_rate_normals(config) if config.sample_market_rate else None

    grid = np.linspace(0.0, p.horizon, n + 1)
    x = np.full(config.n_paths, float(p.x0))
    s = np.full(config.n_paths, float(p.s0))
    keep = config.keep_paths
    if keep:
        shape = (config.n_paths, n)
        tr = {"t": grid, "X": np.empty((config.n_paths, n + 1)), "S": np.empty((config.n_paths, n + 1)),
              "v": np.empty(shape), "a_mean": np.empty(shape), "a_feed": np.empty(shape),
              "dWx": dwx, "dWs": dws}
        tr["X"][:, 0] = x
        tr["S"][:, 0] = s

    traded = np.zeros(config.n_paths)  # sum of S_tilde dX
    risk_sum = np.zeros(config.n_paths)
    entropy_sum = np.zeros(config.n_paths)
    for k in range(n):
        t = grid[k]
        v = strategy.rate(t, x, dt)
        a = _posterior_mean(config, t, x, v)
        prec = _posterior_precision(config, t)
        a_feed = a + market_z[:, k] / math.sqrt(prec) if market_z is not None else a

        risk_sum += dt * _running_risk(config, t, x, v, a, prec)
        prior = config.prior.at(t)
        entropy_sum += dt * kl_gaussian_array(a, prec, prior.mean, prior.precision) / p.beta

        dx = v * dt + p.sigma_X * dwx[:, k]
        traded += (s + p.eta * v) * dx
        x_new = x + dx
        s = s + p.gamma * dx + p.gamma_M * a_feed * dt + p.sigma_S * dws[:, k]
        x = x_new
        _check_finite(k + 1, x, s)
        if keep:
            tr["v"][:, k] = v
            tr["a_mean"][:, k] = a
            tr["a_feed"][:, k] = a_feed
            tr["X"][:, k + 1] = x
            tr["S"][:, k + 1] = s

    v_pnl = -p.delta * x * x + x * s - p.x0 * p.s0 - traded
    v_total = v_pnl + risk_sum + entropy_sum
    return SimEnsemble(strategy=strategy.name, config=config, v_pnl=v_pnl, v_risk=risk_sum,
                       v_entropy=entropy_sum, v_total=v_total, x_T=x.copy(), s_T=s.copy(),
                       trajectories=tr if keep else None)


def _running_risk(config: SimConfig, t, x, v, a, prec):
    r = config.risk.at(t)
    second_moment = a * a + 1.0 / prec
    if config.model == 1:
        return 0.5 * r.r_xx * x * x + r.r_xa * x * a + 0.5 * r.r_aa * second_moment
    return 0.5 * r.r_vv * v * v + r.r_va * v * a + 0.5 * r.r_aa * second_moment


# --------------------------------------------------------------------------- pathwise P&L

def pnl_definition(path: SimPath, params: ModelParams) -> float:
    """``X_T (S_T - S_0) + sum (S_0 - S_tilde_k) dX_k - delta X_T^2`` along a stored path."""
    dx = np.diff(path.X)
    s_tilde = path.S[:-1] + params.eta * path.v
    x_T = path.X[-1]
    value = x_T * (path.S[-1] - path.S[0]) + np.sum((path.S[0] - s_tilde) * dx) - params.delta * x_T**2
    if not np.isfinite(value):
        raise NonfiniteState("P&L is non-finite", path_index=path.path_index)
    return float(value)


def pnl_transformed(path: SimPath, params: ModelParams, quadratic_variation: str = "realized") -> float:
    """P&L rewritten without the price path, from the stored increments.

    ``gamma/2 (X_T^2 - X_0^2) + gamma_M sum X a dt + sigma_S sum X dW^S
    + gamma/2 [X]_T + [S-noise, X]_T - eta sum v^2 dt - eta sigma_X sum v dW^X
    - delta X_T^2`` where the bracket terms are either realized from the
    increments or replaced by their expectations ``sigma_X^2 T`` and
    ``rho sigma_S sigma_X T``.
    """
    if path.dWx is None or path.dWs is None:
        raise IncrementsMissing("path was stored without its Brownian increments")
    dt = np.diff(path.t)
    x = path.X[:-1]
    sx, ss = params.sigma_X, params.sigma_S
    if quadratic_variation == "realized":
        qv_x = sx**2 * np.sum(path.dWx**2)
        qv_xs = ss * sx * np.sum(path.dWx * path.dWs)
    elif quadratic_variation == "deterministic":
        qv_x = sx**2 * np.sum(dt)
        qv_xs = params.rho * ss * sx * np.sum(dt)
    else:
        raise ValueError("quadratic_variation must be 'realized' or 'deterministic'")
    x_T, x_0 = path.X[-1], path.X[0]
    value = (0.5 * params.gamma * (x_T**2 - x_0**2)
             + params.gamma_M * np.sum(x * path.a_feed * dt)
             + ss * np.sum(x * path.dWs)
             + 0.5 * params.gamma * qv_x + qv_xs
             - params.eta * np.sum(path.v**2 * dt)
             - params.eta * sx * np.sum(path.v * path.dWx)
             - params.delta * x_T**2)
    return float(value)


def performance_decompose(path: SimPath, config: SimConfig) -> Tuple[float, float, float]:
    """Left-endpoint Riemann sums of ``(V_PnL, V_risk, V_entropy)`` along a stored path."""
    p = config.params
    v_pnl = pnl_definition(path, p)
    dt = np.diff(path.t)
    v_risk = 0.0
    v_entropy = 0.0
    for k, t in enumerate(path.t[:-1]):
        prec = _posterior_precision(config, t)
        a = path.a_mean[k]
        v_risk += dt[k] * float(_running_risk(config, t, path.X[k], path.v[k], a, prec))
        prior = config.prior.at(t)
        v_entropy += dt[k] * float(kl_gaussian_array(a, prec, prior.mean, prior.precision)) / p.beta
    return v_pnl, v_risk, v_entropy


# --------------------------------------------------------------------------- comparisons

def compare(first: SimEnsemble, second: SimEnsemble) -> Dict[str, Dict[str, float]]:
    """Mean differences ``first - second`` per component.

    ``pooled_std_error`` treats the ensembles as independent,
    ``paired_std_error`` uses per-path differences (valid when both share
    the same noise, as with a common seed).
    """
    out = {}
    for name in COMPONENTS:
        a, b = first.component(name), second.component(name)
        delta = float(np.mean(a) - np.mean(b))
        if a.size > 1 and b.size > 1:
            pooled = math.sqrt(np.var(a, ddof=1) / a.size + np.var(b, ddof=1) / b.size)
        else:
            pooled = None
        paired = None
        if a.size == b.size and a.size > 1:
            paired = float(np.std(a - b, ddof=1) / math.sqrt(a.size))
        out[name] = {"delta_mean": delta, "pooled_std_error": pooled, "paired_std_error": paired}
    return out


def histograms(ensembles: Sequence[SimEnsemble], bins: int = HISTOGRAM_BINS):
    """Shared-edge histograms per component.

    Edges are ``bins`` uniform bins over the pooled ``[min, max]`` of all
    ensembles. Returns ``{component: (edges, {strategy: counts})}``.
    """
    out = {}
    for name in COMPONENTS:
        pooled = np.concatenate([e.component(name) for e in ensembles])
        lo, hi = float(pooled.min()), float(pooled.max())
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, bins + 1)
        counts = {e.strategy: np.histogram(e.component(name), bins=edges)[0] for e in ensembles}
        out[name] = (edges, counts)
    return out
