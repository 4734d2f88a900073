"""End-to-end acceptance criteria.

Each test records its outcome in ``RESULTS``; the terminal summary prints
one PASS/FAIL line per criterion with its runtime.
"""

import math
import time

import numpy as np
import pytest

from entropy_execution import checks
from entropy_execution.closed_form import StrategyModel1, StrategyModel2
from entropy_execution.entropy_core import (
    DiscretizedDensity,
    QuadraticCost,
    functional_value,
    gibbs_posterior_oracle,
    minimize_entropy_functional,
    oracle_grid,
)
from entropy_execution.experiment import PRESET_SEED, preset
from entropy_execution.model_config import GaussianDist
from entropy_execution.riccati import solve_model1, solve_model2
from entropy_execution.simulator import AdaptedTWAP, compare, optimal_feedback, simulate_paths

RESULTS = {}


def _record(number, label, passed, detail, seconds):
    RESULTS.setdefault(number, []).append(
        {"label": label, "passed": bool(passed), "detail": detail, "seconds": seconds})
    assert passed, f"criterion {number} ({label}): {detail}"


def _max_rel(a, b):
    return float(np.max(np.abs(a - b) / np.abs(b)))


# --------------------------------------------------------------------------- 1

def test_criterion_1_riccati_matches_closed_form():
    start = time.perf_counter()
    worst = {}
    slowest = 0.0
    for name, solve, cls in (("m1-benchmark", solve_model1, StrategyModel1),
                             ("m2-benchmark", solve_model2, StrategyModel2)):
        cfg = preset(name)
        for mean in (0.0, 1e5):
            prior = GaussianDist(mean, cfg.prior.precision(0.0))
            exact = cls(cfg.params, prior, cfg.risk)
            for n in (1000, 10000):
                t0 = time.perf_counter()
                c = solve(cfg.params, prior, cfg.risk, n)
                slowest = max(slowest, time.perf_counter() - t0)
                err = _max_rel(c.h2, exact.h2(c.grid))
                if mean:
                    inner = slice(0, -1)  # H1(T) = 0
                    err = max(err, _max_rel(c.h1[inner], exact.h1(c.grid[inner])))
                worst[n] = max(worst.get(n, 0.0), err)
    passed = worst[1000] < 1e-6 and worst[10000] < 1e-8 and slowest < 1.0
    _record(1, "H2/H1", passed,
            f"max rel err {worst[1000]:.2e} @1000 (<1e-6), {worst[10000]:.2e} @10000 (<1e-8), "
            f"slowest solve {slowest:.3f} s (<1 s)", time.perf_counter() - start)


# --------------------------------------------------------------------------- 2

def _random_problem(rng):
    s = 10 ** rng.uniform(-3, 3)
    beta = 10 ** rng.uniform(-1, 1)
    c2 = rng.uniform(-0.8, 3.0) * s / beta
    c1 = rng.normal() * math.sqrt(s) / beta
    return QuadraticCost(c2, c1), GaussianDist(rng.normal() / math.sqrt(s), s), beta


def test_criterion_2_entropy_minimizer():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    n_cases, n_perturb = 100, 50
    worst_beat = -np.inf
    worst_moment = 0.0
    for _ in range(n_cases):
        cost, prior, beta = _random_problem(rng)
        post, value = minimize_entropy_functional(cost, prior, beta)
        grid = oracle_grid(prior, post, n_points=4001)
        base = DiscretizedDensity.from_gaussian(post, grid)
        z = (grid - post.mean) / post.std
        for j in range(n_perturb):
            if j % 2:
                coef = rng.normal(size=3) * 10 ** rng.uniform(-4, 0)
                log_w = base.log_weights + coef[0] * np.tanh(z) + coef[1] * np.cos(z) + coef[2] * np.exp(-z * z)
                pi = DiscretizedDensity(grid, None, log_weights=log_w)
            else:
                shift = rng.normal() * 10 ** rng.uniform(-4, 0)
                scale = math.exp(rng.normal() * 10 ** rng.uniform(-4, -0.5))
                pi = DiscretizedDensity.from_gaussian(
                    GaussianDist(post.mean + shift * post.std, post.precision * scale), grid)
            beat = value - functional_value(pi, cost, prior, beta)
            worst_beat = max(worst_beat, beat)
        prior_d = DiscretizedDensity.from_gaussian(prior, grid)
        gibbs = gibbs_posterior_oracle(prior_d, cost, beta)
        worst_moment = max(worst_moment, abs(gibbs.mean() - post.mean) / max(abs(post.mean), post.std),
                           abs(gibbs.variance() * post.precision - 1.0))
    seconds = time.perf_counter() - start
    passed = worst_beat <= 1e-8 and worst_moment < 1e-4 and seconds < 30
    _record(2, "minimizer", passed,
            f"{n_cases} problems x {n_perturb} perturbations, max improvement {worst_beat:.2e} (<=1e-8), "
            f"Gibbs moment rel err {worst_moment:.2e} (<1e-4)", seconds)


# --------------------------------------------------------------------------- 3

def test_criterion_3_strong_duality():
    start = time.perf_counter()
    g1 = checks.saddle_gaps(1, n_contexts=100, seed=1)
    g2 = checks.saddle_gaps(2, n_contexts=100, seed=2)
    passed = g1.max() < 1e-9 and g2.max() < 1e-8
    _record(3, "saddle", passed, f"worst rel gap model 1 {g1.max():.2e} (<1e-9), model 2 {g2.max():.2e} (<1e-8)",
            time.perf_counter() - start)


# --------------------------------------------------------------------------- 4

def test_criterion_4_twap_limits():
    start = time.perf_counter()
    errors = {name: checks.twap_limit_error(*case) for name, case in checks.twap_limit_cases().items()}
    passed = all(e < 1e-3 for e in errors.values())
    _record(4, "limits", passed, ", ".join(f"{k} {v:.2e}" for k, v in errors.items()) + " (<1e-3)",
            time.perf_counter() - start)


# --------------------------------------------------------------------------- 5

def test_criterion_5_pnl_identity():
    start = time.perf_counter()
    parts = []
    passed = True
    for name in ("m1-benchmark", "m2-benchmark"):
        cfg = preset(name).sim_config(n_paths=100, seed=PRESET_SEED)
        for label, factory in (("optimal", optimal_feedback), ("twap", lambda c: AdaptedTWAP(c.params.horizon))):
            rows = checks.identity_discrepancies(cfg, factory, steps=(500, 1000, 2000, 4000))
            order = checks.convergence_order(rows)
            rel = next(d / s for n, d, s in rows if n == 1000)
            passed &= order >= 0.9 and rel < 1e-2
            parts.append(f"{name}/{label} order {order:.3f} rel@1000 {rel:.1e}")
    _record(5, "identity", passed, "; ".join(parts) + " (order>=0.9, rel<1e-2)", time.perf_counter() - start)


# --------------------------------------------------------------------------- 6

def test_criterion_6_mean_terminal_inventory():
    start = time.perf_counter()
    cfg = preset("m1-benchmark").sim_config(n_paths=4096, n_steps=1000)
    strat = optimal_feedback(cfg)
    ens = simulate_paths(cfg, strat)
    exact = strat.strategy.expected_trajectory(cfg.params.horizon)
    se = ens.x_T.std(ddof=1) / math.sqrt(ens.n_paths)
    z = (ens.x_T.mean() - exact) / se
    seconds = time.perf_counter() - start
    passed = abs(z) < 3 and seconds < 60
    _record(6, "X_T", passed, f"mean {ens.x_T.mean():.1f} vs {exact:.1f}, {z:+.2f} SE (<3)", seconds)


# --------------------------------------------------------------------------- 7

@pytest.fixture(scope="module")
def stress_runs():
    runs = {}
    for name in ("m1-benchmark", "m1-large-eta-small-delta", "m2-large-gammaM", "m2-large-eta-small-delta"):
        start = time.perf_counter()
        cfg = preset(name).sim_config()
        opt = simulate_paths(cfg, optimal_feedback(cfg))
        twap = simulate_paths(cfg, AdaptedTWAP(cfg.params.horizon))
        runs[name] = (opt, twap, compare(opt, twap), time.perf_counter() - start)
    return runs


def test_criterion_7a_benchmark_totals_close(stress_runs):
    opt, twap, diff, seconds = stress_runs["m1-benchmark"]
    d = diff["v_total"]
    ratio = abs(d["delta_mean"]) / d["pooled_std_error"]
    _record(7, "7a totals", ratio < 2,
            f"|mean diff v_total| = {ratio:.3f} pooled SE (<2, seed {opt.config.seed})", seconds)


def test_criterion_7a_benchmark_ordering(stress_runs):
    _, _, diff, _ = stress_runs["m1-benchmark"]
    d_ent, d_risk = diff["v_entropy"]["delta_mean"], diff["v_risk"]["delta_mean"]
    # objective components are rewards: larger is better
    passed = d_ent < 0 and d_risk > 0
    _record(7, "7a ordering", passed,
            f"opt-twap v_entropy {d_ent:.3e} (<0), v_risk {d_risk:.3e} (>0)", 0.0)


def test_criterion_7b_large_eta_tradeoff(stress_runs):
    _, _, diff, seconds = stress_runs["m1-large-eta-small-delta"]
    d_risk, d_total = diff["v_risk"]["delta_mean"], diff["v_total"]["delta_mean"]
    passed = d_risk < 0 and d_total > 0
    _record(7, "7b", passed, f"opt-twap v_risk {d_risk:.3e} (<0), v_total {d_total:.3e} (>0)", seconds)


@pytest.mark.parametrize("name", ["m2-large-gammaM", "m2-large-eta-small-delta"])
def test_criterion_7c_concentration(stress_runs, name):
    opt, twap, _, seconds = stress_runs[name]
    ratio = opt.v_total.var(ddof=1) / twap.v_total.var(ddof=1)
    _record(7, f"7c {name}", ratio < 1, f"var ratio opt/twap {ratio:.3f} (<1)", seconds)


# --------------------------------------------------------------------------- 8

def test_criterion_8_determinism(tmp_path):
    from entropy_execution import cli

    start = time.perf_counter()
    args = ["simulate", "--preset", "m2-benchmark", "--paths", "256", "--steps", "200"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    same = (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()
    _record(8, "summary.json", same, "bit-identical" if same else "differs", time.perf_counter() - start)
