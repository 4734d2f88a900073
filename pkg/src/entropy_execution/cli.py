"""Command-line front end: ``entropy-exec solve|simulate|stress|check``.

Exit codes: 0 success, 1 invalid configuration, 2 invariant failure,
3 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import checks
from .closed_form import optimal_strategy
from .errors import (
    ConfigError,
    ConfigMismatch,
    EtaTildeViolation,
    ExecutionModelError,
    H0Unavailable,
    PrecisionViolation,
)
from .experiment import SCHEMA_VERSION, STRESS_TABLES, ExperimentConfig, preset
from .model_config import derive_model1_coeffs, derive_model2_coeffs
from .simulator import COMPONENTS, AdaptedTWAP, compare, histograms, optimal_feedback, simulate_paths

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_RUNTIME = 0, 1, 2, 3


def _fmt(value) -> str:
    """17 significant digits in scientific notation."""
    return f"{float(value):.16e}"


def _write_csv(path: Path, header: List[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _write_json(path: Path, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def load_config(config_path: Optional[str], preset_name: Optional[str]) -> ExperimentConfig:
    if config_path and preset_name:
        raise ConfigError("$", "use either --config or --preset, not both")
    if preset_name:
        return preset(preset_name)
    if not config_path:
        raise ConfigError("$", "a --config file or a --preset is required")
    try:
        with open(config_path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError("$", f"cannot read config: {exc}") from exc
    return ExperimentConfig.from_dict(data)


# --------------------------------------------------------------------------- solve

def run_solve(config: ExperimentConfig, out: Path) -> Dict:
    """Write ``curves.csv`` and ``coeffs.json`` for the configured model."""
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", config.to_dict())
    strat = optimal_strategy(config.model, config.params, config.prior, config.risk, n_steps=config.solver_steps)
    grid = np.linspace(0.0, config.params.horizon, config.solver_steps + 1)
    h2 = np.asarray(strat.h2(grid), dtype=float)
    h1 = np.broadcast_to(np.asarray(strat.h1(grid), dtype=float), grid.shape)
    try:
        h0 = np.asarray(strat.h0(grid), dtype=float)
    except H0Unavailable:
        h0 = np.full_like(grid, np.nan)
    slope, intercept = strat.feedback(grid)
    slope = np.broadcast_to(np.asarray(slope, dtype=float), grid.shape)
    intercept = np.broadcast_to(np.asarray(intercept, dtype=float), grid.shape)
    x_star = np.asarray(strat.expected_trajectory(grid), dtype=float)
    _write_csv(out / "curves.csv", ["t", "H2", "H1", "H0", "v_star_per_unit_x", "v_star_intercept", "x_star"],
               zip(grid, h2, h1, h0, slope, intercept, x_star))

    prior0 = config.prior.at(0.0)
    derive = derive_model1_coeffs if config.model == 1 else derive_model2_coeffs
    coeffs = dataclasses.asdict(derive(config.params, prior0, config.risk, 0.0))
    report = {
        "schema_version": SCHEMA_VERSION,
        "model": config.model,
        "provenance": strat.provenance,
        "coefficients_at_t0": coeffs,
        "g": config.params.g,
        "constant_coefficients": bool(config.prior.is_constant and config.risk.is_constant),
        "H2_0": float(h2[0]),
        "H1_0": float(h1[0]),
        "H0_0": float(h0[0]),
        "x_star_T_over_x0": float(x_star[-1] / x_star[0]),
    }
    if strat.provenance == "solver":
        report["solver_formulation"] = strat.coeffs.formulation
        report["solver_steps"] = config.solver_steps
    _write_json(out / "coeffs.json", _jsonable(report))
    return report


# --------------------------------------------------------------------------- simulate

def _strategy(name: str, sim_config):
    if name == "optimal":
        return optimal_feedback(sim_config)
    return AdaptedTWAP(sim_config.params.horizon)


def run_simulate(config: ExperimentConfig, out: Path) -> Dict:
    """Simulate every configured strategy on common noise and write
    per-strategy decompositions, pooled histograms and ``summary.json``."""
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", config.to_dict())
    sim = config.sim_config()
    ensembles = {}
    for name in config.strategies:
        ens = simulate_paths(sim, _strategy(name, sim))
        ensembles[name] = ens
        _write_csv(out / f"decomposition_{name}.csv", ["path_id", *COMPONENTS], ens.rows())

    hist = histograms(list(ensembles.values()))
    names = list(ensembles)
    rows = []
    for comp in COMPONENTS:
        edges, counts = hist[comp]
        for b in range(len(edges) - 1):
            rows.append([comp, b, edges[b], edges[b + 1], *[int(counts[n][b]) for n in names]])
    _write_csv(out / "histograms.csv", ["component", "bin", "left", "right", *[f"count_{n}" for n in names]], rows)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "preset": config.preset,
        "model": config.model,
        "seed": sim.seed,
        "n_paths": sim.n_paths,
        "n_steps": sim.n_steps,
        "strategies": {n: e.summary() for n, e in ensembles.items()},
    }
    if "optimal" in ensembles and "twap" in ensembles:
        summary["optimal_minus_twap"] = compare(ensembles["optimal"], ensembles["twap"])
    summary = _jsonable(summary)
    _write_json(out / "summary.json", summary)
    return summary


def run_stress(table: int, out: Path, seed=None, paths=None, steps=None) -> Dict:
    """Run every scenario of stress table 1 or 2 and write a comparison report."""
    if table not in STRESS_TABLES:
        raise ConfigError("table", "must be 1 or 2")
    out.mkdir(parents=True, exist_ok=True)
    report = {"schema_version": SCHEMA_VERSION, "table": table, "scenarios": {}}
    rows = []
    for name in STRESS_TABLES[table]:
        cfg = preset(name).with_overrides(seed=seed, paths=paths, steps=steps)
        summary = run_simulate(cfg, out / name)
        deltas = summary.get("optimal_minus_twap", {})
        report["scenarios"][name] = {
            "means": {s: {c: summary["strategies"][s][c]["mean"] for c in COMPONENTS} for s in summary["strategies"]},
            "optimal_minus_twap": deltas,
        }
        total = deltas.get("v_total", {})
        rows.append([name, total.get("delta_mean"), total.get("pooled_std_error"), total.get("paired_std_error")])
    _write_json(out / "stress_report.json", _jsonable(report))
    _write_csv(out / "stress_report.csv",
               ["scenario", "delta_mean_v_total", "pooled_std_error", "paired_std_error"],
               [[r[0], *[float("nan") if v is None else float(v) for v in r[1:]]] for r in rows])
    return report


def run_check(suite: str, out: Optional[Path] = None) -> Dict:
    if suite not in checks.SUITES:
        raise ConfigError("suite", f"must be one of {sorted(checks.SUITES)}")
    records = checks.run_suite(suite)
    report = _jsonable({"schema_version": SCHEMA_VERSION, "suite": suite,
                        "passed": all(r["passed"] for r in records), "checks": records})
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / f"check_{suite}.json", report)
    return report


# --------------------------------------------------------------------------- entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entropy-exec",
                                     description="Entropy-regularized robust order execution experiments.")
    parser.add_argument("command", choices=["solve", "simulate", "stress", "check"])
    parser.add_argument("--config", help="path to a JSON experiment configuration")
    parser.add_argument("--preset", help="named preset, e.g. m1-benchmark")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--paths", type=int)
    parser.add_argument("--steps", type=int)
    parser.add_argument("--table", type=int, choices=[1, 2])
    parser.add_argument("--suite", choices=sorted(checks.SUITES))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.command == "stress":
            if args.table is None:
                raise ConfigError("table", "--table is required for stress")
            run_stress(args.table, out, seed=args.seed, paths=args.paths, steps=args.steps)
            print(f"wrote {out / 'stress_report.json'}")
            return EXIT_OK
        if args.command == "check":
            if args.suite is None:
                raise ConfigError("suite", "--suite is required for check")
            report = run_check(args.suite, out)
            for rec in report["checks"]:
                print(f"{'PASS' if rec['passed'] else 'FAIL'} {rec['name']}: {rec['value']}")
            return EXIT_OK if report["passed"] else EXIT_INVARIANT
        config = load_config(args.config, args.preset).with_overrides(args.seed, args.paths, args.steps)
        if args.command == "solve":
            report = run_solve(config, out)
            print(f"provenance={report['provenance']} wrote {out / 'curves.csv'}")
        else:
            run_simulate(config, out)
            print(f"wrote {out / 'summary.json'}")
        return EXIT_OK
    except (ConfigError, PrecisionViolation, EtaTildeViolation, ConfigMismatch) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExecutionModelError, OSError, ArithmeticError) as exc:
        print(f"runtime error: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
