"""Command-line interface: scenario ingestion, solves, reports, simulation.

Subcommands:

    constants <scenario>      closed-form constants + regime classification (JSON)
    solve <scenario> --mode {constrained,unconstrained}
                              solution CSV (x, v, V, delta, a_star, hjb_residual)
                              plus a JSON summary
    asymptotes <scenario>     closed-form asymptote report (JSON)
    exp-validate <scenario>   solver strategy vs the independent feedback ODE
    simulate <scenario> --x0 X [--strategy optimal|zero|const:<a>|file:<path>]
                              Monte Carlo survival report (JSON)
    example1 / example2       benchmark scenarios end to end, figure-style CSVs

Exit codes: 0 success, 2 usage, 3 missing file, 4 invalid value,
5 unknown scenario key.  Every error message names the offending key.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .asymptotics import (
    asymptote_report,
    constrained_infinity_strategy,
    fit_tail_constant,
    strategy_expansion_infinity_exp,
    strategy_slope_zero,
)
from .claims import ClaimDistribution
from .constrained import extract_strategy_constrained, solve_v_constrained
from .constrained import hjb_residual as hjb_residual_capped
from .exp_ode import linear_ode_coeffs, reconstruct_vprime, solve_a_tilde, solve_linear_const_strategy
from .mc import SimConfig, estimate_survival
from .model import ModelParams, Regime, classify_infinity_regime, classify_zero_regime, derive_constants
from .numerics import Grid
from .results import StrategyCurve, normalize_delta
from .scenario import (
    BadValueError,
    Scenario,
    ScenarioError,
    UnknownKeyError,
    example1_distributions,
    example1_params,
    example2_distributions,
    example2_params,
    load_scenario,
    scenario_text,
)
from .unconstrained import extract_strategy_unconstrained, hjb_residual, solve_v_unconstrained

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_BAD_VALUE = 4
EXIT_UNKNOWN_KEY = 5


def _nine(x):
    if isinstance(x, float):
        return float(f"{x:.9g}") if math.isfinite(x) else x
    return x


def _round9(obj):
    """Clamp every float in a JSON-able structure to 9 significant digits."""
    if isinstance(obj, dict):
        return {k: _round9(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round9(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _nine(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_round9(v) for v in obj.tolist()]
    return _nine(obj)


def _emit(doc: dict) -> None:
    print(json.dumps(_round9(doc), indent=2, sort_keys=True, allow_nan=True))


def _write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    n = len(columns[0])
    lines = [",".join(header)]
    for i in range(n):
        lines.append(",".join(f"{float(col[i]):.9g}" for col in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _regime_doc(report) -> dict:
    return {
        "regime": report.regime.value,
        "boundary": report.boundary,
        "resolution": report.resolution.value if report.resolution else None,
        "note": report.note,
    }


def _constants_doc(sc: Scenario) -> dict:
    cons = derive_constants(sc.params, claim_mean=sc.exponential_mean)
    doc = {"constants": asdict(cons), "scenario": dict(sc.raw), "regimes": {}}
    if sc.params.cap is not None and sc.params.mu > sc.params.r:
        doc["regimes"]["zero_surplus"] = _regime_doc(classify_zero_regime(cons, sc.params))
        if sc.dist.family == "exponential":
            doc["regimes"]["large_surplus"] = _regime_doc(
                classify_infinity_regime(cons, sc.params, sc.dist)
            )
    return doc


def _cmd_constants(args) -> int:
    sc = load_scenario(args.scenario)
    doc = _constants_doc(sc)
    _emit(doc)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "constants.json").write_text(
            json.dumps(_round9(doc), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        (out / "scenario_echo.txt").write_text(scenario_text(sc), encoding="utf-8")
    return EXIT_OK


def _solve_one(sc: Scenario, mode: str):
    if mode == "constrained":
        if sc.params.cap is None:
            raise BadValueError("cap_A", "constrained solve needs cap_A in the scenario")
        vg = solve_v_constrained(sc.params, sc.dist, sc.grid)
        strat = extract_strategy_constrained(vg, sc.params)
        res = hjb_residual_capped(vg, strat, sc.params, sc.dist)
        res_doc = {
            "fixed_point": res.fixed_point,
            "fixed_point_at": res.fixed_point_at,
            "independent": res.independent,
            "independent_at": res.independent_at,
        }
    else:
        vg = solve_v_unconstrained(sc.params, sc.dist, sc.grid)
        strat = extract_strategy_unconstrained(vg, sc.params)
        res = hjb_residual(vg, strat, sc.params, sc.dist)
        res_doc = {
            "self_consistency": res.self_consistency,
            "self_consistency_at": res.self_consistency_at,
            "independent": res.independent,
            "independent_at": res.independent_at,
        }
    return vg, strat, res, res_doc


def _window_summary(vg) -> dict:
    ratios = [r for w in vg.windows for r in w.contraction_ratios]
    return {
        "count": len(vg.windows),
        "total_iterations": int(sum(w.iterations for w in vg.windows)),
        "max_iterations": max((w.iterations for w in vg.windows), default=0),
        "max_contraction_ratio": max(ratios, default=None),
    }


def _cmd_solve(args) -> int:
    sc = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    vg, strat, res, res_doc = _solve_one(sc, args.mode)
    elapsed = time.perf_counter() - t0

    norm = normalize_delta(vg, claim_mean=sc.exponential_mean)
    doc = {
        "mode": args.mode,
        "runtime_s": elapsed,
        "grid": {"h": sc.grid.h, "x_max": sc.grid.x_max, "n": sc.grid.n},
        "windows": _window_summary(vg),
        "residuals": res_doc,
        "v_prime_zero": float(vg.vprime[0]),
        "a_star_zero": float(strat.values[0]),
        "normalization": {
            "v_inf_hat": norm.v_inf_hat,
            "tail_remainder": norm.tail_remainder,
            "tail_slope": norm.tail_slope,
            "truncated": norm.truncated,
            "delta_slope_zero": 1.0 / norm.v_inf_hat if norm.v_inf_hat > 0 else None,
        },
    }
    if sc.dist.family == "exponential" and args.mode == "unconstrained":
        hi = sc.grid.x_max
        window = (min(30.0, 0.75 * hi), hi)
        fit = fit_tail_constant(vg, sc.params, sc.dist.mean, window=window)
        doc["tail_fit"] = asdict(fit)

    delta_vals = norm.delta.values
    csv_path = out / f"solve_{args.mode}.csv"
    _write_csv(
        csv_path,
        ["x", "v", "V", "delta", "a_star", "hjb_residual"],
        [vg.x, vg.v, vg.V, delta_vals, strat.values, res.pointwise],
    )
    doc["csv"] = str(csv_path)
    _emit(doc)
    return EXIT_OK


def _cmd_asymptotes(args) -> int:
    sc = load_scenario(args.scenario)
    report = asymptote_report(sc.params, claim_mean=sc.exponential_mean)
    doc = asdict(report)
    doc.pop("fit", None)
    _emit(doc)
    return EXIT_OK


def _cmd_exp_validate(args) -> int:
    sc = load_scenario(args.scenario)
    if sc.dist.family != "exponential":
        raise BadValueError("claim.family", "exp-validate needs exponential claims")
    m = sc.dist.mean
    cons = derive_constants(sc.params, claim_mean=m)
    slope = strategy_slope_zero(cons, sc.params)

    t0 = time.perf_counter()
    vg = solve_v_unconstrained(sc.params, sc.dist, sc.grid)
    strat = extract_strategy_unconstrained(vg, sc.params)
    shift = sc.params.rho * sc.params.sigma1 / sc.params.sigma
    a_tilde_solver = strat.values + shift

    x_seed = 1e-2
    seed_value = (cons.a_star_zero - slope * x_seed) + shift
    x_end = sc.grid.x_max
    curve = solve_a_tilde(sc.params, m, x_seed, x_end, step=1e-3, seed_value=seed_value)
    elapsed = time.perf_counter() - t0

    x = vg.x
    lo, hi = 1.0, min(10.0, sc.grid.x_max)
    mask = (x >= lo) & (x <= hi)
    ode_vals = curve(x[mask])
    rel = np.abs(a_tilde_solver[mask] - ode_vals) / np.abs(ode_vals)
    k = int(np.argmax(rel))

    recon = reconstruct_vprime(curve, sc.params, anchor=(x_seed, 1.0))
    pl_lo, pl_hi = min(30.0, 0.75 * x_end), x_end
    rx = recon.x[(recon.x >= pl_lo) & (recon.x <= pl_hi)]
    rv = recon(rx)
    logc = np.log(rv) + rx / m - (sc.params.lam / sc.params.r - 1.0) * np.log(rx)
    plateau = float(np.exp(logc.max() - logc.min()))

    doc = {
        "runtime_s": elapsed,
        "window": [lo, hi],
        "max_rel_deviation": float(rel[k]),
        "max_rel_deviation_at": float(x[mask][k]),
        "seed": {"x_seed": x_seed, "value": curve.seed, "note": curve.seed_note},
        "series": {"limit": curve.series[0], "coeff": curve.series[1]},
        "reconstructed_tail_plateau_ratio": plateau,
        "reconstructed_tail_window": [pl_lo, pl_hi],
    }
    _emit(doc)
    return EXIT_OK


def _load_strategy_file(path: str):
    try:
        table = np.loadtxt(path, delimiter=",", ndmin=2, comments="#", skiprows=0)
    except ValueError:
        table = np.loadtxt(path, delimiter=",", ndmin=2, comments="#", skiprows=1)
    except OSError:
        raise FileNotFoundError(path) from None
    if table.shape[1] < 2:
        raise BadValueError("strategy", f"strategy file {path!r} needs two columns x,a")
    xs = table[:, 0]
    vals = table[:, 1]

    def fn(q):
        return np.interp(q, xs, vals)

    return fn


def _optimal_strategy(sc: Scenario):
    if sc.params.cap is not None:
        vg = solve_v_constrained(sc.params, sc.dist, sc.grid)
        strat = extract_strategy_constrained(vg, sc.params)
        if sc.dist.family == "exponential" and sc.params.mu > sc.params.r:
            tail = constrained_infinity_strategy(sc.params, sc.params.cap, sc.dist.mean)
            strat.tail = (tail.limit, tail.coeff if tail.coeff is not None else 0.0)
        return strat
    vg = solve_v_unconstrained(sc.params, sc.dist, sc.grid)
    strat = extract_strategy_unconstrained(vg, sc.params)
    if sc.dist.family == "exponential":
        strat.tail = strategy_expansion_infinity_exp(sc.params, sc.dist.mean)
    return strat


def _cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    spec = args.strategy
    if spec == "optimal":
        strategy = _optimal_strategy(sc)
    elif spec == "zero":
        strategy = 0.0
    elif spec.startswith("const:"):
        try:
            strategy = float(spec.split(":", 1)[1])
        except ValueError:
            raise BadValueError("strategy", f"bad constant strategy {spec!r}") from None
    elif spec.startswith("file:"):
        strategy = _load_strategy_file(spec.split(":", 1)[1])
    else:
        raise BadValueError(
            "strategy", f"unknown strategy {spec!r}; use optimal, zero, const:<a>, file:<path>"
        )
    t0 = time.perf_counter()
    report = estimate_survival(sc.params, sc.dist, strategy, args.x0, sc.sim)
    elapsed = time.perf_counter() - t0
    doc = asdict(report)
    doc.update(
        {
            "runtime_s": elapsed,
            "x0": args.x0,
            "strategy": spec,
            "dt": sc.sim.dt,
            "horizon": sc.sim.horizon,
            "safe_level": sc.sim.safe_level,
            "master_seed": sc.sim.master_seed,
        }
    )
    _emit(doc)
    return EXIT_OK


_EXAMPLE2_LEGACY = {
    # values printed alongside this parameter set in earlier write-ups; they
    # cannot be reproduced from the stated parameters (the large-surplus pair
    # matches claim mean 2.5, not 2), so they are reported, never asserted
    "a_star_zero": -0.05274736,
    "strategy_slope_zero": -0.01112835,
    "infinity_limit": 0.163580,
    "infinity_coeff": 0.740741,
    "consistent_with_parameters": False,
}


def _run_example(n: int, out_dir: str) -> int:
    params = example1_params() if n == 1 else example2_params()
    dists = example1_distributions() if n == 1 else example2_distributions()
    grid = Grid.from_xmax(5e-3, 40.0)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    m_exp = dists["exponential"].mean
    doc = {
        "example": n,
        "asymptotes": asdict(asymptote_report(params, claim_mean=m_exp)),
        "claims": {},
    }
    doc["asymptotes"].pop("fit", None)
    if n == 2:
        doc["legacy_reference_values"] = dict(_EXAMPLE2_LEGACY)

    x = grid.points
    low_mask = x <= 5.0
    high_mask = x >= 5.0
    low_cols = [x[low_mask]]
    high_cols = [x[high_mask]]
    names = []
    for name, dist in dists.items():
        vg = solve_v_unconstrained(params, dist, grid)
        strat = extract_strategy_unconstrained(vg, params)
        norm = normalize_delta(vg, claim_mean=dist.mean if dist.family == "exponential" else None)
        names.append(name)
        low_cols.append(strat.values[low_mask])
        high_cols.append(strat.values[high_mask])
        entry = {
            "mean": dist.mean,
            "v_prime_zero": float(vg.vprime[0]),
            "a_star_zero": float(strat.values[0]),
            "v_inf_hat": norm.v_inf_hat,
            "truncated": norm.truncated,
        }
        if dist.family == "exponential":
            fit = fit_tail_constant(vg, params, dist.mean)
            entry["tail_fit"] = asdict(fit)
        doc["claims"][name] = entry

    header = ["x"] + [f"a_{name}" for name in names]
    low_path = out / f"example{n}_low_surplus.csv"
    high_path = out / f"example{n}_large_surplus.csv"
    _write_csv(low_path, header, low_cols)
    _write_csv(high_path, header, high_cols)
    doc["files"] = {"low_surplus": str(low_path), "large_surplus": str(high_path)}
    _emit(doc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ruinopt",
        description="Ruin-minimizing investment: solvers, asymptotics, simulation.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="closed-form constants and regimes")
    p.add_argument("scenario")
    p.add_argument("--out", default=None, help="also write constants.json and a scenario echo")
    p.set_defaults(fn=_cmd_constants)

    p = sub.add_parser("solve", help="solve the value slope and emit CSV + summary")
    p.add_argument("scenario")
    p.add_argument("--mode", choices=["constrained", "unconstrained"], required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("asymptotes", help="closed-form asymptote report")
    p.add_argument("scenario")
    p.set_defaults(fn=_cmd_asymptotes)

    p = sub.add_parser("exp-validate", help="solver strategy vs the feedback ODE")
    p.add_argument("scenario")
    p.set_defaults(fn=_cmd_exp_validate)

    p = sub.add_parser("simulate", help="Monte Carlo survival estimate")
    p.add_argument("scenario")
    p.add_argument("--x0", type=float, required=True)
    p.add_argument("--strategy", default="optimal")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("example1", help="benchmark 1 end to end")
    p.add_argument("--out", default=".")
    p.set_defaults(fn=lambda a: _run_example(1, a.out))

    p = sub.add_parser("example2", help="benchmark 2 end to end")
    p.add_argument("--out", default=".")
    p.set_defaults(fn=lambda a: _run_example(2, a.out))

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except UnknownKeyError as exc:
        print(f"error: {exc} (key: {exc.key})", file=sys.stderr)
        return EXIT_UNKNOWN_KEY
    except BadValueError as exc:
        print(f"error: {exc} (key: {exc.key})", file=sys.stderr)
        return EXIT_BAD_VALUE
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_VALUE


if __name__ == "__main__":
    sys.exit(main())
