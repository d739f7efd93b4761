"""Command-line surface: frontier estimation on CSV data, the simulation
studies, bandwidth selection, tail estimation and limit-law diagnostics.

Exit codes: 0 success, 2 bad input, 3 numerical failure.  All randomness
flows from one seed (printed to stderr); outputs are byte-stable given
the seed and configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .auxiliary import kde_density, local_cubic_second_derivative
from .errors import FrontierError, MalformedRow
from .estimators import (
    Dataset,
    EstimatorConfig,
    build_residual_set,
    estimate_curve,
    residuals,
)
from .io import load_csv, read_config, save_csv, write_table, _fmt
from .kernels import biquadratic_kernel, full_ball
from .limits import (
    LimitContext,
    bandwidth_global,
    bandwidth_local,
    eval_Q1,
    rho0_search,
    tau,
)
from .simulation import (
    DEFAULT_SEED,
    SimScenario,
    run_comparison,
    run_mc_study,
    select_bandwidth,
    synthetic_utility,
    table_scenarios,
)
from .tail import hill_estimate, select_r

_INPUT_ERRORS = (MalformedRow, ValueError, OSError, NotImplementedError)

ESTIMATE_CSV_HEADER = "x,a_tilde,a_smooth,status,h_used"


def _merge(args: argparse.Namespace, defaults: dict) -> dict:
    """flags > config file > defaults; unknown config keys are rejected."""
    cfg = {}
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        unknown = set(cfg) - set(defaults)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key, default)
    return out


def _print_seed(seed: int) -> None:
    print(f"seed={seed}", file=sys.stderr)


def _require_positive(d: dict, *keys: str) -> None:
    for key in keys:
        v = d.get(key)
        if v is not None and not (isinstance(v, (int, float)) and v > 0):
            raise ValueError(f"--{key.replace('_', '-')} must be positive, got {v!r}")


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_estimate(args) -> int:
    d = _merge(
        args,
        dict(
            data=None,
            orientation="lower",
            grid_start=None,
            grid_stop=None,
            grid_count=34,
            bandwidth_mode="local",
            h=None,
            smoother="hat",
            resolution=201,
            aux_bandwidth=None,
            r_fraction=0.9,
            n_mc=1000,
            J=200,
            seed=DEFAULT_SEED,
            output=None,
        ),
    )
    if d["data"] is None:
        raise ValueError("--data is required")
    _require_positive(d, "grid_count", "h", "resolution", "aux_bandwidth", "n_mc", "J")
    if not (0.0 < float(d["r_fraction"]) < 1.0):
        raise ValueError("--r-fraction must lie in (0, 1)")
    data = load_csv(d["data"], orientation=d["orientation"])
    _print_seed(d["seed"])
    lo = d["grid_start"] if d["grid_start"] is not None else float(data.design.min())
    hi = d["grid_stop"] if d["grid_stop"] is not None else float(data.design.max())
    if not (hi > lo):
        raise ValueError("grid bounds must satisfy start < stop")
    grid = np.linspace(lo, hi, int(d["grid_count"]))
    aux_bw = d["aux_bandwidth"] if d["aux_bandwidth"] is not None else (hi - lo) / 5.0

    mode = d["bandwidth_mode"]
    statuses_extra: dict[int, str] = {}
    if mode == "fixed":
        if d["h"] is None:
            raise ValueError("--h is required for fixed bandwidth mode")
        cfgs: list[EstimatorConfig] = [EstimatorConfig(h=float(d["h"]))] * len(grid)
    elif mode == "local":
        cfgs = []
        for i, x in enumerate(grid):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=int(d["seed"]), spawn_key=(i,))
            )
            try:
                plan, _ = select_bandwidth(
                    data,
                    float(x),
                    rng,
                    aux_bandwidth=aux_bw,
                    r_fraction=float(d["r_fraction"]),
                    n_mc=int(d["n_mc"]),
                    J=int(d["J"]),
                )
                cfgs.append(EstimatorConfig(h=plan.h))
            except FrontierError:
                statuses_extra[i] = "selector_failed"
                cfgs.append(EstimatorConfig(h=aux_bw))
        if len(statuses_extra) > 0.5 * len(grid):
            raise FrontierError("bandwidth selection failed on most of the grid")
    elif mode == "global":
        plan = _global_plan(data, grid, aux_bw, d)
        cfgs = [EstimatorConfig(h=plan.h)] * len(grid)
    else:
        raise ValueError("bandwidth mode must be fixed, local or global")

    points = estimate_curve(
        data,
        [np.array([float(x)]) for x in grid],
        cfgs,
        smoother=d["smoother"],
        resolution=int(d["resolution"]),
    )
    rows = []
    bad = 0
    for i, cp in enumerate(points):
        status = statuses_extra.get(i, cp.status)
        if status not in ("bounded", "unbounded"):
            bad += 1
        rows.append([_fmt(cp.x[0]), _fmt(cp.a_tilde), _fmt(cp.a_smooth), status, _fmt(cp.h_used)])
    text = write_table(None, ESTIMATE_CSV_HEADER, rows)
    _emit(text, d["output"])
    if bad > 0.5 * len(points):
        raise FrontierError("numerical failure on more than half the grid")
    return 0


def _global_plan(data: Dataset, grid: np.ndarray, aux_bw: float, d: dict):
    """Global bandwidth: pooled tail exponent (median of per-point fits,
    per-point constants re-fitted under it), per-point curvature and
    intensity, one integrated rho search."""
    kernel = biquadratic_kernel(1)
    xs, contexts, w_hats = [], [], []
    per_point = []
    for x in grid:
        try:
            res = residuals(data, EstimatorConfig(h=aux_bw), float(x))
            if res.N1 < 2:
                continue
            r = select_r(res.N1, 0.9)
            tp = hill_estimate(res, r)
            curv = local_cubic_second_derivative(data, float(x), aux_bw, kernel)
            dens = kde_density(data.design, float(x), kernel)
            per_point.append((float(x), res, r, tp, curv, dens))
        except FrontierError:
            continue
    if not per_point:
        raise FrontierError("global bandwidth selection found no usable grid point")
    c_global = float(np.median([tp.c_hat for _, _, _, tp, _, _ in per_point]))
    for x, res, r, tp, curv, dens in per_point:
        b_here = (r / res.N1) * float(res.residuals[r]) ** (-c_global)
        xs.append(x)
        contexts.append(
            LimitContext(
                c=c_global,
                b=b_here,
                curvature=-abs(curv.second_derivative),
                region=full_ball(1),
                J=int(d["J"]),
            )
        )
        w_hats.append(dens.w_hat)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=int(d["seed"]), spawn_key=(0xB,)))
    return bandwidth_global(np.array(xs), contexts, np.array(w_hats), data.n, None, int(d["n_mc"]), rng)


def cmd_simulate(args) -> int:
    d = _merge(
        args,
        dict(
            table=1,
            n=None,
            reps=100,
            estimator="hat",
            bandwidth_mode="selector",
            h=None,
            n_mc=1000,
            resolution=201,
            workers=1,
            seed=DEFAULT_SEED,
            output=None,
        ),
    )
    _require_positive(d, "n", "reps", "h", "n_mc", "resolution", "workers")
    _print_seed(d["seed"])
    n = int(d["n"]) if d["n"] is not None else (200 if int(d["table"]) == 1 else 400)
    scenarios = table_scenarios(n, reps=int(d["reps"]), seed=int(d["seed"]))
    table = run_mc_study(
        scenarios,
        estimator=d["estimator"],
        bandwidth=d["bandwidth_mode"],
        fixed_h=d["h"],
        n_mc=int(d["n_mc"]),
        resolution=int(d["resolution"]),
        workers=int(d["workers"]),
    )
    _emit(table.to_csv(), d["output"])
    return 0


def cmd_compare(args) -> int:
    d = _merge(
        args,
        dict(
            reps=100,
            n_list="200,400",
            h_grid_min=0.015,
            h_grid_max=0.4,
            h_grid_count=14,
            resolution=201,
            workers=1,
            seed=DEFAULT_SEED,
            output=None,
        ),
    )
    _require_positive(d, "reps", "h_grid_min", "h_grid_max", "h_grid_count", "resolution", "workers")
    _print_seed(d["seed"])
    ns = [int(v) for v in str(d["n_list"]).split(",") if v]
    scenarios = []
    for n in ns:
        scenarios.extend(table_scenarios(n, reps=int(d["reps"]), seed=int(d["seed"])))
    result = run_comparison(
        scenarios,
        h_grid=np.geomspace(float(d["h_grid_min"]), float(d["h_grid_max"]), int(d["h_grid_count"])),
        resolution=int(d["resolution"]),
        workers=int(d["workers"]),
    )
    _emit(result.to_csv(), d["output"])
    print(
        f"wins={result.wins}/{len(result.rows)} median_ratio={result.median_ratio:.4g}",
        file=sys.stderr,
    )
    return 0


def cmd_bandwidth(args) -> int:
    d = _merge(
        args,
        dict(
            data=None,
            orientation="lower",
            x=None,
            aux_bandwidth=0.25,
            r_fraction=0.9,
            n_mc=1000,
            J=200,
            seed=DEFAULT_SEED,
            w_hat=None,
            rho0=None,
            c_hat=None,
            p=1,
            n=None,
            output=None,
        ),
    )
    if d["data"] is None:
        # direct formula mode
        needed = ("w_hat", "rho0", "c_hat", "n")
        if any(d[k] is None for k in needed):
            raise ValueError("direct mode needs --w-hat, --rho0, --c-hat and --n")
        plan = bandwidth_local(
            float(d["w_hat"]), float(d["rho0"]), float(d["c_hat"]), int(d["p"]), int(d["n"])
        )
        text = write_table(
            None,
            "w_hat,rho0,c_hat,p,n,h",
            [[plan.w_hat, plan.rho0, plan.c_hat, plan.p, plan.n, plan.h]],
        )
        _emit(text, d["output"])
        return 0
    if d["x"] is None:
        raise ValueError("--x is required with --data")
    data = load_csv(d["data"], orientation=d["orientation"])
    _print_seed(d["seed"])
    rng = np.random.default_rng(int(d["seed"]))
    plan, tp = select_bandwidth(
        data,
        float(d["x"]),
        rng,
        aux_bandwidth=float(d["aux_bandwidth"]),
        r_fraction=float(d["r_fraction"]),
        n_mc=int(d["n_mc"]),
        J=int(d["J"]),
    )
    text = write_table(
        None,
        "x,c_hat,b_hat,w_hat,rho0,tau,h",
        [[d["x"], plan.c_hat, plan.b_hat, plan.w_hat, plan.rho0, plan.tau_at_rho0, plan.h]],
    )
    _emit(text, d["output"])
    return 0


def cmd_tails(args) -> int:
    d = _merge(
        args,
        dict(
            data=None,
            orientation="lower",
            residuals=None,
            x=None,
            h=None,
            r=None,
            r_fraction=0.9,
            output=None,
        ),
    )
    if d["residuals"] is not None:
        values = [
            float(line)
            for line in Path(d["residuals"]).read_text().splitlines()
            if line.strip()
        ]
        res = build_residual_set(values, 0.0, float(d["h"]) if d["h"] else 1.0)
    elif d["data"] is not None:
        if d["x"] is None or d["h"] is None:
            raise ValueError("--x and --h are required with --data")
        data = load_csv(d["data"], orientation=d["orientation"])
        res = residuals(data, EstimatorConfig(h=float(d["h"])), float(d["x"]))
    else:
        raise ValueError("provide --residuals or --data")
    if res.N1 < 2:
        raise ValueError("fewer than two positive residuals")
    r = int(d["r"]) if d["r"] is not None else select_r(res.N1, float(d["r_fraction"]))
    tp = hill_estimate(res, r)
    text = write_table(None, "b_hat,c_hat,r,N1", [[tp.b_hat, tp.c_hat, tp.r, tp.N1]])
    _emit(text, d["output"])
    return 0


def cmd_limits(args) -> int:
    d = _merge(
        args,
        dict(
            c=1.0,
            b=1.0,
            curvature=0.0,
            J=200,
            rho=None,
            rho_grid_min=1e-3,
            rho_grid_max=1e3,
            rho_grid_count=25,
            n_mc=1000,
            n_draws=0,
            seed=DEFAULT_SEED,
            output=None,
            draws_out=None,
        ),
    )
    _print_seed(d["seed"])
    ctx = LimitContext(
        c=float(d["c"]),
        b=float(d["b"]),
        curvature=float(d["curvature"]),
        region=full_ball(1),
        J=int(d["J"]),
    )
    rng = np.random.default_rng(int(d["seed"]))
    if d["rho"] is not None:
        rhos = [float(d["rho"])]
    else:
        rhos = list(
            np.geomspace(float(d["rho_grid_min"]), float(d["rho_grid_max"]), int(d["rho_grid_count"]))
        )
    rows = []
    for rho in rhos:
        t = tau(ctx, float(rho), int(d["n_mc"]), np.random.default_rng(int(d["seed"])))
        rows.append([rho, t])
    _emit(write_table(None, "rho,tau", rows), d["output"])
    if d["draws_out"] and int(d["n_draws"]) > 0:
        rho = rhos[0]
        draw_rows = []
        for i in range(int(d["n_draws"])):
            draw_rows.append([i, eval_Q1(ctx, float(rho), 1.0, rng)])
        write_table(d["draws_out"], "draw,q1", draw_rows)
    return 0


def cmd_fixture(args) -> int:
    d = _merge(args, dict(seed=123123, n=123, output="utility_fixture.csv"))
    _print_seed(d["seed"])
    data = synthetic_utility(seed=int(d["seed"]), n=int(d["n"]))
    save_csv(data, d["output"])
    return 0


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="key=value config file (flags override it)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--output", "-o")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="frontier",
        description="Boundary-curve regression with end-point errors.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("estimate", help="frontier curve on a CSV dataset")
    _add_common(sp)
    sp.add_argument("--data")
    sp.add_argument("--orientation", choices=["lower", "upper"])
    sp.add_argument("--grid-start", type=float, dest="grid_start")
    sp.add_argument("--grid-stop", type=float, dest="grid_stop")
    sp.add_argument("--grid-count", type=int, dest="grid_count")
    sp.add_argument("--bandwidth-mode", choices=["fixed", "local", "global"], dest="bandwidth_mode")
    sp.add_argument("--h", type=float)
    sp.add_argument("--smoother", choices=["hat", "check", "none"])
    sp.add_argument("--resolution", type=int)
    sp.add_argument("--aux-bandwidth", type=float, dest="aux_bandwidth")
    sp.add_argument("--r-fraction", type=float, dest="r_fraction")
    sp.add_argument("--n-mc", type=int, dest="n_mc")
    sp.add_argument("--J", type=int)
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("simulate", help="replication study over the model grid")
    _add_common(sp)
    sp.add_argument("--table", type=int, choices=[1, 2])
    sp.add_argument("--n", type=int)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--estimator", choices=["hat", "check", "tilde", "naive", "true"])
    sp.add_argument("--bandwidth-mode", choices=["selector", "fixed", "rate_rule"], dest="bandwidth_mode")
    sp.add_argument("--h", type=float)
    sp.add_argument("--n-mc", type=int, dest="n_mc")
    sp.add_argument("--resolution", type=int)
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("compare", help="smoothed vs naive MSE over the study grid")
    _add_common(sp)
    sp.add_argument("--reps", type=int)
    sp.add_argument("--n-list", dest="n_list")
    sp.add_argument("--h-grid-min", type=float, dest="h_grid_min")
    sp.add_argument("--h-grid-max", type=float, dest="h_grid_max")
    sp.add_argument("--h-grid-count", type=int, dest="h_grid_count")
    sp.add_argument("--resolution", type=int)
    sp.add_argument("--workers", type=int)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("bandwidth", help="plug-in bandwidth (formula or data mode)")
    _add_common(sp)
    sp.add_argument("--data")
    sp.add_argument("--orientation", choices=["lower", "upper"])
    sp.add_argument("--x", type=float)
    sp.add_argument("--aux-bandwidth", type=float, dest="aux_bandwidth")
    sp.add_argument("--r-fraction", type=float, dest="r_fraction")
    sp.add_argument("--n-mc", type=int, dest="n_mc")
    sp.add_argument("--J", type=int)
    sp.add_argument("--w-hat", type=float, dest="w_hat")
    sp.add_argument("--rho0", type=float)
    sp.add_argument("--c-hat", type=float, dest="c_hat")
    sp.add_argument("--p", type=int)
    sp.add_argument("--n", type=int)
    sp.set_defaults(func=cmd_bandwidth)

    sp = sub.add_parser("tails", help="tail exponent/constant from residuals")
    _add_common(sp)
    sp.add_argument("--data")
    sp.add_argument("--orientation", choices=["lower", "upper"])
    sp.add_argument("--residuals", help="plain file, one residual per line")
    sp.add_argument("--x", type=float)
    sp.add_argument("--h", type=float)
    sp.add_argument("--r", type=int)
    sp.add_argument("--r-fraction", type=float, dest="r_fraction")
    sp.set_defaults(func=cmd_tails)

    sp = sub.add_parser("limits", help="tau(rho) curves and sup-inf draw samples")
    _add_common(sp)
    sp.add_argument("--c", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--curvature", type=float)
    sp.add_argument("--J", type=int)
    sp.add_argument("--rho", type=float)
    sp.add_argument("--rho-grid-min", type=float, dest="rho_grid_min")
    sp.add_argument("--rho-grid-max", type=float, dest="rho_grid_max")
    sp.add_argument("--rho-grid-count", type=int, dest="rho_grid_count")
    sp.add_argument("--n-mc", type=int, dest="n_mc")
    sp.add_argument("--n-draws", type=int, dest="n_draws")
    sp.add_argument("--draws-out", dest="draws_out")
    sp.set_defaults(func=cmd_limits)

    sp = sub.add_parser("fixture", help="write the synthetic utility-style dataset")
    _add_common(sp)
    sp.add_argument("--n", type=int)
    sp.set_defaults(func=cmd_fixture)

    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FrontierError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
