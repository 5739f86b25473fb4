"""``warpcurv <command> --config <path> [--out <dir>] [--seed <n>]``.

Each run writes ``report.json`` (sorted keys; only ``timestamp`` varies
between identical runs) and command-specific CSV tables into the output
directory.  Exit status: 0 pass, 2 fail, 1 error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    COMMANDS,
    ConfigError,
    build_curve,
    build_family,
    build_metric,
    load_config,
    sampling_grid,
    scalar_grid,
)
from .families import PiecewiseWarpMetric, breakpoint_smoothness
from .heatflow import affine_deviation, curve_to_csv, energy, flow_until
from .pinching import curvature_range, find_alpha0, find_min_r, rows_to_csv
from .warp import compare_with_engine

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
DEFAULT_OUT = "warpcurv-out"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


# -- commands -------------------------------------------------------------------


def run_curvature_sweep(cfg):
    grid = sampling_grid(cfg["grid"], cfg["seed"])
    sweep = cfg["sweep"] or {"key": None, "values": [None]}
    reports, rows = [], []
    for v in sweep["values"]:
        override = {} if sweep["key"] is None else {sweep["key"]: v}
        metric = build_metric(cfg["metric"], **override)
        rep = curvature_range(metric, grid, override, cfg["eps"])
        reports.append(rep.to_dict())
        rows.extend(rep.csv_rows())
    verdict = all(r["verdict"] is not False for r in reports)
    csvs = {"curvature.csv": rows_to_csv(["parameter", "t", "series", "value"], rows)}
    return dict(reports=reports), verdict, csvs


def run_pinch_find(cfg):
    eps = cfg["eps"]
    expect = cfg["expect"]
    if cfg["mode"] == "alpha0":
        fam = build_family(cfg["family"])
        alphas = scalar_grid(cfg["alpha_grid"], "alpha_grid")
        rep = find_alpha0(fam, eps, alphas, cfg["n_t"])
        verdict = rep.found
        if verdict and "alpha0" in expect:
            verdict = abs(rep.alpha0 - expect["alpha0"]) <= expect.get("tolerance", 1e-9)
        rows = [(r["alpha"], r["max_deviation"], int(r["passed"]), r["witness_term"], r["witness_t"])
                for r in rep.table]
        csvs = {"alpha_table.csv": rows_to_csv(
            ["alpha", "max_deviation", "passed", "witness_term", "witness_t"], rows)}
        return rep.to_dict(), verdict, csvs
    grid = sampling_grid(cfg["grid"], cfg["seed"])
    r_grid = scalar_grid(cfg["r_grid"], "r_grid")
    s_values = cfg["s_values"]
    if s_values is None:
        def builder(r):
            return build_metric(cfg["metric"], r=r)
    else:
        def builder(r, s):
            return build_metric(cfg["metric"], r=r, s=s)
    rep = find_min_r(builder, eps, r_grid, grid, s_values)
    verdict = rep.found
    if expect.get("deviation_non_increasing"):
        verdict = verdict and rep.non_increasing(slack=1e-12)
    rows = [(r["r"], r["K_min"], r["K_max"], r["worst_deviation"], int(r["passed"])) for r in rep.table]
    csvs = {"r_table.csv": rows_to_csv(["r", "K_min", "K_max", "worst_deviation", "passed"], rows)}
    return rep.to_dict(), verdict, csvs


def run_family_check(cfg):
    grid = sampling_grid(cfg["grid"], cfg["seed"])
    s_values = cfg["s_values"]
    spec = cfg["metric"]
    cases = [None] if s_values is None else list(s_values)
    results, rows, verdict = [], [], True
    for s in cases:
        override = {} if s is None else {"s": s}
        metric = build_metric(spec, **override)
        entry = dict(parameter=override)
        if isinstance(metric, PiecewiseWarpMetric):
            sm = breakpoint_smoothness(metric, cfg["smoothness_order"])
            entry["smoothness"] = sm.to_dict()
            verdict = verdict and sm.passed
        rep = curvature_range(metric, grid, override, cfg["eps"])
        entry["curvature"] = rep.to_dict()
        if rep.verdict is False:
            verdict = False
        rows.extend(rep.csv_rows())
        results.append(entry)
    csvs = {"curvature.csv": rows_to_csv(["parameter", "t", "series", "value"], rows)}
    return dict(cases=results), verdict, csvs


def run_heatflow(cfg):
    curve = build_curve(cfg)
    e0 = energy(curve)
    final, trace = flow_until(curve, cfg["tol"], cfg["max_steps"], record_every=cfg["record_every"])
    e_final = trace.steps[-1][1]
    results = dict(
        status=trace.status, steps=trace.n_steps, energy_initial=e0, energy_final=e_final,
        tension_final=trace.steps[-1][2], energy_monotone=trace.monotone,
        max_energy_increase=trace.max_energy_increase, winding=list(final.winding),
        winding_preserved=trace.winding_preserved, affine_deviation=affine_deviation(final),
        max_abs_x2=float(np.max(np.abs(final.samples[:, 1]))),
    )
    verdict = trace.status == "converged" and trace.monotone and trace.winding_preserved
    if cfg["expected_energy"] is not None:
        err = abs(e_final - cfg["expected_energy"])
        results["energy_error"] = err
        verdict = verdict and err <= cfg["energy_tolerance"]
    csvs = {"trace.csv": trace.to_csv(), "curve.csv": curve_to_csv(final)}
    return results, verdict, csvs


def run_oracle_check(cfg):
    rng = np.random.default_rng(cfg["seed"])
    out, rows, worst = [], [], 0.0
    for idx, c in enumerate(cfg["configs"]):
        metric = build_metric(dict(family="doubly_warped", **c))
        cmp = compare_with_engine(metric, cfg["frames"], rng)
        err = max(abs(kc - ke) for _, kc, ke in cmp)
        worst = max(worst, err)
        out.append(dict(config=c, frames=len(cmp), max_error=err))
        rows.extend((idx, j, kc, ke, abs(kc - ke)) for j, (_, kc, ke) in enumerate(cmp))
    csvs = {"oracle.csv": rows_to_csv(["config", "frame", "K_closed", "K_engine", "abs_error"], rows)}
    return dict(configs=out, max_error=worst, tol=cfg["tol"]), worst <= cfg["tol"], csvs


RUNNERS = {
    "curvature-sweep": run_curvature_sweep,
    "pinch-find": run_pinch_find,
    "family-check": run_family_check,
    "heatflow": run_heatflow,
    "oracle-check": run_oracle_check,
}


# -- entry point ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"warpcurv: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def build_parser():
    p = _Parser(prog="warpcurv", description="Warped-product curvature toolkit.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", help="output directory (default: $WARPCURV_OUT or ./warpcurv-out)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--version", action="version", version=f"warpcurv {__version__}")
    return p


def execute(command, cfg, out_dir):
    results, verdict, csvs = RUNNERS[command](cfg)
    report = dict(
        command=command,
        config_echo=cfg,
        version=__version__,
        seed=cfg["seed"],
        results=results,
        verdict="pass" if verdict else "fail",
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
    )
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n")
    for name, text in csvs.items():
        (out_dir / name).write_text(text)
    return report


def main(argv=None):
    args = build_parser().parse_args(argv)
    out_dir = args.out or os.environ.get("WARPCURV_OUT") or DEFAULT_OUT
    try:
        text = Path(args.config).read_text()
        cfg = load_config(args.command, text, args.seed)
        report = execute(args.command, cfg, out_dir)
    except ConfigError as exc:
        print(f"warpcurv: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # the exit-code contract: errors never escape as tracebacks
        print(f"warpcurv: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    print(f"warpcurv {args.command}: {report['verdict']} ({Path(out_dir) / 'report.json'})")
    return EXIT_PASS if report["verdict"] == "pass" else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
