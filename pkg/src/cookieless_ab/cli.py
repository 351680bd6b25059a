"""Command-line interface: simulate sweeps, estimate from logs, serve HTTP.

Exit codes: 0 on success, 2 for invalid configs or inputs, 3 for
runtime failures (unusable data, I/O trouble mid-run).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import ConfigError, EstimationError, ValidationError
from .estimators import (
    corrected_cate,
    corrected_te,
    covariate_adjusted_ate,
    hoeffding_ci,
    naive_adjusted_ate,
    naive_ate,
    quartets_by_bin,
    summarize_cells,
    variance_bound,
)
from .logs import ingest_log, records_to_site1_log
from .report import format_sweep_table, write_estimate_report, write_sweep_report
from .runconfig import load_run_config
from .simulator import sweep


def _add_simulate(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("simulate", help="run a replicated sweep from a config file")
    p.add_argument("--config", required=True, help="JSON or YAML run config")
    p.add_argument("--out", required=True, help="output directory for csv/json/figures")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_simulate)


def _add_estimate(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("estimate", help="estimate treatment effects from a site-1 log")
    p.add_argument("--log", required=True, help="site-1 log CSV")
    p.add_argument("--alpha", type=float, required=True, help="site-2 arm-3 probability in cluster C1")
    p.add_argument("--bins", type=int, default=0, help="quantile bins of x1 for per-bin effects")
    p.add_argument(
        "--bounds",
        default=None,
        help="outcome bounds lo,hi enabling the distribution-free interval",
    )
    p.add_argument("--out", default=None, help="directory for estimates.csv/json/png")
    p.set_defaults(func=cmd_estimate)


def _add_serve(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("serve", help="serve the HTTP API for the web UI")
    p.add_argument("--port", type=int, default=8326)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--state-dir", required=True, help="directory for persisted run artifacts")
    p.add_argument("--static", default=None, help="directory of web UI files to serve at /")
    p.set_defaults(func=cmd_serve)


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    if args.seed is not None:
        config = replace(config, synthetic=replace(config.synthetic, seed=args.seed))
    result = sweep(
        config.synthetic,
        config.design,
        config.sweep_axis,
        config.sweep_values,
        config.methods,
    )
    manifest = write_sweep_report(result, config.run_id, config.canonical(), args.out)
    print(f"run {config.run_id} -> {args.out}")
    print(format_sweep_table(result))
    if result.failures:
        print(f"{len(result.failures)} grid point(s) failed; see run.json", file=sys.stderr)
    del manifest
    return 0


def _parse_bounds(raw: str) -> tuple[float, float]:
    parts = raw.split(",")
    if len(parts) != 2:
        raise ValidationError(f"--bounds must look like lo,hi; got {raw!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ValidationError(f"--bounds must be numeric; got {raw!r}") from None
    if not lo < hi:
        raise ValidationError(f"--bounds must satisfy lo < hi; got {raw!r}")
    return lo, hi


def cmd_estimate(args: argparse.Namespace) -> int:
    records, issues = ingest_log(args.log)
    for issue in issues:
        print(f"{args.log}:{issue.line}: skipped: {issue.message}", file=sys.stderr)
    if not records:
        raise ValidationError(f"{args.log} has no usable rows")

    bounds = _parse_bounds(args.bounds) if args.bounds else None
    if bounds is None:
        values = {r.outcome for r in records if r.period == 1}
        if values <= {0.0, 1.0}:
            bounds = (0.0, 1.0)  # binary outcomes carry their own bounds

    log = records_to_site1_log(records, outcome_bounds=bounds)
    quartet = summarize_cells(log)
    alpha = args.alpha

    estimates = [naive_ate(quartet), corrected_te(quartet, alpha)]
    if log.covariate_dim > 0:
        estimates.insert(1, naive_adjusted_ate(log))
        estimates.append(covariate_adjusted_ate(log, alpha))

    extras: dict = {
        "alpha": alpha,
        "n_rows": log.n,
        "rows_skipped": len(issues),
        "cells": [
            {
                "cluster": cell.cluster.value,
                "treatment": cell.treatment.value,
                "n": cell.n,
                "mean": cell.mean,
                "sample_variance": cell.sample_variance,
            }
            for cell in quartet.cells
        ],
    }

    bound = variance_bound(quartet, alpha)
    extras["variance_bound"] = {
        "multiplier": bound.multiplier,
        "var_lower": bound.var_lower,
        "var_upper": bound.var_upper,
        "v_min": bound.v_min,
        "v_max": bound.v_max,
    }
    if bounds is not None:
        lo, hi = hoeffding_ci(quartet, alpha)
        extras["hoeffding_ci"] = {"lo": lo, "hi": hi, "level": 0.95}
    if args.bins:
        bins = quartets_by_bin(log, covariate=0, n_bins=args.bins)
        extras["cate"] = {
            label: {"point": est.point, "std_error": est.std_error, "n": est.n_total}
            for label, est in corrected_cate(bins, alpha).items()
        }

    width = max(len(e.method.label) for e in estimates)
    print(f"{'method':<{width}}  {'estimate':>12}  {'std err':>12}  95% CI")
    for est in estimates:
        ci = f"[{est.ci.lo:+.6f}, {est.ci.hi:+.6f}]" if est.ci else ""
        print(f"{est.method.label:<{width}}  {est.point:>+12.6f}  {est.std_error:>12.6f}  {ci}")
    if "hoeffding_ci" in extras:
        h = extras["hoeffding_ci"]
        print(f"{'corrected (distribution-free)':<{width}}  CI [{h['lo']:+.6f}, {h['hi']:+.6f}]")
    if "cate" in extras:
        print("per-bin corrected effects:")
        for label, row in extras["cate"].items():
            print(f"  {label:<24} {row['point']:>+12.6f}  (se {row['std_error']:.6f}, n {row['n']})")

    if args.out:
        write_estimate_report(estimates, extras, args.out)
        print(f"report -> {args.out}")
    else:
        from .report import estimate_rows

        print(json.dumps({"estimates": estimate_rows(estimates), **extras}, indent=2))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(Path(args.state_dir), static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cookieless-ab",
        description="Privacy-preserving cross-site A/B testing toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_estimate(sub)
    _add_serve(sub)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("error: invalid config", file=sys.stderr)
        for path, message in exc.issues:
            print(f"  {path or '<root>'}: {message}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
