"""Render sweep and estimate reports: delimited tables plus figures.

Every report lands as a CSV the analyst can reload, a JSON manifest a
service can serve, and PNG figures for humans, all side by side in the
output directory.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .core import EffectEstimate
from .simulator import SweepResult

SCHEMA_VERSION = 1

_METHOD_STYLE = {
    "uncorrected": dict(color="#d62728", marker="o"),
    "uncorrected+adj": dict(color="#ff9896", marker="s"),
    "corrected": dict(color="#1f77b4", marker="o"),
    "corrected+adj": dict(color="#17becf", marker="s"),
}

RESULT_COLUMNS = (
    "axis",
    "value",
    "true_te",
    "method",
    "mean_estimate",
    "bias",
    "std_error",
    "band_half_width",
    "band_lo",
    "band_hi",
    "n_reps",
)


def sweep_rows(result: SweepResult) -> list[dict]:
    rows = []
    for point in result.points:
        for summary in point.summaries:
            rows.append(
                {
                    "axis": point.axis,
                    "value": point.value,
                    "true_te": point.true_te,
                    "method": summary.method.label,
                    "mean_estimate": summary.mean_estimate,
                    "bias": summary.bias,
                    "std_error": summary.std_error_of_estimate,
                    "band_half_width": summary.band_half_width,
                    "band_lo": summary.mean_estimate - summary.band_half_width,
                    "band_hi": summary.mean_estimate + summary.band_half_width,
                    "n_reps": summary.n_reps,
                }
            )
    return rows


def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for row in sweep_rows(result):
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def sweep_manifest(result: SweepResult, run_id: str, config_snapshot: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "run_id": run_id,
        "config": config_snapshot,
        "axis": result.axis,
        "rows": sweep_rows(result),
        "failures": [
            {"value": value, "error": message} for value, message in result.failures
        ],
    }


def render_sweep_figure(result: SweepResult, path: str | Path) -> Path:
    """Two panels: bias per method with Monte Carlo bands, and spread.

    Error bars are 3 * sd / sqrt(n_reps), the band inside which an
    unbiased method should sit; the dashed zero line is the target.
    """
    methods = [s.method.label for s in result.points[0].summaries] if result.points else []
    fig, (ax_bias, ax_sd) = plt.subplots(1, 2, figsize=(11, 4.2))
    for label in methods:
        xs, biases, bands, sds = [], [], [], []
        for point in result.points:
            for summary in point.summaries:
                if summary.method.label == label:
                    xs.append(point.value)
                    biases.append(summary.bias)
                    bands.append(summary.band_half_width)
                    sds.append(summary.std_error_of_estimate)
        style = _METHOD_STYLE.get(label, {})
        ax_bias.errorbar(xs, biases, yerr=bands, label=label, capsize=3, **style)
        ax_sd.plot(xs, sds, label=label, **style)
    ax_bias.axhline(0.0, color="black", lw=0.8, ls="--")
    ax_bias.set_xlabel(result.axis)
    ax_bias.set_ylabel("bias of estimate")
    ax_bias.set_title("Bias vs truth")
    ax_sd.set_xlabel(result.axis)
    ax_sd.set_ylabel("std error of estimate")
    ax_sd.set_title("Replication spread")
    ax_bias.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_sweep_report(
    result: SweepResult, run_id: str, config_snapshot: dict, out_dir: str | Path
) -> dict:
    """Write csv + json + figure for one sweep; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(result, out / "results.csv")
    manifest = sweep_manifest(result, run_id, config_snapshot)
    manifest["artifacts"] = {
        "csv": "results.csv",
        "json": "run.json",
        "figure": f"bias_vs_{result.axis}.png",
    }
    render_sweep_figure(result, out / f"bias_vs_{result.axis}.png")
    (out / "run.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def format_sweep_table(result: SweepResult) -> str:
    """Fixed-width table for terminal output."""
    header = f"{'value':>10}  {'method':<16}  {'mean':>12}  {'bias':>12}  {'sd':>12}  {'reps':>6}"
    lines = [header, "-" * len(header)]
    for row in sweep_rows(result):
        lines.append(
            f"{row['value']:>10.4g}  {row['method']:<16}  {row['mean_estimate']:>12.6f}  "
            f"{row['bias']:>12.6f}  {row['std_error']:>12.6f}  {row['n_reps']:>6d}"
        )
    for value, message in result.failures:
        lines.append(f"{value:>10.4g}  FAILED: {message}")
    return "\n".join(lines)


def estimate_rows(estimates: Sequence[EffectEstimate]) -> list[dict]:
    rows = []
    for est in estimates:
        row = {
            "method": est.method.label,
            "point": est.point,
            "std_error": est.std_error,
            "n_total": est.n_total,
        }
        if est.ci is not None:
            row.update(ci_lo=est.ci.lo, ci_hi=est.ci.hi, ci_level=est.ci.level)
        rows.append(row)
    return rows


def render_estimate_figure(estimates: Sequence[EffectEstimate], path: str | Path) -> Path:
    """Point estimates with their intervals, one row per method."""
    fig, ax = plt.subplots(figsize=(7, 0.9 + 0.6 * len(estimates)))
    ys = range(len(estimates))
    for y, est in zip(ys, estimates):
        style = _METHOD_STYLE.get(est.method.label, dict(color="#555555", marker="o"))
        if est.ci is not None:
            ax.plot([est.ci.lo, est.ci.hi], [y, y], color=style["color"], lw=2)
        ax.plot([est.point], [y], style["marker"], color=style["color"], ms=7)
    ax.axvline(0.0, color="black", lw=0.8, ls="--")
    ax.set_yticks(list(ys), [e.method.label for e in estimates])
    ax.invert_yaxis()
    ax.set_xlabel("treatment effect")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def write_estimate_report(
    estimates: Sequence[EffectEstimate], extras: dict, out_dir: str | Path
) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = estimate_rows(estimates)
    with open(out / "estimates.csv", "w", newline="") as fh:
        fields = ["method", "point", "std_error", "n_total", "ci_lo", "ci_hi", "ci_level"]
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    manifest = {"schema_version": SCHEMA_VERSION, "estimates": rows, **extras}
    (out / "estimates.json").write_text(json.dumps(manifest, indent=2) + "\n")
    render_estimate_figure(estimates, out / "estimates.png")
    return manifest
