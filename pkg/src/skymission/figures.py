"""Benchmark report figures, rendered headlessly to image files."""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluation import METHODS, EvalReport
from .fsutil import write_bytes_atomic


def _save(fig, out_path: Path) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format=out_path.suffix.lstrip(".") or "png", dpi=120)
    plt.close(fig)
    write_bytes_atomic(out_path, buf.getvalue())


def plot_length_comparison(report: EvalReport, out_path: str | Path) -> Path:
    """Per-sample generated vs truth trajectory lengths, in kilometres."""
    out_path = Path(out_path)
    names = [s.name for s in report.samples]
    gen_km = [s.generated_length_m / 1000.0 for s in report.samples]
    truth_km = [s.truth_length_m / 1000.0 for s in report.samples]

    x = np.arange(len(names))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6.0, 0.6 * len(names) + 2.0), 4.0))
    ax.bar(x - width / 2, gen_km, width, label="generated", color="#4878cf")
    ax.bar(x + width / 2, truth_km, width, label="ground truth", color="#6acc65")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("trajectory length (km)")
    ax.set_title(
        f"totals: generated {report.generated_total_m / 1000.0:.2f} km, "
        f"truth {report.truth_total_m / 1000.0:.2f} km ({report.delta_pct:+.1f}%)"
    )
    ax.legend()
    fig.tight_layout()
    _save(fig, out_path)
    return out_path


def plot_rmse_by_method(report: EvalReport, out_path: str | Path) -> Path:
    """Per-sample RMSE for each alignment method, in metres."""
    out_path = Path(out_path)
    names = [s.name for s in report.samples]
    x = np.arange(len(names))
    width = 0.8 / len(METHODS)
    colors = {"sequential": "#d65f5f", "dtw": "#ee854a", "knn": "#4878cf"}

    fig, ax = plt.subplots(figsize=(max(6.0, 0.7 * len(names) + 2.0), 4.0))
    for k, method in enumerate(METHODS):
        values = [s.metrics[method].rmse_m for s in report.samples]
        ax.bar(x + (k - 1) * width, values, width, label=method, color=colors[method])
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("RMSE (m)")
    means = ", ".join(f"{m} {report.aggregates[m]['mean']:.2f} m" for m in METHODS)
    ax.set_title(f"mean RMSE: {means}")
    ax.legend()
    fig.tight_layout()
    _save(fig, out_path)
    return out_path


def render_report_figures(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Render the standard report figures into a directory."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        plot_length_comparison(report, out_dir / "lengths.png"),
        plot_rmse_by_method(report, out_dir / "rmse.png"),
    ]
