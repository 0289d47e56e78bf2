"""Figure rendering for run artifacts and analysis reports.

Everything writes PNG files next to the delimited output; nothing here
feeds back into the pipeline. matplotlib is imported lazily so headless
simulation paths never pay for it.
"""

from __future__ import annotations

from pathlib import Path

from .analysis import DailyMeanReport
from .service import TelemetryPoint


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _time_axis(ts_values: list[int]) -> tuple[list[float], str]:
    span = (ts_values[-1] - ts_values[0]) if ts_values else 0
    if span >= 2 * 86_400:
        return [t / 86_400 for t in ts_values], "virtual days"
    if span >= 2 * 3_600:
        return [t / 3_600 for t in ts_values], "virtual hours"
    return [float(t) for t in ts_values], "virtual seconds"


def plot_series(points: list[TelemetryPoint], unit: str, title: str,
                path: str | Path) -> Path:
    """Line chart of one variable over virtual time."""
    plt = _pyplot()
    path = Path(path)
    xs, x_label = _time_axis([p.ts for p in points])
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.plot(xs, [p.value for p in points], linewidth=0.9)
    ax.set_xlabel(x_label)
    ax.set_ylabel(unit)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_daily_means(report: DailyMeanReport, title: str,
                     path: str | Path) -> Path:
    """Bar chart of per-day means with the value printed on each bar."""
    plt = _pyplot()
    path = Path(path)
    days = [d.day for d in report.days]
    means = [d.mean for d in report.days]
    fig, ax = plt.subplots(figsize=(6, 3.2))
    bars = ax.bar([str(d) for d in days], means, width=0.5)
    ax.bar_label(bars, fmt="%.2f")
    ax.set_xlabel("day")
    ax.set_ylabel("mean")
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
