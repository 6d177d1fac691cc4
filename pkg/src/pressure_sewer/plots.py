"""Static SVG figures: moving-sum traces, std bar chart, learning traces."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .engine import SimResult  # noqa: E402
from .metrics import ComparisonRow, MovingSeries  # noqa: E402

DAY = 86400.0
# plotted points per day; the raw series has one point per step
_POINTS_PER_DAY = 288

plt.rcParams["svg.hashsalt"] = "pressure-sewer"
_SVG_META = {"Date": None}


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_moving_sum(path: Path, series: MovingSeries, title: str) -> None:
    stride = max(1, int(DAY / series.step) // _POINTS_PER_DAY)
    t = series.times[::stride] / DAY
    fig, ax = plt.subplots(figsize=(10, 3.2))
    ax.plot(t, series.values[::stride], lw=0.8)
    ax.set_xlabel("time [days]")
    ax.set_ylabel(f"{series.window / 3600:g} h sum of drawings [m³]")
    ax.set_title(title)
    ax.set_ylim(bottom=0)
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_std_bars(path: Path, rows: Sequence[ComparisonRow]) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    x = np.arange(len(rows))
    bars = ax.bar(x, [r.std for r in rows], color="tab:blue")
    for b, r in zip(bars, rows):
        ax.annotate(f"{r.reduction_vs_A:.0f} %", (b.get_x() + b.get_width() / 2, b.get_height()),
                    ha="center", va="bottom", fontsize=8)
    ax.set_xticks(x, [f"{i + 1}\n{r.config}" for i, r in enumerate(rows)])
    ax.set_ylabel("std of moving sums [m³]")
    ax.set_title("Standard deviation per configuration")
    _save(fig, path)


def plot_learning(path: Path, result: SimResult, title: str) -> None:
    fig, ax = plt.subplots(figsize=(10, 3.6))
    end = result.config.n_steps * result.config.dt
    for u in range(result.config.n_units):
        t, v = result.learning_series(u)
        ax.step(np.append(t, end) / DAY, np.append(v, v[-1]), where="post", lw=0.9, label=f"{u}")
    ax.set_xlabel("time [days]")
    ax.set_ylabel("pump time correction [s]")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    ax.legend(ncol=6, fontsize=7, title="unit", title_fontsize=7)
    _save(fig, path)
