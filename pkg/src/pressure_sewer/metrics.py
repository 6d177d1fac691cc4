"""Load-leveling metrics: moving sums of aggregate drawings and their statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .control import EXPERIMENT_LABELS

TWO_HOURS = 7200


@dataclass(frozen=True)
class MovingSeries:
    window: float
    values: np.ndarray
    t0: float  # end time of the first window
    step: float  # spacing between consecutive window ends

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(len(self.values))


def moving_sum(series: Sequence[float], window: float, dt: float, mode: str = "moving") -> MovingSeries:
    """Sums of ``series`` over windows of ``window`` seconds.

    ``mode="moving"`` slides the window one step at a time (full windows
    only); ``mode="block"`` uses back-to-back non-overlapping windows. Every
    window is summed from scratch (pairwise), so no running-sum drift builds
    up along the series.
    """
    x = np.asarray(series, dtype=float)
    w = window / dt
    if w != int(w) or w < 1:
        raise ValueError(f"window ({window}) must be a positive multiple of dt ({dt})")
    w = int(w)
    if len(x) < w:
        raise ValueError(f"series of {len(x)} steps is shorter than one window of {w} steps")
    if mode == "moving":
        values = sliding_window_view(x, w).sum(axis=1)
        return MovingSeries(float(window), values, float(window), float(dt))
    if mode == "block":
        nb = len(x) // w
        values = x[: nb * w].reshape(nb, w).sum(axis=1)
        return MovingSeries(float(window), values, float(window), float(window))
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class Stats:
    mean: float
    std: float
    min: float
    max: float


def summary_stats(series: Sequence[float]) -> Stats:
    """Mean, population standard deviation (divide by n), min and max."""
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise ValueError("summary_stats of an empty series")
    mean = math.fsum(x) / x.size
    d = x - mean
    std = math.sqrt(math.fsum(d * d) / x.size)
    return Stats(mean, std, float(x.min()), float(x.max()))


@dataclass(frozen=True)
class ComparisonRow:
    config: str
    std: float
    mean: float
    min: float
    max: float
    reduction_vs_A: float


COMPARISON_COLUMNS = tuple(f.name for f in fields(ComparisonRow))


def _scenario_key(result):
    cfg = result.config
    return replace(cfg, control=replace(cfg.control, enabled="A"))


def compare_experiments(
    results: Mapping[str, object], window: float = TWO_HOURS,
    labels: Sequence[str] = EXPERIMENT_LABELS,
) -> list[ComparisonRow]:
    """One row per configuration; ``reduction_vs_A`` is the percent drop in std versus config A.

    All results must come from the same scenario (everything but the enabled
    module set identical), otherwise the comparison is meaningless.
    """
    missing = [lab for lab in labels if lab not in results]
    if missing:
        raise ValueError(f"missing configurations: {', '.join(missing)}")
    base = _scenario_key(results[labels[0]])
    for lab in labels[1:]:
        if _scenario_key(results[lab]) != base:
            raise ValueError(f"configuration {lab} was run on a different scenario")
    stats = {}
    for lab in labels:
        r = results[lab]
        ms = moving_sum(r.aggregate_outflow, window, r.config.dt)
        stats[lab] = summary_stats(ms.values)
    std_a = stats["A"].std if "A" in stats else stats[labels[0]].std
    rows = []
    for lab in labels:
        s = stats[lab]
        red = 0.0 if std_a == 0 else (std_a - s.std) / std_a * 100.0
        rows.append(ComparisonRow(lab, s.std, s.mean, s.min, s.max, red))
    return rows
