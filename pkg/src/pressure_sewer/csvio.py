"""CSV files written by the command line tool.

Files always carry a header row, use ``\\n`` line endings and ``.`` decimals.
Floats are written with ``repr`` so reading a file back recovers the exact
in-memory values.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .engine import SimResult
from .metrics import COMPARISON_COLUMNS, ComparisonRow, Stats

AGGREGATE_COLUMNS = ("t", "total_pumped_m3")
EVENT_COLUMNS = ("unit", "t_start", "t_end", "volume_m3", "source")
LEARNING_COLUMNS = ("t", "unit", "t_pump_modif_s")
SUMMARY_COLUMNS = (
    "label", "config", "seed", "n_units", "horizon_days", "dt", "t_base_s",
    "t_base_capped", "window_s", "mean_m3", "std_m3", "min_m3", "max_m3",
    "n_events", "n_failsafe", "n_regular", "n_emergent", "overflow_m3",
    "mass_balance_rel_error",
)


class CsvFormatError(ValueError):
    pass


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_aggregate(path: Path, result: SimResult) -> None:
    dt = result.config.dt
    write_rows(path, AGGREGATE_COLUMNS, (
        (k * dt, repr(float(v))) for k, v in enumerate(result.aggregate_outflow.tolist())
    ))


def write_events(path: Path, result: SimResult) -> None:
    write_rows(path, EVENT_COLUMNS, (
        (e.unit, _num(e.t_start), _num(e.t_end), repr(float(e.volume)), e.source.label)
        for e in result.events
    ))


def write_learning(path: Path, result: SimResult) -> None:
    write_rows(path, LEARNING_COLUMNS, (
        (_num(t), u, _num(v)) for t, u, v in result.learning_trace
    ))


def summary_row(label: str, result: SimResult, window: float, stats: Stats) -> list[str]:
    cfg = result.config
    count = {"FailSafe": 0, "RegularSlot": 0, "EmergentSlot": 0}
    for e in result.events:
        count[e.source.label] += 1
    return [
        label, cfg.control.enabled, str(cfg.seed), str(cfg.n_units), str(cfg.horizon_days),
        str(cfg.dt), repr(float(result.t_base)), str(int(result.t_base_capped)), _num(window),
        *(repr(float(x)) for x in (stats.mean, stats.std, stats.min, stats.max)),
        str(len(result.events)), str(count["FailSafe"]), str(count["RegularSlot"]),
        str(count["EmergentSlot"]), repr(float(result.overflow_totals.sum())),
        repr(float(result.mass_balance_error())),
    ]


def write_summary(path: Path, label: str, result: SimResult, window: float, stats: Stats) -> None:
    write_rows(path, SUMMARY_COLUMNS, [summary_row(label, result, window, stats)])


def write_comparison(path: Path, rows: Sequence[ComparisonRow]) -> None:
    write_rows(path, COMPARISON_COLUMNS, (
        (r.config, *(repr(float(x)) for x in (r.std, r.mean, r.min, r.max, r.reduction_vs_A)))
        for r in rows
    ))


def _read(path: Path, header: Sequence[str]) -> list[tuple[int, list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            first = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: line 1: empty file, expected header") from None
        if tuple(first) != tuple(header):
            raise CsvFormatError(f"{path}: line 1: expected header {','.join(header)}")
        rows = []
        for row in reader:
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: line {reader.line_num}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append((reader.line_num, row))
        return rows


def _float(path: Path, line: int, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise CsvFormatError(f"{path}: line {line}: not a number: {text!r}") from None


def read_comparison(path: Path) -> list[ComparisonRow]:
    out = []
    for line, row in _read(path, COMPARISON_COLUMNS):
        out.append(ComparisonRow(row[0], *(_float(path, line, x) for x in row[1:])))
    return out


def read_aggregate(path: Path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read(path, AGGREGATE_COLUMNS)
    t = np.array([_float(path, ln, r[0]) for ln, r in rows])
    v = np.array([_float(path, ln, r[1]) for ln, r in rows])
    return t, v


def read_events(path: Path) -> list[tuple[int, float, float, float, str]]:
    return [
        (int(r[0]), _float(path, ln, r[1]), _float(path, ln, r[2]), _float(path, ln, r[3]), r[4])
        for ln, r in _read(path, EVENT_COLUMNS)
    ]


def read_learning(path: Path) -> list[tuple[float, int, float]]:
    return [
        (_float(path, ln, r[0]), int(r[1]), _float(path, ln, r[2]))
        for ln, r in _read(path, LEARNING_COLUMNS)
    ]
