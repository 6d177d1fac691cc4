"""Command line entry point.

    pressure-sewer simulate <scenario> [--override key=value]... [--out DIR]
    pressure-sewer experiment <scenario> [--out DIR] [--jobs N]
    pressure-sewer compare <dirA> <dirB>

Exit codes: 0 success, 1 validation error, 2 I/O error, 3 comparison mismatch.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import csvio, plots
from .control import EXPERIMENT_LABELS
from .engine import SimConfig, SimResult, run_simulation, with_modules
from .metrics import compare_experiments, moving_sum, summary_stats
from .scenario import Scenario, ScenarioError, load_scenario

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_MISMATCH = 0, 1, 2, 3
COMPARE_TOL = 1e-9


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _load(args) -> Scenario:
    try:
        return load_scenario(args.scenario, getattr(args, "override", None) or (), args.seed)
    except OSError as exc:
        raise CliError(f"cannot read scenario {args.scenario}: {exc.strerror or exc}", EXIT_IO)
    except ScenarioError as exc:
        raise CliError(f"invalid scenario: {exc}", EXIT_INVALID)


def _out_dir(args, scenario: Scenario) -> Path:
    out = Path(args.out or scenario.out_dir or Path("out") / scenario.label)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc.strerror or exc}", EXIT_IO)
    return out


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def cmd_simulate(args) -> int:
    scenario = _load(args)
    out = _out_dir(args, scenario)
    result = run_simulation(scenario.sim)
    stats = summary_stats(moving_sum(result.aggregate_outflow, scenario.window, scenario.sim.dt).values)
    try:
        csvio.write_aggregate(out / "aggregate.csv", result)
        csvio.write_events(out / "events.csv", result)
        csvio.write_learning(out / "learning.csv", result)
        csvio.write_summary(out / "summary.csv", scenario.label, result, scenario.window, stats)
    except OSError as exc:
        raise CliError(f"cannot write to {out}: {exc.strerror or exc}", EXIT_IO)
    if result.t_base_capped:
        print(f"warning: base pump time capped at slot length {result.t_base:g} s; "
              "schedule is undersized for the production", file=sys.stderr)
    _say(args, f"{scenario.label} [{scenario.sim.control.enabled}] seed {scenario.sim.seed}: "
               f"{len(result.events)} drawings, std of moving sums {stats.std:.6g} m³ -> {out}")
    return EXIT_OK


def _run_labelled(item: tuple[str, SimConfig]) -> tuple[str, SimResult]:
    label, cfg = item
    return label, run_simulation(cfg)


def cmd_experiment(args) -> int:
    scenario = _load(args)
    out = _out_dir(args, scenario)
    work = [(lab, with_modules(scenario.sim, lab)) for lab in EXPERIMENT_LABELS]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = dict(pool.map(_run_labelled, work))
    else:
        results = dict(map(_run_labelled, work))
    rows = compare_experiments(results, scenario.window)
    try:
        csvio.write_comparison(out / "comparison.csv", rows)
        for i, lab in enumerate(EXPERIMENT_LABELS, 1):
            res = results[lab]
            csvio.write_aggregate(out / f"aggregate_{lab}.csv", res)
            ms = moving_sum(res.aggregate_outflow, scenario.window, scenario.sim.dt)
            plots.plot_moving_sum(out / f"moving_sum_{lab}.svg", ms, f"Experiment {i}: {lab}")
            if "D" in lab:
                plots.plot_learning(out / f"learning_{lab}.svg", res, f"Pump time learning: {lab}")
        plots.plot_std_bars(out / "std_comparison.svg", rows)
    except OSError as exc:
        raise CliError(f"cannot write to {out}: {exc.strerror or exc}", EXIT_IO)
    for r in rows:
        _say(args, f"{r.config:5s} std {r.std:.6f} m³  reduction vs A {r.reduction_vs_A:6.2f} %")
    return EXIT_OK


def cmd_compare(args) -> int:
    tables = []
    for d in (args.dir_a, args.dir_b):
        path = Path(d) / "comparison.csv"
        try:
            tables.append({r.config: r for r in csvio.read_comparison(path)})
        except OSError as exc:
            raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO)
        except csvio.CsvFormatError as exc:
            raise CliError(f"malformed comparison file: {exc}", EXIT_INVALID)
    a, b = tables
    mismatch = False
    if list(a) != list(b):
        print(f"configuration sets differ: {','.join(a)} vs {','.join(b)}")
        mismatch = True
    for cfg in (c for c in a if c in b):
        d_std = b[cfg].std - a[cfg].std
        d_red = b[cfg].reduction_vs_A - a[cfg].reduction_vs_A
        bad = abs(d_std) > COMPARE_TOL or abs(d_red) > COMPARE_TOL
        mismatch |= bad
        if bad or not args.quiet:
            print(f"{cfg:5s} std {a[cfg].std:.9g} -> {b[cfg].std:.9g} (delta {d_std:+.3g})  "
                  f"reduction {a[cfg].reduction_vs_A:.6g} -> {b[cfg].reduction_vs_A:.6g} "
                  f"(delta {d_red:+.3g}){'  MISMATCH' if bad else ''}")
    return EXIT_MISMATCH if mismatch else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pressure-sewer", description="Pressure sewer control simulator")
    parser.add_argument("--quiet", action="store_true", help="print only errors and mismatches")
    parser.add_argument("--seed", type=int, help="replace the scenario seed")

    # repeated on each subcommand so the flags may follow it; SUPPRESS keeps the
    # subcommand from resetting a value given before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="run one scenario and write CSVs")
    p.add_argument("scenario")
    p.add_argument("--override", action="append", metavar="KEY=VALUE",
                   help="replace a scenario key, e.g. control.enabled=ABD (repeatable)")
    p.add_argument("--out", help="output directory (default: output.dir or out/<label>)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", parents=[common],
                       help="run configurations A, AB, ABD, ABC, ABCD and compare them")
    p.add_argument("scenario")
    p.add_argument("--override", action="append", metavar="KEY=VALUE")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1, help="run configurations in parallel processes")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("compare", parents=[common], help="diff two experiment directories")
    p.add_argument("dir_a")
    p.add_argument("dir_b")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
