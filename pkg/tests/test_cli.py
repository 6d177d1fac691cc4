import filecmp
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from pressure_sewer import csvio
from pressure_sewer.cli import main
from pressure_sewer.scenario import ScenarioError, load_scenario, parse_override

FILES = ("aggregate.csv", "events.csv", "learning.csv", "summary.csv")


@pytest.fixture
def short(tmp_path):
    path = tmp_path / "short.toml"
    path.write_text('label = "short"\nseed = 4\nhorizon_days = 2\n')
    return path


def _run(*argv) -> int:
    return main([str(a) for a in argv])


def test_simulate_writes_four_csvs_deterministically(short, tmp_path):
    assert _run("--quiet", "simulate", short, "--out", tmp_path / "a") == 0
    assert _run("simulate", short, "--out", tmp_path / "b", "--quiet") == 0
    for name in FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_csv_round_trip_is_bit_exact(short, tmp_path):
    from pressure_sewer.engine import run_simulation

    _run("--quiet", "simulate", short, "--out", tmp_path)
    result = run_simulation(load_scenario(short).sim)
    t, v = csvio.read_aggregate(tmp_path / "aggregate.csv")
    assert np.array_equal(v, result.aggregate_outflow)
    assert np.array_equal(t, np.arange(len(v)) * 10.0)
    events = csvio.read_events(tmp_path / "events.csv")
    assert events == [(e.unit, e.t_start, e.t_end, e.volume, e.source.label) for e in result.events]
    assert csvio.read_learning(tmp_path / "learning.csv") == result.learning_trace
    text = (tmp_path / "events.csv").read_bytes()
    assert b"\r" not in text and text.startswith(b"unit,t_start,t_end,volume_m3,source\n")


def test_override_selects_modules(short, tmp_path, capsys):
    assert _run("simulate", short, "--override", "control.enabled=ABD", "--out", tmp_path) == 0
    assert "[ABD]" in capsys.readouterr().out
    row = (tmp_path / "summary.csv").read_text().splitlines()[1].split(",")
    assert row[1] == "ABD"


def test_seed_flag_replaces_scenario_seed(short, tmp_path):
    _run("--quiet", "--seed", "11", "simulate", short, "--out", tmp_path)
    assert (tmp_path / "summary.csv").read_text().splitlines()[1].split(",")[2] == "11"


def test_slot_len_error_names_field(short, tmp_path, capsys):
    rc = _run("simulate", short, "--override", "control.slot_len=700", "--out", tmp_path)
    assert rc == 1
    assert "slot_len" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "typo.toml"
    path.write_text("seed = 1\n[control]\nslot_lenn = 600\n")
    with pytest.raises(ScenarioError, match="control.slot_lenn"):
        load_scenario(path)
    assert _run("simulate", path, "--out", tmp_path) == 1


def test_seed_is_required(tmp_path):
    path = tmp_path / "noseed.toml"
    path.write_text("n_units = 4\n")
    with pytest.raises(ScenarioError, match="seed"):
        load_scenario(path)
    assert load_scenario(path, seed=3).sim.seed == 3


def test_missing_scenario_is_io_error(tmp_path):
    assert _run("simulate", tmp_path / "nope.toml") == 2


def test_parse_override_values():
    assert parse_override("control.enabled=ABD") == ("control.enabled", "ABD")
    assert parse_override("control.pt_additional = 20") == ("control.pt_additional", 20)
    assert parse_override('label="x y"') == ("label", "x y")
    with pytest.raises(ScenarioError):
        parse_override("novalue")


def test_per_unit_tank_override(tmp_path):
    path = tmp_path / "ov.toml"
    path.write_text("seed = 1\n[tank.overrides.3]\ncapacity = 2.0\nv_high = 1.5\n")
    sim = load_scenario(path).sim
    assert sim.tank_for(3).capacity == 2.0 and sim.tank_for(2).capacity == 1.0


@pytest.fixture(scope="module")
def experiment_dirs(tmp_path_factory):
    root = tmp_path_factory.mktemp("exp")
    scen = root / "s.toml"
    scen.write_text('label = "s"\nseed = 2\nhorizon_days = 2\n')
    assert main(["--quiet", "experiment", str(scen), "--out", str(root / "a")]) == 0
    assert main(["--quiet", "experiment", str(scen), "--out", str(root / "b"), "--jobs", "2"]) == 0
    assert main(["--quiet", "--seed", "3", "experiment", str(scen), "--out", str(root / "c")]) == 0
    return root


def test_experiment_outputs(experiment_dirs):
    a = experiment_dirs / "a"
    rows = csvio.read_comparison(a / "comparison.csv")
    assert [r.config for r in rows] == ["A", "AB", "ABD", "ABC", "ABCD"]
    expected = {"comparison.csv", "std_comparison.svg", "learning_ABD.svg", "learning_ABCD.svg"}
    for lab in ("A", "AB", "ABD", "ABC", "ABCD"):
        expected |= {f"aggregate_{lab}.csv", f"moving_sum_{lab}.svg"}
    assert {p.name for p in a.iterdir()} == expected


def test_experiment_is_byte_identical_serial_or_parallel(experiment_dirs):
    a, b = experiment_dirs / "a", experiment_dirs / "b"
    names = sorted(p.name for p in a.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert mismatch == [] and errors == []


def test_compare_exit_codes(experiment_dirs, capsys):
    a, c = experiment_dirs / "a", experiment_dirs / "c"
    assert _run("compare", a, a) == 0
    assert _run("compare", a, c) == 3
    assert "MISMATCH" in capsys.readouterr().out
    assert _run("compare", a, experiment_dirs / "missing") == 2


def test_compare_tampered_file_names_line(experiment_dirs, tmp_path, capsys):
    bad = tmp_path / "bad"
    bad.mkdir()
    lines = (experiment_dirs / "a" / "comparison.csv").read_text().splitlines()
    lines[3] = lines[3].replace(",", ",x", 1)
    (bad / "comparison.csv").write_text("\n".join(lines) + "\n")
    assert _run("compare", experiment_dirs / "a", bad) == 1
    assert "line 4" in capsys.readouterr().err


def test_module_entry_point(short, tmp_path):
    out = subprocess.run(
        [sys.executable, "-m", "pressure_sewer", "--quiet", "simulate", str(short),
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert out.returncode == 0, out.stderr
    assert all((tmp_path / f).exists() for f in FILES)
