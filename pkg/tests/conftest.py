import sys
from pathlib import Path

import pytest

from pressure_sewer.engine import SimConfig, SimResult, run_simulation

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"
MASS_TOL = 1e-9

# (criterion number, title, passed, detail) filled in by test_acceptance.py
ACCEPTANCE: list[tuple[int, str, bool, str]] = []


def run_checked(cfg: SimConfig) -> SimResult:
    """Run a simulation and insist on mass conservation, as every run in the suite must."""
    result = run_simulation(cfg)
    err = result.mass_balance_error()
    assert err <= MASS_TOL, f"mass balance residual {err:.3e} exceeds {MASS_TOL}"
    return result


@pytest.fixture
def scenarios_dir() -> Path:
    return SCENARIOS


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")
