"""Pressure sewer control simulator.

Household septic tanks pump into a shared pressure main. Four control layers
can be stacked: on-off fail-safe (A), owned time slots (B), shared emergent
slots (C) and per-unit learning of the pump time (D). The simulator measures
how evenly the combined drawings load the network.
"""

from .control import EXPERIMENT_LABELS, ControlConfig, Source
from .engine import SimConfig, SimResult, run_simulation, with_modules
from .metrics import compare_experiments, moving_sum, summary_stats
from .model import InflowProfile, TankParams

__all__ = [
    "EXPERIMENT_LABELS", "ControlConfig", "InflowProfile", "SimConfig", "SimResult", "Source",
    "TankParams", "compare_experiments", "moving_sum", "run_simulation", "summary_stats",
    "with_modules",
]
