"""Control modules of a unit and their composition into one pump command.

A  on-off fail-safe (two-sensor hysteresis, highest priority)
B  time-slot control (a unit may start drawing off only in its own slots)
C  emergent time slot (shared periodic slot for every unit above the warning level)
D  learning (per-unit correction of the regular pump time)

The scalar cores (``_on_off``, ``_decide``, ``_learn``) are compiled with numba
and shared by the public functions below and by the simulation kernel, so
both paths run the same decision logic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import SECONDS_PER_DAY, STREAM_SCHEDULE, TankParams

MODULES = "ABCD"
EXPERIMENT_LABELS = ("A", "AB", "ABD", "ABC", "ABCD")

# Integer codes shared with the kernel.
IDLE, FAILSAFE, REGULAR, EMERGENT = 0, 1, 2, 3
KIND_OTHER, KIND_OWN, KIND_EMERGENT = 0, 1, 2

# Entry volumes closer than this fraction of c_plus count as "not moving".
TREND_TOL = 1e-9


class Source(enum.IntEnum):
    IDLE = IDLE
    FAILSAFE = FAILSAFE
    REGULAR_SLOT = REGULAR
    EMERGENT_SLOT = EMERGENT

    @property
    def label(self) -> str:
        return _SOURCE_LABELS[self]


_SOURCE_LABELS = {
    Source.IDLE: "Idle",
    Source.FAILSAFE: "FailSafe",
    Source.REGULAR_SLOT: "RegularSlot",
    Source.EMERGENT_SLOT: "EmergentSlot",
}


def normalize_modules(enabled: str) -> str:
    """Canonical letter string for a module set, e.g. ``"dba"`` -> ``"ABD"``."""
    letters = set(enabled.upper())
    bad = letters - set(MODULES)
    if bad:
        raise ValueError(f"control.enabled: unknown module(s) {''.join(sorted(bad))}")
    return "".join(m for m in MODULES if m in letters)


@dataclass(frozen=True)
class ControlConfig:
    """Enabled modules plus slot and pump-time parameters.

    ``t_base`` left as ``None`` is derived from the mass balance when the
    simulation is set up; see :func:`base_pump_time`.
    """

    enabled: str = "ABCD"
    t_base: float | None = None
    pt_additional: float = 10.0
    slot_len: int = 600
    emergent_period: int = 10

    def __post_init__(self):
        object.__setattr__(self, "enabled", normalize_modules(self.enabled))

    def has(self, module: str) -> bool:
        return module in self.enabled

    def validate(self, prefix: str = "control") -> None:
        if "A" not in self.enabled:
            raise ValueError(f"{prefix}.enabled must include the fail-safe module A")
        for m in "CD":
            if m in self.enabled and "B" not in self.enabled:
                raise ValueError(f"{prefix}.enabled: module {m} requires module B")
        if int(self.slot_len) != self.slot_len or self.slot_len <= 0:
            raise ValueError(f"{prefix}.slot_len must be a positive whole number of seconds")
        if SECONDS_PER_DAY % int(self.slot_len):
            raise ValueError(f"{prefix}.slot_len must divide 86400 (got {self.slot_len})")
        if self.emergent_period == 1 or self.emergent_period < 0:
            raise ValueError(f"{prefix}.emergent_period must be 0 (none) or >= 2")
        if self.pt_additional < 0:
            raise ValueError(f"{prefix}.pt_additional must be >= 0")
        if self.t_base is not None and not 0 < self.t_base <= self.slot_len:
            raise ValueError(f"{prefix}.t_base must lie in (0, slot_len]")


@dataclass(frozen=True)
class SlotSchedule:
    slot_len: int
    emergent_period: int
    owner: tuple[int, ...]  # -1 marks an emergent slot

    @property
    def slots_per_day(self) -> int:
        return len(self.owner)

    def is_emergent(self, s: int) -> bool:
        return self.owner[s % self.slots_per_day] < 0

    def regular_slot_counts(self, n_units: int) -> np.ndarray:
        own = np.asarray(self.owner)
        return np.bincount(own[own >= 0], minlength=n_units)


def is_emergent_index(s: int, emergent_period: int) -> bool:
    return emergent_period > 0 and s % emergent_period == emergent_period - 1


def build_schedule(n_units: int, slot_len: int, emergent_period: int, seed: int) -> SlotSchedule:
    """Deal the regular slots of a day round-robin over a seeded unit permutation."""
    if n_units < 1:
        raise ValueError("n_units must be >= 1")
    if slot_len <= 0 or SECONDS_PER_DAY % slot_len:
        raise ValueError(f"slot_len must divide 86400 (got {slot_len})")
    n_slots = SECONDS_PER_DAY // slot_len
    regular = [s for s in range(n_slots) if not is_emergent_index(s, emergent_period)]
    if len(regular) < n_units:
        raise ValueError(
            f"only {len(regular)} regular slots per day for {n_units} units; "
            "some unit would never pump"
        )
    perm = np.random.default_rng([seed, STREAM_SCHEDULE]).permutation(n_units)
    owner = [-1] * n_slots
    for i, s in enumerate(regular):
        owner[s] = int(perm[i % n_units])
    return SlotSchedule(slot_len, emergent_period, tuple(owner))


@dataclass(frozen=True)
class SlotInfo:
    index: int
    emergent: bool
    owner: int  # -1 for emergent slots
    t_into_slot: float

    @property
    def at_entry(self) -> bool:
        return self.t_into_slot == 0


def slot_at(schedule: SlotSchedule, t: float) -> SlotInfo:
    tod = math.fmod(t, SECONDS_PER_DAY)
    s = int(tod // schedule.slot_len)
    owner = schedule.owner[s]
    return SlotInfo(s, owner < 0, owner, tod - s * schedule.slot_len)


@dataclass(frozen=True)
class PumpCommand:
    run: bool = False
    budget: float = 0.0
    source: Source = Source.IDLE


IDLE_COMMAND = PumpCommand()


@njit(cache=True)
def _on_off(volume, v_high, v_off, was_on):
    if volume >= v_high:
        return True
    if volume <= v_off:
        return False
    return was_on


def on_off_decide(volume: float, params: TankParams, was_failsafe_on: bool) -> bool:
    """Hysteresis switch: on at ``v_high``, off at ``v_off``, hold in between."""
    return bool(_on_off(volume, params.v_high, params.v_off, was_failsafe_on))


def base_pump_time(
    daily_mean: float, pump_rate: float, regular_slots_per_unit_per_day: float,
    slot_len: float | None = None,
) -> tuple[float, bool]:
    """Pump time per regular slot that removes one day's mean production.

    Returns ``(t_base, capped)``; ``capped`` is set when the mass-balance value
    exceeded ``slot_len`` and was cut back to it (the schedule is undersized).
    """
    if daily_mean <= 0 or pump_rate <= 0 or regular_slots_per_unit_per_day <= 0:
        raise ValueError("base pump time needs positive daily_mean, pump_rate and slot count")
    t = daily_mean / (pump_rate * regular_slots_per_unit_per_day)
    if slot_len is not None and t > slot_len:
        return float(slot_len), True
    return t, False


def regular_budget(t_base: float, t_pump_modif: float, slot_len: float) -> float:
    return min(max(t_base + t_pump_modif, 0.0), slot_len)


@njit(cache=True)
def _decide(volume, fs_on, src, budget, kind, at_entry, use_b, use_c,
            v_dead, v_high, v_off, v_warn, slot_len, reg_budget):
    """Priority composition. Returns (source, remaining budget, fail-safe latch)."""
    if _on_off(volume, v_high, v_off, fs_on):
        return FAILSAFE, 0.0, True
    if at_entry or src == FAILSAFE:
        src = IDLE
        budget = 0.0
    if at_entry:
        if kind == KIND_EMERGENT and use_c:
            if volume >= v_warn:
                return EMERGENT, float(slot_len), False
        elif kind == KIND_OWN and use_b:
            if volume > v_dead and reg_budget > 0.0:
                return REGULAR, reg_budget, False
        return IDLE, 0.0, False
    if (src == REGULAR or src == EMERGENT) and budget > 0.0 and volume > v_dead:
        return src, budget, False
    return IDLE, 0.0, False


def _unit_kind(unit: int, slot: SlotInfo) -> int:
    if slot.emergent:
        return KIND_EMERGENT
    return KIND_OWN if slot.owner == unit else KIND_OTHER


def _command(src: int, budget: float) -> PumpCommand:
    return PumpCommand(src != IDLE, float(budget), Source(src))


def slot_decide(
    unit: int, volume: float, params: TankParams, cfg: ControlConfig,
    learn: LearningState, slot: SlotInfo, elapsed_pumping: float = 0.0,
) -> PumpCommand:
    """Module B: regular drawing off in the unit's own slot."""
    if not cfg.has("B"):
        raise ValueError("slot_decide requires module B")
    if slot.emergent or slot.owner != unit:
        raise ValueError(f"slot {slot.index} is not a regular slot of unit {unit}")
    if cfg.t_base is None:
        raise ValueError("control.t_base is unresolved")
    modif = float(learn.t_pump_modif[unit]) if cfg.has("D") else 0.0
    total = regular_budget(cfg.t_base, modif, cfg.slot_len)
    remaining = total - elapsed_pumping
    started = slot.at_entry or elapsed_pumping > 0
    if started and volume > params.v_dead and remaining > 0:
        return PumpCommand(True, remaining, Source.REGULAR_SLOT)
    return IDLE_COMMAND


def emergent_decide(
    unit: int, volume: float, params: TankParams, cfg: ControlConfig, slot: SlotInfo,
) -> PumpCommand:
    """Module C: at emergent-slot entry, any unit at or above ``v_warn`` draws off for up to a slot."""
    if not cfg.has("C"):
        raise ValueError("emergent_decide requires module C")
    if not slot.emergent:
        raise ValueError(f"slot {slot.index} is not an emergent slot")
    if slot.at_entry and volume >= params.v_warn:
        return PumpCommand(True, float(cfg.slot_len), Source.EMERGENT_SLOT)
    return IDLE_COMMAND


def compose_decide(
    unit: int, volume: float, params: TankParams, cfg: ControlConfig,
    learn: LearningState, slot: SlotInfo, prior: PumpCommand, was_failsafe_on: bool,
) -> PumpCommand:
    """One pump command from all enabled modules, fail-safe first.

    ``prior`` is the command of the previous step with its budget already
    reduced by the pump time spent; budgets never survive a slot boundary.
    Module D never commands the pump, it only shifts the regular budget.
    """
    if cfg.t_base is None:
        raise ValueError("control.t_base is unresolved")
    modif = float(learn.t_pump_modif[unit]) if cfg.has("D") else 0.0
    src, budget, _ = _decide(
        volume, was_failsafe_on, int(prior.source), prior.budget,
        _unit_kind(unit, slot), slot.at_entry, cfg.has("B"), cfg.has("C"),
        params.v_dead, params.v_high, params.v_off, params.v_warn,
        float(cfg.slot_len), regular_budget(cfg.t_base, modif, cfg.slot_len),
    )
    return _command(src, budget)


@dataclass
class LearningState:
    """Per-unit pump-time corrections and the arming state of the two limits.

    ``ref_volume[k, s]`` is the volume unit k had when its own slot s last
    began (NaN when unknown or invalidated by an adjustment or forced drain).
    """

    t_pump_modif: np.ndarray
    armed_low: np.ndarray
    armed_high: np.ndarray
    ref_volume: np.ndarray

    @classmethod
    def initial(cls, n_units: int, slots_per_day: int) -> LearningState:
        return cls(
            np.zeros(n_units),
            np.ones(n_units, dtype=bool),
            np.ones(n_units, dtype=bool),
            np.full((n_units, slots_per_day), np.nan),
        )

    def copy(self) -> LearningState:
        return LearningState(*(a.copy() for a in self.__dict__.values()))


@njit(cache=True)
def _learn(v, entry_v, slot, forced, modif, armed_lo, armed_hi, ref_row,
           c_minus, c_plus, pt, lo, hi):
    """One learning step; ``slot`` is the own-slot index at slot entry, else -1.

    ``forced`` is 0 for ordinary steps, 1 while a fail-safe or emergent drawing
    continues and 2 on its first step. Mutates ``ref_row`` and returns
    (t_pump_modif, armed_low, armed_high).
    """
    if forced:
        ref_row[:] = np.nan
        if forced == 2:
            # the level got past the regular band: the regular pump time is short
            return min(modif + pt, hi), False, False
        return modif, False, False
    if slot >= 0:
        r = ref_row[slot]
        if not np.isnan(r):
            tol = TREND_TOL * c_plus
            armed_lo = entry_v <= r + tol
            armed_hi = entry_v >= r - tol
        ref_row[slot] = entry_v
    if armed_lo and v < c_minus:
        ref_row[:] = np.nan
        return max(modif - pt, lo), False, False
    if armed_hi and v >= c_plus:
        ref_row[:] = np.nan
        return min(modif + pt, hi), False, False
    return modif, armed_lo, armed_hi


def learning_update(
    unit: int, volume: float, params: TankParams, learn: LearningState,
    pt_additional: float, slot_len: float, t_base: float,
    entry_volume: float | None = None, slot_index: int = -1, forced: int = 0,
) -> LearningState:
    """Module D: adjust ``t_pump_modif[unit]`` from the post-step volume.

    Falling below ``c_minus`` shortens the regular pump time by
    ``pt_additional``; reaching ``c_plus`` prolongs it by the same amount.
    Each firing disarms both limits. At the start of each own slot
    (``entry_volume`` and ``slot_index`` given) the limits are re-armed by
    comparing the volume with the one at the same slot a day earlier: the low
    limit when the level has not risen, the high limit when it has not fallen.
    Schedule and production profile both repeat daily, so only a net daily
    imbalance shows in that comparison. Reference volumes from before an
    adjustment are discarded, so the next re-arm sees the new pump time only.
    A fail-safe or emergent drawing means the level climbed past the regular
    band, so its first step (``forced=2``) prolongs like the upper limit; all
    its steps (``forced`` 1 or 2) disarm both limits and discard the
    references. ``t_base + t_pump_modif`` stays within ``[0, slot_len]``.
    """
    out = learn.copy()
    slot = slot_index if entry_volume is not None else -1
    modif, lo_arm, hi_arm = _learn(
        volume, np.nan if entry_volume is None else entry_volume, slot, int(forced),
        learn.t_pump_modif[unit], bool(learn.armed_low[unit]), bool(learn.armed_high[unit]),
        out.ref_volume[unit], params.c_minus, params.c_plus,
        pt_additional, -t_base, slot_len - t_base,
    )
    out.t_pump_modif[unit] = modif
    out.armed_low[unit] = lo_arm
    out.armed_high[unit] = hi_arm
    return out
