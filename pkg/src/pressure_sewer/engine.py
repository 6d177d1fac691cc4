"""Deterministic fixed-step simulation of N independent household units."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel as K
from .control import (
    ControlConfig, SlotSchedule, Source, base_pump_time, build_schedule,
)
from .model import SECONDS_PER_DAY, InflowProfile, TankParams, TankState, day_inflow


@dataclass(frozen=True)
class SimConfig:
    n_units: int = 12
    horizon_days: int = 10
    dt: int = 10
    seed: int = 0
    tank: TankParams = field(default_factory=TankParams)
    tank_overrides: dict[int, TankParams] = field(default_factory=dict)
    profile: InflowProfile = field(default_factory=InflowProfile)
    control: ControlConfig = field(default_factory=ControlConfig)
    # None starts each tank midway between c_minus and c_plus
    initial_volume: float | None = None

    def tank_for(self, unit: int) -> TankParams:
        return self.tank_overrides.get(unit, self.tank)

    def validate(self) -> None:
        """Raise ``ValueError`` naming the offending field."""
        if int(self.n_units) != self.n_units or self.n_units < 1:
            raise ValueError(f"n_units must be a positive integer (got {self.n_units})")
        if int(self.horizon_days) != self.horizon_days or self.horizon_days < 1:
            raise ValueError(f"horizon_days must be a whole number >= 1 (got {self.horizon_days})")
        if int(self.dt) != self.dt or self.dt <= 0:
            raise ValueError(f"dt must be a positive whole number of seconds (got {self.dt})")
        self.tank.validate("tank")
        for unit, params in self.tank_overrides.items():
            if not 0 <= unit < self.n_units:
                raise ValueError(f"tank.overrides: unit {unit} out of range")
            params.validate(f"tank.overrides.{unit}")
        self.profile.validate("profile")
        if self.profile.unit_scale is not None and len(self.profile.unit_scale) != self.n_units:
            raise ValueError(
                f"profile.unit_scale has {len(self.profile.unit_scale)} entries, "
                f"expected n_units = {self.n_units}"
            )
        self.control.validate("control")
        if self.control.slot_len % self.dt:
            raise ValueError(
                f"control.slot_len must be a multiple of dt "
                f"(got slot_len {self.control.slot_len}, dt {self.dt})"
            )
        if self.initial_volume is not None:
            for u in range(self.n_units):
                if not 0 <= self.initial_volume <= self.tank_for(u).capacity:
                    raise ValueError("initial_volume must lie in [0, capacity]")
        try:
            build_schedule(self.n_units, int(self.control.slot_len),
                           self.control.emergent_period, self.seed)
        except ValueError as exc:
            raise ValueError(f"control.slot_len: {exc}") from None

    @property
    def steps_per_day(self) -> int:
        return SECONDS_PER_DAY // int(self.dt)

    @property
    def n_steps(self) -> int:
        return int(self.horizon_days) * self.steps_per_day


@dataclass(frozen=True)
class DrawEvent:
    unit: int
    t_start: float
    t_end: float
    volume: float
    source: Source


@dataclass(frozen=True)
class OverflowEvent:
    unit: int
    t: float
    volume: float


@dataclass
class SimResult:
    config: SimConfig
    schedule: SlotSchedule
    t_base: float
    t_base_capped: bool
    unit_scale: np.ndarray
    events: list[DrawEvent]
    aggregate_outflow: np.ndarray
    # (t, unit, t_pump_modif) at t = 0 and at every change
    learning_trace: list[tuple[float, int, float]]
    overflow_events: list[OverflowEvent]
    final_states: list[TankState]
    initial_volumes: np.ndarray
    inflow_totals: np.ndarray
    pumped_totals: np.ndarray

    @property
    def overflow_totals(self) -> np.ndarray:
        return np.array([s.overflow_total for s in self.final_states])

    def mass_balance_error(self) -> float:
        """Relative residual of inflow = drawn + overflow + storage change over all units."""
        inflow = math.fsum(self.inflow_totals)
        drawn = math.fsum(e.volume for e in self.events)
        stored = math.fsum(s.volume for s in self.final_states) - math.fsum(self.initial_volumes)
        resid = inflow - drawn - math.fsum(self.overflow_totals) - stored
        return abs(resid) / max(inflow, drawn, 1e-300)

    def learning_series(self, unit: int) -> tuple[np.ndarray, np.ndarray]:
        """Step-function knots (t, value) of one unit's pump-time correction."""
        pts = [(t, v) for t, u, v in self.learning_trace if u == unit]
        return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


@dataclass
class World:
    """Mutable simulation state between steps."""

    config: SimConfig
    schedule: SlotSchedule
    t_base: float
    t_base_capped: bool
    unit_scale: np.ndarray
    params: np.ndarray
    owner: np.ndarray
    fstate: np.ndarray
    istate: np.ndarray
    ref_volume: np.ndarray
    initial_volumes: np.ndarray
    k: int = 0
    aggregate: list[np.ndarray] = field(default_factory=list)
    events: list[DrawEvent] = field(default_factory=list)
    learning_trace: list[tuple[float, int, float]] = field(default_factory=list)
    overflow_events: list[OverflowEvent] = field(default_factory=list)
    _day_cache: tuple[int, np.ndarray] | None = None

    @property
    def t(self) -> float:
        return float(self.k * self.config.dt)

    def volumes(self) -> np.ndarray:
        return self.fstate[:, K.VOL].copy()

    def day_inflow(self, day: int) -> np.ndarray:
        if self._day_cache is None or self._day_cache[0] != day:
            cfg = self.config
            block = np.stack([
                day_inflow(cfg.profile, u, day, int(cfg.dt), cfg.seed, self.unit_scale[u])
                for u in range(cfg.n_units)
            ])
            self._day_cache = (day, block)
        return self._day_cache[1]


def _param_row(p: TankParams) -> list[float]:
    return [p.capacity, p.v_dead, p.c_minus, p.c_plus, p.v_warn, p.v_high, p.v_off, p.pump_rate]


def init_world(cfg: SimConfig) -> World:
    cfg.validate()
    ctl = cfg.control
    schedule = build_schedule(cfg.n_units, int(ctl.slot_len), ctl.emergent_period, cfg.seed)
    counts = schedule.regular_slot_counts(cfg.n_units)
    if ctl.t_base is None:
        t_base, capped = base_pump_time(
            cfg.profile.daily_mean, cfg.tank.pump_rate, counts.mean(), ctl.slot_len
        )
    else:
        t_base, capped = float(ctl.t_base), False
    units = range(cfg.n_units)
    if cfg.initial_volume is None:
        vols = np.array([0.5 * (cfg.tank_for(u).c_minus + cfg.tank_for(u).c_plus) for u in units])
    else:
        vols = np.full(cfg.n_units, float(cfg.initial_volume))
    fstate, istate = K.new_state(cfg.n_units, vols)
    world = World(
        config=cfg,
        schedule=schedule,
        t_base=float(t_base),
        t_base_capped=bool(capped),
        unit_scale=cfg.profile.unit_scales(cfg.n_units, cfg.seed),
        params=np.array([_param_row(cfg.tank_for(u)) for u in units]),
        owner=np.asarray(schedule.owner, dtype=np.int64),
        fstate=fstate,
        istate=istate,
        ref_volume=np.full((cfg.n_units, schedule.slots_per_day), np.nan),
        initial_volumes=vols.copy(),
    )
    world.learning_trace = [(0.0, u, 0.0) for u in units]
    return world


def _collect_events(world: World, ev_i: np.ndarray, ev_f: np.ndarray, n: int) -> None:
    world.events.extend(
        DrawEvent(int(ev_i[i, 0]), float(ev_f[i, 0]), float(ev_f[i, 1]), float(ev_f[i, 2]),
                  Source(int(ev_i[i, 1])))
        for i in range(n)
    )


def advance(world: World, n_steps: int) -> World:
    """Advance ``world`` in place by ``n_steps`` steps, never crossing a day within one kernel call."""
    cfg = world.config
    ctl = cfg.control
    n = cfg.n_units
    spd = cfg.steps_per_day
    remaining = n_steps
    while remaining > 0:
        day, j0 = divmod(world.k, spd)
        m = min(remaining, spd - j0)
        inflow = np.ascontiguousarray(world.day_inflow(day)[:, j0:j0 + m])
        agg = np.empty(m)
        cap = m * n + n
        ev_i = np.empty((cap, 2), dtype=np.int64)
        ev_f = np.empty((cap, 3))
        lt_i = np.empty(cap, dtype=np.int64)
        lt_f = np.empty((cap, 2))
        ov_i = np.empty(cap, dtype=np.int64)
        ov_f = np.empty((cap, 2))
        n_ev, n_lt, n_ov = K.run_steps(
            world.k, inflow, world.params, world.owner,
            ctl.has("B"), ctl.has("C"), ctl.has("D"),
            int(cfg.dt), int(ctl.slot_len), float(world.t_base), float(ctl.pt_additional),
            world.fstate, world.istate, world.ref_volume, agg, ev_i, ev_f, lt_i, lt_f, ov_i, ov_f,
        )
        world.aggregate.append(agg)
        _collect_events(world, ev_i, ev_f, n_ev)
        world.learning_trace.extend(
            (float(lt_f[i, 0]), int(lt_i[i]), float(lt_f[i, 1])) for i in range(n_lt)
        )
        world.overflow_events.extend(
            OverflowEvent(int(ov_i[i]), float(ov_f[i, 0]), float(ov_f[i, 1])) for i in range(n_ov)
        )
        world.k += m
        remaining -= m
    return world


def step(world: World) -> World:
    """One ``dt`` advance of every unit, in ascending unit index."""
    return advance(world, 1)


def finish(world: World) -> SimResult:
    """Close in-flight draw events and freeze the world into a result."""
    n = world.config.n_units
    ev_i = np.empty((n, 2), dtype=np.int64)
    ev_f = np.empty((n, 3))
    n_ev = K.close_all(world.fstate, world.istate, ev_i, ev_f)
    _collect_events(world, ev_i, ev_f, n_ev)
    events = sorted(world.events, key=lambda e: (e.t_start, e.unit))
    fs = world.fstate
    finals = [
        TankState(float(fs[u, K.VOL]), world.istate[u, K.SRC] != 0, float(fs[u, K.OVF_TOT]))
        for u in range(n)
    ]
    return SimResult(
        config=world.config,
        schedule=world.schedule,
        t_base=world.t_base,
        t_base_capped=world.t_base_capped,
        unit_scale=world.unit_scale,
        events=events,
        aggregate_outflow=np.concatenate(world.aggregate) if world.aggregate else np.empty(0),
        learning_trace=list(world.learning_trace),
        overflow_events=list(world.overflow_events),
        final_states=finals,
        initial_volumes=world.initial_volumes,
        inflow_totals=fs[:, K.IN_TOT].copy(),
        pumped_totals=fs[:, K.PUMP_TOT].copy(),
    )


def run_simulation(cfg: SimConfig) -> SimResult:
    world = init_world(cfg)
    advance(world, cfg.n_steps)
    return finish(world)


def with_modules(cfg: SimConfig, enabled: str) -> SimConfig:
    return replace(cfg, control=replace(cfg.control, enabled=enabled))
