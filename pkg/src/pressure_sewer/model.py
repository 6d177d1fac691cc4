"""Household unit model: septic tank volume balance, grinder pump, effluent production.

Tank state is tracked as stored volume (m³) rather than level height, so the
level sensors of a real unit become volume thresholds and tank geometry drops
out entirely.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

SECONDS_PER_DAY = 86400
SECONDS_PER_HOUR = 3600

# Morning and evening peaks, evening higher; normalised to sum 24 at import.
_RAW_WEIGHTS = (
    0.30, 0.20, 0.15, 0.15, 0.20, 0.50,
    1.20, 1.80, 1.50, 1.00, 0.90, 0.90,
    1.10, 1.00, 0.80, 0.80, 0.90, 1.20,
    1.60, 2.00, 2.10, 1.70, 1.10, 0.60,
)
DEFAULT_HOURLY_WEIGHTS = tuple(w * 24.0 / math.fsum(_RAW_WEIGHTS) for w in _RAW_WEIGHTS)

# Seed-sequence tags keeping the random streams of one scenario independent.
STREAM_NOISE = 1
STREAM_UNIT_SCALE = 2
STREAM_SCHEDULE = 3


class Zone(enum.Enum):
    LOW_RED = "LowRed"
    GREEN = "Green"
    ORANGE = "Orange"
    RED_HIGH = "RedHigh"


@dataclass(frozen=True)
class TankParams:
    capacity: float = 1.0
    v_dead: float = 0.05
    c_minus: float = 0.10
    c_plus: float = 0.55
    v_warn: float = 0.65
    v_high: float = 0.85
    v_off: float = 0.10
    pump_rate: float = 9e-4

    def validate(self, prefix: str = "tank") -> None:
        """Raise ``ValueError`` naming the first field that breaks the threshold ordering."""
        if not 0.0 <= self.v_dead:
            raise ValueError(f"{prefix}.v_dead must be >= 0 (got {self.v_dead})")
        chain = ("v_dead", "c_minus", "c_plus", "v_warn", "v_high", "capacity")
        strict = (True, True, False, True, True)
        for (lo, hi), is_strict in zip(zip(chain, chain[1:]), strict):
            a, b = getattr(self, lo), getattr(self, hi)
            if (a >= b) if is_strict else (a > b):
                rel = "<" if is_strict else "<="
                raise ValueError(f"{prefix}.{hi} must satisfy {lo} {rel} {hi} (got {a} vs {b})")
        if not self.v_dead <= self.v_off <= self.v_warn:
            raise ValueError(
                f"{prefix}.v_off must lie in [v_dead, v_warn] (got {self.v_off})"
            )
        if not self.pump_rate > 0:
            raise ValueError(f"{prefix}.pump_rate must be > 0 (got {self.pump_rate})")

    def scaled(self, factor: float) -> TankParams:
        """All volumes and the pump rate multiplied by ``factor``."""
        return TankParams(**{k: v * factor for k, v in self.__dict__.items()})


@dataclass
class TankState:
    volume: float
    pump_on: bool = False
    overflow_total: float = 0.0


@dataclass(frozen=True)
class InflowProfile:
    """Mean daily production with an hourly shape and multiplicative noise.

    ``unit_scale`` pins per-unit multipliers explicitly; when it is ``None`` the
    simulation draws them from ``uniform(1 - unit_scale_spread, 1 + unit_scale_spread)``.
    """

    daily_mean: float = 0.54
    hourly_weights: tuple[float, ...] = DEFAULT_HOURLY_WEIGHTS
    noise_cv: float = 0.3
    unit_scale: tuple[float, ...] | None = None
    unit_scale_spread: float = 0.5

    def validate(self, prefix: str = "profile") -> None:
        if self.daily_mean < 0:
            raise ValueError(f"{prefix}.daily_mean must be >= 0 (got {self.daily_mean})")
        w = self.hourly_weights
        if len(w) != 24:
            raise ValueError(f"{prefix}.hourly_weights must have 24 entries (got {len(w)})")
        if any(x < 0 for x in w):
            raise ValueError(f"{prefix}.hourly_weights must be non-negative")
        if abs(math.fsum(w) - 24.0) > 1e-9:
            raise ValueError(
                f"{prefix}.hourly_weights must sum to 24 (got {math.fsum(w)!r})"
            )
        if self.noise_cv < 0:
            raise ValueError(f"{prefix}.noise_cv must be >= 0 (got {self.noise_cv})")
        if not 0 <= self.unit_scale_spread < 1:
            raise ValueError(
                f"{prefix}.unit_scale_spread must lie in [0, 1) (got {self.unit_scale_spread})"
            )
        if self.unit_scale is not None and any(s < 0 for s in self.unit_scale):
            raise ValueError(f"{prefix}.unit_scale entries must be >= 0")

    def unit_scales(self, n_units: int, seed: int) -> np.ndarray:
        if self.unit_scale is not None:
            if len(self.unit_scale) != n_units:
                raise ValueError(
                    f"profile.unit_scale has {len(self.unit_scale)} entries, expected {n_units}"
                )
            return np.asarray(self.unit_scale, dtype=float)
        rng = np.random.default_rng([seed, STREAM_UNIT_SCALE])
        s = self.unit_scale_spread
        return rng.uniform(1.0 - s, 1.0 + s, size=n_units)


def lognormal_noise(rng: np.random.Generator, cv: float, size: int) -> np.ndarray:
    """Multiplicative noise with mean 1 and coefficient of variation ``cv``."""
    if cv == 0:
        return np.ones(size)
    sigma2 = math.log1p(cv * cv)
    return rng.lognormal(-0.5 * sigma2, math.sqrt(sigma2), size=size)


def day_inflow(
    profile: InflowProfile, unit_id: int, day: int, dt: int, seed: int, scale: float
) -> np.ndarray:
    """Per-step inflow volumes for one unit over one whole day.

    Every day of every unit has its own seed-sequence stream, so a value is a
    pure function of (seed, unit_id, t) regardless of which other values were
    generated before it.
    """
    steps = SECONDS_PER_DAY // dt
    hours = (np.arange(steps) * dt) // SECONDS_PER_HOUR
    weights = np.asarray(profile.hourly_weights, dtype=float)
    mean = profile.daily_mean * scale * weights[hours] / 24.0 * (dt / SECONDS_PER_HOUR)
    rng = np.random.default_rng([seed, STREAM_NOISE, unit_id, day])
    return mean * lognormal_noise(rng, profile.noise_cv, steps)


def inflow_at(
    profile: InflowProfile, unit_id: int, t: float, seed: int, dt: int = 10,
    scale: float | None = None,
) -> float:
    """Effluent produced by ``unit_id`` during the step starting at ``t``.

    ``scale`` defaults to the unit's multiplier from ``profile.unit_scale``
    (or 1.0 when the profile leaves scales to be drawn by the simulation).
    """
    if scale is None:
        scale = 1.0 if profile.unit_scale is None else profile.unit_scale[unit_id]
    day, sec = divmod(int(t), SECONDS_PER_DAY)
    return float(day_inflow(profile, unit_id, day, dt, seed, scale)[sec // dt])


@njit(cache=True)
def _tank_step(volume, inflow, pump_time, pump_rate, v_dead, capacity):
    pumped = 0.0
    if pump_time > 0.0:
        pumped = min(pump_rate * pump_time, max(0.0, volume - v_dead))
    raw = volume + inflow - pumped
    overflowed = 0.0
    if raw > capacity:
        overflowed = raw - capacity
        raw = capacity
    elif raw < 0.0:
        raw = 0.0
    return raw, pumped, overflowed


def tank_step(
    state: TankState,
    params: TankParams,
    inflow: float,
    pump_on: bool,
    dt: float,
    pump_time: float | None = None,
) -> tuple[TankState, float, float]:
    """Advance one tank by ``dt`` seconds.

    The pump runs for ``pump_time`` seconds of the step (all of it by default)
    and never draws the tank below ``v_dead``. Volume above capacity is
    returned as overflow instead of being stored.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if inflow < 0:
        raise ValueError("inflow must be >= 0")
    run = (dt if pump_time is None else min(pump_time, dt)) if pump_on else 0.0
    volume, pumped, overflowed = _tank_step(
        state.volume, inflow, run, params.pump_rate, params.v_dead, params.capacity
    )
    new = TankState(volume, pump_on and pumped > 0, state.overflow_total + overflowed)
    return new, pumped, overflowed


def zone_of(volume: float, params: TankParams) -> Zone:
    if volume >= params.v_high:
        return Zone.RED_HIGH
    if volume >= params.v_warn:
        return Zone.ORANGE
    if volume < params.c_minus:
        return Zone.LOW_RED
    return Zone.GREEN
