"""Scenario files: TOML documents with dotted sections, e.g. ``control.pt_additional = 10``.

Every key has a default except ``seed``, which must come from the file or
the command line so that no result depends on wall-clock seeding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Iterable

import tomli

from .control import ControlConfig
from .engine import SimConfig
from .metrics import TWO_HOURS
from .model import InflowProfile, TankParams


class ScenarioError(ValueError):
    """A scenario document that does not describe a valid simulation."""


@dataclass(frozen=True)
class Scenario:
    sim: SimConfig
    label: str = "scenario"
    out_dir: str | None = None
    window: float = TWO_HOURS


_TANK_KEYS = {f.name for f in fields(TankParams)}
_INT = "int"
_FLOAT = "float"
_OPT_FLOAT = "float?"
_STR = "str"
_FLOATS = "float[]"
_OPT_FLOATS = "float[]?"

SCHEMA: dict[str, str] = {
    "seed": _INT,
    "label": _STR,
    "n_units": _INT,
    "horizon_days": _INT,
    "dt": _INT,
    "initial_volume": _OPT_FLOAT,
    **{f"tank.{k}": _FLOAT for k in sorted(_TANK_KEYS)},
    "profile.daily_mean": _FLOAT,
    "profile.hourly_weights": _FLOATS,
    "profile.noise_cv": _FLOAT,
    "profile.unit_scale": _OPT_FLOATS,
    "profile.unit_scale_spread": _FLOAT,
    "control.enabled": _STR,
    "control.t_base": _OPT_FLOAT,
    "control.pt_additional": _FLOAT,
    "control.slot_len": _INT,
    "control.emergent_period": _INT,
    "metrics.window": _FLOAT,
    "output.dir": _STR,
}


def flatten(doc: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    flat = {}
    for key, value in doc.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def parse_override(text: str) -> tuple[str, Any]:
    """``key=value`` with a TOML value; bare words such as ``ABD`` are taken as strings."""
    key, sep, raw = text.partition("=")
    key, raw = key.strip(), raw.strip()
    if not sep or not key:
        raise ScenarioError(f"override {text!r} is not of the form key=value")
    try:
        value = tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        value = raw
    return key, value


def _override_unit(key: str) -> tuple[int, str] | None:
    parts = key.split(".")
    if len(parts) == 4 and parts[:2] == ["tank", "overrides"]:
        try:
            return int(parts[2]), parts[3]
        except ValueError:
            return None
    return None


def _coerce(key: str, kind: str, value: Any) -> Any:
    def bad(what: str):
        return ScenarioError(f"{key}: expected {what}, got {value!r}")

    if kind.endswith("?") and value is None:
        return None
    if isinstance(value, bool):
        raise bad(kind.rstrip("?"))
    base = kind.rstrip("?")
    if base == _INT:
        if isinstance(value, int) or (isinstance(value, float) and value.is_integer()):
            return int(value)
        raise bad("an integer")
    if base == _FLOAT:
        if isinstance(value, (int, float)) and math.isfinite(value):
            return float(value)
        raise bad("a number")
    if base == _STR:
        if isinstance(value, str):
            return value
        raise bad("a string")
    if base == _FLOATS:
        if isinstance(value, list) and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
        ):
            return tuple(float(x) for x in value)
        raise bad("a list of numbers")
    raise AssertionError(kind)


def build_scenario(flat: dict[str, Any]) -> Scenario:
    values: dict[str, Any] = {}
    unit_tanks: dict[int, dict[str, float]] = {}
    for key, raw in flat.items():
        ov = _override_unit(key)
        if ov is not None:
            unit, name = ov
            if name not in _TANK_KEYS:
                raise ScenarioError(f"{key}: unknown key")
            unit_tanks.setdefault(unit, {})[name] = _coerce(key, _FLOAT, raw)
            continue
        if key not in SCHEMA:
            raise ScenarioError(f"{key}: unknown key")
        values[key] = _coerce(key, SCHEMA[key], raw)
    if "seed" not in values:
        raise ScenarioError("seed: required (set it in the scenario or pass --seed)")

    def section(prefix: str) -> dict[str, Any]:
        n = len(prefix) + 1
        return {k[n:]: v for k, v in values.items() if k.startswith(prefix + ".")}

    try:
        tank = TankParams(**section("tank"))
        overrides = {
            u: TankParams(**{**tank.__dict__, **kv}) for u, kv in sorted(unit_tanks.items())
        }
        sim = SimConfig(
            n_units=values.get("n_units", 12),
            horizon_days=values.get("horizon_days", 10),
            dt=values.get("dt", 10),
            seed=values["seed"],
            tank=tank,
            tank_overrides=overrides,
            profile=InflowProfile(**section("profile")),
            control=ControlConfig(**section("control")),
            initial_volume=values.get("initial_volume"),
        )
        sim.validate()
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    scenario = Scenario(
        sim=sim,
        label=values.get("label", "scenario"),
        out_dir=values.get("output.dir"),
        window=values.get("metrics.window", TWO_HOURS),
    )
    w = scenario.window / sim.dt
    if w != int(w) or w < 1 or scenario.window > sim.horizon_days * 86400:
        raise ScenarioError(
            f"metrics.window must be a multiple of dt within the horizon (got {scenario.window})"
        )
    return scenario


def load_scenario(
    path: str | Path, overrides: Iterable[str] = (), seed: int | None = None,
) -> Scenario:
    """Read, override and validate a scenario file.

    Raises ``OSError`` when the file cannot be read and ``ScenarioError``
    naming the offending key for anything else.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    flat = flatten(doc)
    for item in overrides:
        key, value = parse_override(item)
        flat[key] = value
    if seed is not None:
        flat["seed"] = seed
    return build_scenario(flat)
