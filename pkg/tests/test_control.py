import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import slot_counts
from pressure_sewer.control import (
    IDLE_COMMAND, ControlConfig, LearningState, PumpCommand, Source, base_pump_time,
    build_schedule, compose_decide, emergent_decide, learning_update, on_off_decide,
    slot_at, slot_decide,
)
from pressure_sewer.model import TankParams, TankState, tank_step

P = TankParams()
CFG = ControlConfig(enabled="ABCD", t_base=150.0)
GREEN = (P.c_minus + P.c_plus) / 2


def test_schedule_counts_match_enumeration():
    sch = build_schedule(12, 600, 10, seed=0)
    n, emergent, regular, per_unit = slot_counts(12, 600, 10)
    assert sch.slots_per_day == n == 144
    assert [s for s in range(n) if sch.is_emergent(s)] == emergent
    assert emergent[:3] == [9, 19, 29] and emergent[-1] == 139 and len(emergent) == 14
    counts = sch.regular_slot_counts(12)
    assert counts.sum() == regular == 130
    assert set(counts.tolist()) == per_unit == {10, 11}


def test_schedule_single_unit_owns_every_regular_slot():
    sch = build_schedule(1, 600, 10, seed=3)
    assert {o for o in sch.owner if o >= 0} == {0}
    assert sch.regular_slot_counts(1)[0] == 130


def test_schedule_is_seeded_round_robin():
    a = build_schedule(12, 600, 10, seed=1)
    assert a == build_schedule(12, 600, 10, seed=1)
    regular = [o for o in a.owner if o >= 0]
    # every run of 12 consecutive regular slots visits each unit once
    assert sorted(regular[:12]) == list(range(12))
    assert regular[12:24] == regular[:12]


def test_schedule_rejects_bad_slot_len_and_too_many_units():
    with pytest.raises(ValueError, match="slot_len"):
        build_schedule(12, 700, 10, 0)
    with pytest.raises(ValueError, match="regular slots"):
        build_schedule(200, 600, 10, 0)


def test_slot_period_ten():
    sch = build_schedule(12, 600, 10, 0)
    assert sch.is_emergent(9) and not sch.is_emergent(10)


@pytest.mark.parametrize("t,index,emergent,into", [
    (0, 0, False, 0.0),
    (5400, 9, True, 0.0),
    (5410, 9, True, 10.0),
    (86400, 0, False, 0.0),
    (86400 + 5999, 9, True, 599.0),
])
def test_slot_at(t, index, emergent, into):
    s = slot_at(build_schedule(12, 600, 10, 0), t)
    assert (s.index, s.emergent, s.t_into_slot) == (index, emergent, into)
    assert s.at_entry == (into == 0)


def test_on_off_hysteresis():
    assert on_off_decide(P.v_high, P, False)
    assert not on_off_decide(P.v_off, P, True)
    mid = (P.v_off + P.v_high) / 2
    assert on_off_decide(mid, P, True)
    assert not on_off_decide(mid, P, False)


def test_base_pump_time():
    t, capped = base_pump_time(0.54, 9e-4, 4)
    assert t == pytest.approx(150.0) and not capped
    t, capped = base_pump_time(0.54, 9e-4, 0.5, slot_len=600)
    assert (t, capped) == (600.0, True)
    with pytest.raises(ValueError):
        base_pump_time(0.0, 9e-4, 4)


def _own_entry(unit=0):
    sch = build_schedule(12, 600, 10, 0)
    s = sch.owner.index(unit)
    return slot_at(sch, s * 600)


def test_slot_decide_budget():
    learn = LearningState.initial(12, 144)
    cmd = slot_decide(0, GREEN, P, CFG, learn, _own_entry())
    assert cmd == PumpCommand(True, 150.0, Source.REGULAR_SLOT)
    learn.t_pump_modif[0] = 20.0
    assert slot_decide(0, GREEN, P, CFG, learn, _own_entry()).budget == pytest.approx(170.0)
    assert slot_decide(0, P.v_dead, P, CFG, learn, _own_entry()) == IDLE_COMMAND


def test_slot_decide_budget_clamped_to_slot():
    learn = LearningState.initial(12, 144)
    learn.t_pump_modif[0] = 10_000.0
    assert slot_decide(0, GREEN, P, CFG, learn, _own_entry()).budget == 600.0


def test_emergent_decide():
    sch = build_schedule(12, 600, 10, 0)
    entry = slot_at(sch, 5400)
    cmd = emergent_decide(4, P.v_warn, P, CFG, entry)
    assert cmd == PumpCommand(True, 600.0, Source.EMERGENT_SLOT)
    assert emergent_decide(4, P.v_warn - 1e-6, P, CFG, entry) == IDLE_COMMAND
    assert emergent_decide(4, P.v_warn, P, CFG, slot_at(sch, 5410)) == IDLE_COMMAND


def _drain_one_slot(params, v):
    state, budget, total = TankState(v), 600.0, 0.0
    for _ in range(60):
        run = min(10.0, budget)
        state, pumped, _ = tank_step(state, params, 0.0, run > 0, 10, pump_time=run)
        budget -= run
        total += pumped
    return state.volume, total


def test_emergent_budget_removes_at_most_one_slot_of_pumping():
    params = TankParams(pump_rate=2e-4)
    v = params.v_warn + params.pump_rate * 600 / 2
    left, total = _drain_one_slot(params, v)
    assert total == pytest.approx(params.pump_rate * 600, rel=1e-9)
    # unlike on-off control the tank is not emptied to v_off
    assert left == pytest.approx(v - params.pump_rate * 600, rel=1e-9)
    assert left > params.v_off


def test_emergent_budget_floor_limited_after_half_slot():
    params = TankParams(v_dead=0.05, c_minus=0.06, c_plus=0.06, v_warn=0.07, v_off=0.06,
                        pump_rate=2e-4)
    v = params.v_dead + params.pump_rate * 600 / 2
    left, total = _drain_one_slot(params, v)
    assert total == pytest.approx(params.pump_rate * 300, rel=1e-9)
    assert left == pytest.approx(params.v_dead, rel=1e-9)


def test_learning_low_and_high_crossings():
    learn = LearningState.initial(12, 144)
    lo = learning_update(0, P.c_minus - 0.01, P, learn, 10.0, 600, 150.0)
    assert lo.t_pump_modif[0] == -10.0
    hi = learning_update(0, P.c_plus, P, learn, 10.0, 600, 150.0)
    assert hi.t_pump_modif[0] == 10.0
    same = learning_update(0, GREEN, P, learn, 10.0, 600, 150.0)
    assert same.t_pump_modif[0] == 0.0
    # the input state is not modified
    assert learn.t_pump_modif[0] == 0.0


def test_learning_fires_once_per_arming():
    learn = LearningState.initial(1, 144)
    a = learning_update(0, P.c_minus - 0.01, P, learn, 10.0, 600, 150.0)
    b = learning_update(0, P.c_minus - 0.02, P, a, 10.0, 600, 150.0)
    assert b.t_pump_modif[0] == -10.0
    assert not b.armed_low[0] and not b.armed_high[0]


def test_learning_rearms_on_daily_trend():
    learn = LearningState.initial(1, 144)
    learn.armed_low[:] = learn.armed_high[:] = False
    day1 = learning_update(0, 0.40, P, learn, 10.0, 600, 150.0, entry_volume=0.40, slot_index=3)
    assert day1.ref_volume[0, 3] == 0.40
    # same slot a day later with a higher level: only the upper limit is armed
    day2 = learning_update(0, 0.45, P, day1, 10.0, 600, 150.0, entry_volume=0.45, slot_index=3)
    assert day2.armed_high[0] and not day2.armed_low[0]
    day3 = learning_update(0, 0.30, P, day2, 10.0, 600, 150.0, entry_volume=0.30, slot_index=3)
    assert day3.armed_low[0] and not day3.armed_high[0]


def test_learning_forced_drawing_prolongs_then_holds():
    learn = LearningState.initial(1, 144)
    learn.ref_volume[0, 5] = 0.3
    first = learning_update(0, 0.8, P, learn, 10.0, 600, 150.0, forced=2)
    assert first.t_pump_modif[0] == 10.0
    assert np.isnan(first.ref_volume[0]).all()
    cont = learning_update(0, 0.7, P, first, 10.0, 600, 150.0, forced=1)
    assert cont.t_pump_modif[0] == 10.0


def test_learning_clamped_to_slot():
    learn = LearningState.initial(1, 144)
    learn.t_pump_modif[0] = -145.0
    out = learning_update(0, 0.0, P, learn, 10.0, 600, 150.0)
    assert out.t_pump_modif[0] == -150.0


def test_compose_failsafe_outranks_other_units_slot():
    learn = LearningState.initial(12, 144)
    sch = build_schedule(12, 600, 10, 0)
    other = slot_at(sch, sch.owner.index(1) * 600 + 30)
    cmd = compose_decide(0, P.v_high, P, CFG, learn, other, IDLE_COMMAND, False)
    assert cmd.source is Source.FAILSAFE and cmd.run


def test_compose_a_only_idles_in_green():
    learn = LearningState.initial(12, 144)
    cfg = ControlConfig(enabled="A", t_base=150.0)
    for t in (0, 5400, 3000):
        slot = slot_at(build_schedule(12, 600, 10, 0), t)
        assert compose_decide(0, GREEN, P, cfg, learn, slot, IDLE_COMMAND, False) == IDLE_COMMAND


def test_compose_without_c_ignores_emergent_slot():
    learn = LearningState.initial(12, 144)
    cfg = ControlConfig(enabled="AB", t_base=150.0)
    slot = slot_at(build_schedule(12, 600, 10, 0), 5400)
    for u in range(12):
        assert compose_decide(u, 0.8, P, cfg, learn, slot, IDLE_COMMAND, False) == IDLE_COMMAND


def test_compose_continues_budget_and_resets_at_boundary():
    learn = LearningState.initial(12, 144)
    sch = build_schedule(12, 600, 10, 0)
    s = sch.owner.index(0)
    inside = slot_at(sch, s * 600 + 60)
    prior = PumpCommand(True, 90.0, Source.REGULAR_SLOT)
    assert compose_decide(0, GREEN, P, CFG, learn, inside, prior, False) == prior
    nxt = slot_at(sch, (s + 1) * 600)
    if sch.owner[s + 1] != 0 and not sch.is_emergent(s + 1):
        assert compose_decide(0, GREEN, P, CFG, learn, nxt, prior, False) == IDLE_COMMAND


def test_config_validation():
    with pytest.raises(ValueError, match="A"):
        ControlConfig(enabled="BCD").validate()
    with pytest.raises(ValueError):
        ControlConfig(enabled="AC").validate()
    with pytest.raises(ValueError, match="slot_len"):
        ControlConfig(slot_len=700).validate()
    assert ControlConfig(enabled="dcba").enabled == "ABCD"


@settings(max_examples=100, deadline=None)
@given(
    v=st.floats(0.0, 1.0),
    k=st.integers(-3, 3),
    t=st.integers(0, 86399),
    unit=st.integers(0, 11),
    fs=st.booleans(),
)
def test_decisions_invariant_under_volume_rescaling(v, k, t, unit, fs):
    # scaling every volume and the pump rate by a power of two is exact in floating point
    c = 2.0 ** k
    learn = LearningState.initial(12, 144)
    slot = slot_at(build_schedule(12, 600, 10, 0), t)
    a = compose_decide(unit, v, P, CFG, learn, slot, IDLE_COMMAND, fs)
    b = compose_decide(unit, v * c, P.scaled(c), CFG, learn, slot, IDLE_COMMAND, fs)
    assert a == b
