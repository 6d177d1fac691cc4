"""Compiled fixed-step loop over all units.

State lives in two per-unit arrays (float and int columns below) so that a
simulation can be advanced in chunks of any length and resumed exactly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .control import (
    EMERGENT, FAILSAFE, IDLE, KIND_EMERGENT, KIND_OTHER, KIND_OWN, _decide, _learn,
)
from .model import SECONDS_PER_DAY, _tank_step

# float state columns
VOL, BUDGET, MODIF, EV_START, EV_END, EV_VOL, IN_TOT, PUMP_TOT, OVF_TOT = range(9)
N_FSTATE = 9
# int state columns
FS_ON, SRC, ARM_LO, ARM_HI, EV_OPEN, EV_SRC, EV_SLOT = range(7)
N_ISTATE = 7
# per-unit tank parameter columns
P_CAP, P_DEAD, P_CMINUS, P_CPLUS, P_WARN, P_HIGH, P_OFF, P_RATE = range(8)
N_PARAMS = 8


def new_state(n_units: int, volumes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    fstate = np.zeros((n_units, N_FSTATE))
    fstate[:, VOL] = volumes
    istate = np.zeros((n_units, N_ISTATE), dtype=np.int64)
    istate[:, ARM_LO] = 1
    istate[:, ARM_HI] = 1
    istate[:, SRC] = IDLE
    return fstate, istate


@njit(cache=True)
def _close(u, fstate, istate, ev_i, ev_f, n_ev):
    ev_i[n_ev, 0] = u
    ev_i[n_ev, 1] = istate[u, EV_SRC]
    ev_f[n_ev, 0] = fstate[u, EV_START]
    ev_f[n_ev, 1] = fstate[u, EV_END]
    ev_f[n_ev, 2] = fstate[u, EV_VOL]
    istate[u, EV_OPEN] = 0
    return n_ev + 1


@njit(cache=True)
def _forced_code(src, prev_src):
    if src == FAILSAFE or src == EMERGENT:
        return 1 if src == prev_src else 2
    return 0


@njit(cache=True)
def run_steps(k0, inflow, p, owner, use_b, use_c, use_d, dt, slot_len, t_base, pt,
              fstate, istate, ref, aggregate, ev_i, ev_f, lt_i, lt_f, ov_i, ov_f):
    """Advance every unit through ``inflow.shape[1]`` steps starting at global step ``k0``.

    Writes closed draw events, learning changes and overflow records into the
    given buffers and returns how many of each were written.
    """
    n_units, m = inflow.shape
    steps_per_slot = slot_len // dt
    steps_per_day = SECONDS_PER_DAY // dt
    lo = -t_base
    hi = slot_len - t_base
    n_ev = 0
    n_lt = 0
    n_ov = 0
    for j in range(m):
        k = k0 + j
        t = float(k * dt)
        kd = k % steps_per_day
        s = kd // steps_per_slot
        at_entry = kd % steps_per_slot == 0
        gslot = k // steps_per_slot
        own = owner[s]
        total = 0.0
        for u in range(n_units):
            if own < 0:
                kind = KIND_EMERGENT
            elif own == u:
                kind = KIND_OWN
            else:
                kind = KIND_OTHER
            v0 = fstate[u, VOL]
            modif = fstate[u, MODIF] if use_d else 0.0
            reg = min(max(t_base + modif, 0.0), float(slot_len))
            src, budget, fs = _decide(
                v0, istate[u, FS_ON] == 1, istate[u, SRC], fstate[u, BUDGET], kind,
                at_entry, use_b, use_c, p[u, P_DEAD], p[u, P_HIGH], p[u, P_OFF],
                p[u, P_WARN], float(slot_len), reg,
            )
            if src == FAILSAFE:
                ptime = float(dt)
            elif src == IDLE:
                ptime = 0.0
            else:
                ptime = min(float(dt), budget)
                budget -= ptime
            v1, pumped, ovf = _tank_step(
                v0, inflow[u, j], ptime, p[u, P_RATE], p[u, P_DEAD], p[u, P_CAP]
            )
            fstate[u, VOL] = v1
            fstate[u, BUDGET] = budget
            fstate[u, IN_TOT] += inflow[u, j]
            fstate[u, PUMP_TOT] += pumped
            fstate[u, OVF_TOT] += ovf
            prev_src = istate[u, SRC]
            istate[u, FS_ON] = 1 if fs else 0
            istate[u, SRC] = src
            total += pumped

            if ovf > 0.0:
                ov_i[n_ov] = u
                ov_f[n_ov, 0] = t
                ov_f[n_ov, 1] = ovf
                n_ov += 1

            if pumped > 0.0:
                key = -1 if src == FAILSAFE else gslot
                if istate[u, EV_OPEN] == 1 and (istate[u, EV_SRC] != src or istate[u, EV_SLOT] != key):
                    n_ev = _close(u, fstate, istate, ev_i, ev_f, n_ev)
                if istate[u, EV_OPEN] == 0:
                    istate[u, EV_OPEN] = 1
                    istate[u, EV_SRC] = src
                    istate[u, EV_SLOT] = key
                    fstate[u, EV_START] = t
                    fstate[u, EV_VOL] = 0.0
                fstate[u, EV_END] = t + ptime
                fstate[u, EV_VOL] += pumped
            elif istate[u, EV_OPEN] == 1:
                n_ev = _close(u, fstate, istate, ev_i, ev_f, n_ev)

            if use_d:
                new_modif, a_lo, a_hi = _learn(
                    v1, v0, s if at_entry and kind == KIND_OWN else -1,
                    _forced_code(src, prev_src),
                    fstate[u, MODIF], istate[u, ARM_LO] == 1, istate[u, ARM_HI] == 1,
                    ref[u], p[u, P_CMINUS], p[u, P_CPLUS], pt, lo, hi,
                )
                if new_modif != fstate[u, MODIF]:
                    lt_i[n_lt] = u
                    lt_f[n_lt, 0] = t + dt
                    lt_f[n_lt, 1] = new_modif
                    n_lt += 1
                fstate[u, MODIF] = new_modif
                istate[u, ARM_LO] = 1 if a_lo else 0
                istate[u, ARM_HI] = 1 if a_hi else 0
        aggregate[j] = total
    return n_ev, n_lt, n_ov


@njit(cache=True)
def close_all(fstate, istate, ev_i, ev_f):
    n_ev = 0
    for u in range(fstate.shape[0]):
        if istate[u, EV_OPEN] == 1:
            n_ev = _close(u, fstate, istate, ev_i, ev_f, n_ev)
    return n_ev
