"""Reference computations written independently of the package code paths."""

import math
from fractions import Fraction

import numpy as np


def tank_step_oracle(volume, inflow, pump_rate, pump_time, v_dead, capacity):
    want = pump_rate * pump_time
    available = max(volume - v_dead, 0.0)
    pumped = want if want <= available else available
    v = volume + inflow - pumped
    overflow = v - capacity if v > capacity else 0.0
    return min(v, capacity), pumped, overflow


def moving_sum_brute(x, w):
    """Exactly rounded sum of every full window."""
    return np.array([math.fsum(x[i:i + w]) for i in range(len(x) - w + 1)])


def moving_sum_shifted(x, w):
    """Window sums built by adding shifted copies, a different summation order."""
    x = np.asarray(x, dtype=float)
    n = len(x) - w + 1
    acc = np.zeros(n)
    for j in range(w):
        acc += x[j:j + n]
    return acc


def stats_longdouble(x):
    """Two-pass population mean and std in extended precision."""
    y = np.asarray(x, dtype=np.longdouble)
    mean = y.sum() / y.size
    var = ((y - mean) ** 2).sum() / y.size
    return float(mean), float(np.sqrt(var))


def pstd_exact(x):
    """Population std from exact rational arithmetic."""
    fr = [Fraction(v) for v in x]
    mean = sum(fr) / len(fr)
    return math.sqrt(sum((v - mean) ** 2 for v in fr) / len(fr))


def slot_counts(n_units, slot_len, emergent_period):
    """Count slots by enumerating indices."""
    n = 86400 // slot_len
    emergent = [s for s in range(n) if emergent_period and (s + 1) % emergent_period == 0]
    regular = n - len(emergent)
    per_unit = {regular // n_units, -(-regular // n_units)}
    return n, emergent, regular, per_unit


def on_off_trace(v0, q, dt, rate, v_high, v_off, v_dead, n_steps):
    """Config A replayed step by step in exact rational arithmetic.

    Returns a list of (t_start, t_end) drawings using the decision-at-step-start rule.
    """
    v, on, events, start = Fraction(v0), False, [], None
    q, rate, dt = Fraction(q), Fraction(rate), Fraction(dt)
    for k in range(n_steps):
        if v >= v_high:
            on = True
        elif v <= v_off:
            on = False
        pumped = min(rate * dt, max(v - Fraction(v_dead), Fraction(0))) if on else Fraction(0)
        if pumped > 0 and start is None:
            start = k * dt
        if pumped == 0 and start is not None:
            events.append((float(start), float(k * dt)))
            start = None
        v = v + q - pumped
    if start is not None:
        events.append((float(start), float(n_steps * dt)))
    return events
