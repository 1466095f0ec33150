"""Golden-section maximization over a closed interval.

Used for the one-dimensional searches over the SINR-level variable c; both
interval endpoints are evaluated so the returned value can never fall below
them even when the objective is not perfectly unimodal.
"""
from __future__ import annotations

import numpy as np

_INV_PHI = (np.sqrt(5) - 1) / 2


def golden_section_max(f, lo: float, hi: float, tol: float):
    """Maximize ``f`` on [lo, hi]; returns (x_best, f_best, n_evaluations).

    Interior evaluations are carried forward, so each contraction step costs
    exactly one new evaluation. ``f`` may return a plain value or a
    (value, payload) pair; payloads are ignored here (callers track their
    own best state).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if hi <= lo:
        raise ValueError("empty interval")

    def call(x):
        out = f(x)
        return out[0] if isinstance(out, tuple) else out

    evals = 0
    best_x, best_v = lo, call(lo)
    evals += 1

    def consider(x, v):
        nonlocal best_x, best_v
        if v > best_v:
            best_x, best_v = x, v

    v_hi = call(hi)
    evals += 1
    consider(hi, v_hi)

    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = call(c), call(d)
    evals += 2
    consider(c, fc)
    consider(d, fd)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = call(c)
            evals += 1
            consider(c, fc)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = call(d)
            evals += 1
            consider(d, fd)
    return best_x, best_v, evals
