"""Thin wrapper around the conic solvers cvxpy ships with.

Every optimization in the package goes through :func:`solve_with_fallback`:
CLARABEL first (interior point, handles the PSD + exponential cone mix),
then SCS if CLARABEL errors out entirely. Reduced-accuracy terminations are
accepted as usable: they occur routinely on the larger beampattern problems
and the surrounding golden-search/FP iterations tolerate them. Both
backends are deterministic for a fixed problem, which the CSV
reproducibility guarantee relies on.
"""
from __future__ import annotations

import logging
import warnings

import cvxpy as cp

log = logging.getLogger(__name__)

INFEASIBLE_STATUSES = frozenset({cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE})
USABLE_STATUSES = frozenset({cp.OPTIMAL, cp.OPTIMAL_INACCURATE})
_DECIDED = USABLE_STATUSES | INFEASIBLE_STATUSES


def _try_solve(problem: cp.Problem, solver: str, **kwargs):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            problem.solve(solver=solver, **kwargs)
        return problem.status
    except (cp.SolverError, ValueError, ArithmeticError) as exc:
        log.debug("%s failed: %s", solver, exc)
        return None


def solve_with_fallback(problem: cp.Problem, warm_start: bool = True,
                        scs_eps: float = 1e-6) -> str:
    """Solve ``problem`` in place and return the final status string.

    Infeasibility reported by either backend is returned as-is (callers
    decide whether that is an error or an expected sweep outcome).
    """
    status = _try_solve(problem, cp.CLARABEL, warm_start=warm_start)
    if status in _DECIDED:
        return status
    scs_status = _try_solve(problem, cp.SCS, warm_start=warm_start,
                            eps=scs_eps, max_iters=50_000)
    if scs_status in _DECIDED:
        return scs_status
    return status or scs_status or "solver_error"
