"""Compiled fractional-programming subproblems for max-min-SINR style
secrecy optimizations.

All problems here are built once per scenario in power-normalized units
(total transmit power == 1, noise variances divided by the budget) and
re-solved through cvxpy parameters as the quadratic-transform weights y and
the SINR-level c move. The quadratic transform turns each ratio constraint
into 2*c*y_i*sqrt(S_i) - y_i^2*D_i >= c*z with S_i the total received CU
power plus noise and D_i the interference-plus-noise part; the closed-form
maximizer of the left side is y_i = c*sqrt(S_i)/D_i.
"""
from __future__ import annotations

import logging

import cvxpy as cp
import numpy as np

from .conic import INFEASIBLE_STATUSES, USABLE_STATUSES, solve_with_fallback
from .errors import InfeasibleProblemError, OptimizationFailureError

log = logging.getLogger(__name__)

FP_TOL = 1e-4
FP_MAX_ITER = 20


def sinr_terms(w_vars, rn_expr, h_outer, sigma_c):
    """Per-user totals S_i and interference D_i as cvxpy expressions."""
    S, D = [], []
    for i, Hi in enumerate(h_outer):
        received = sum(cp.real(cp.trace(Hi @ w)) for w in w_vars)
        own = cp.real(cp.trace(Hi @ w_vars[i]))
        an = cp.real(cp.trace(Hi @ rn_expr)) if rn_expr is not None else 0.0
        S.append(received + an + sigma_c)
        D.append(received - own + an + sigma_c)
    return S, D


def fp_row_parameters(c: float, y: np.ndarray):
    """Row-scaled quadratic-transform coefficients.

    Each row 2*c*y_i*sqrt(S_i) - y_i^2*D_i >= c*z is divided by
    k_i = max(eps, c*y_i), which keeps all three terms near sqrt(S_i) even
    at very large SINRs where raw y_i^2 coefficients destroy solver
    conditioning. The feasible set is unchanged.
    """
    y = np.asarray(y, float)
    k = np.maximum(1e-9, c * y)
    return 2.0 * c * y / k, y ** 2 / k, c / k


class FpSubproblem:
    """One compiled max-z subproblem with (c, y) exposed as parameters.

    The epigraph variable is stored in units of ``z_scale`` (pick the rough
    magnitude of the best achievable z) so the objective and constraint
    coefficients stay O(1); ``current_z`` undoes the scaling.
    """

    def __init__(self, constraints, S, D, n_users, z_scale: float = 1.0,
                 extra_objective=None):
        self.z_scale = float(z_scale)
        self.zt = cp.Variable()
        self.p_a = cp.Parameter(n_users, nonneg=True)   # 2*c*y_i / k_i
        self.p_b = cp.Parameter(n_users, nonneg=True)   # y_i^2 / k_i
        self.p_g = cp.Parameter(n_users, nonneg=True)   # c * z_scale / k_i
        fp_rows = [
            self.p_a[i] * cp.sqrt(S[i]) - self.p_b[i] * D[i] >= self.p_g[i] * self.zt
            for i in range(n_users)
        ]
        objective = cp.Maximize(self.zt if extra_objective is None
                                else self.zt + extra_objective)
        self.problem = cp.Problem(objective, constraints + fp_rows)
        self.S, self.D = S, D
        self.n_users = n_users

    def solve_at(self, c: float, y: np.ndarray) -> str:
        a, b, g = fp_row_parameters(c, y)
        self.p_a.value, self.p_b.value, self.p_g.value = a, b, g * self.z_scale
        return solve_with_fallback(self.problem)

    def current_sd(self):
        S = np.array([float(s.value) for s in self.S])
        D = np.array([float(d.value) for d in self.D])
        return S, D

    def current_z(self) -> float:
        return float(self.zt.value) * self.z_scale


def fp_loop(sub: FpSubproblem, c: float, y0: np.ndarray,
            tol: float = FP_TOL, max_iter: int = FP_MAX_ITER):
    """Alternate solve / closed-form y update at fixed c.

    Returns (status, objective_trace, y). The surrogate objective is
    non-decreasing across iterations; the loop stops once it moves by less
    than ``tol``.
    """
    y = np.asarray(y0, float).copy()
    trace = []
    status = None
    for _ in range(max_iter):
        status = sub.solve_at(c, y)
        if status in INFEASIBLE_STATUSES:
            return status, trace, y
        if status not in USABLE_STATUSES or sub.problem.value is None:
            return status or "solver_error", trace, y
        trace.append(float(sub.problem.value))
        S, D = sub.current_sd()
        if np.any(D <= 0):
            break
        y = c * np.sqrt(S) / D
        if len(trace) >= 2 and abs(trace[-1] - trace[-2]) < tol:
            break
    return status, trace, y


def c_interval(h_norms_sq: np.ndarray, power_budget: float) -> tuple[float, float]:
    """Search interval for the SINR-level variable c = 1/b."""
    lo = 1.0 / (1.0 + power_budget * float(np.min(h_norms_sq)))
    return lo, 1.0
