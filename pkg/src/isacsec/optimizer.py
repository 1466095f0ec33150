"""Weighted sensing/secrecy optimization over the sampled beampattern
constraints.

The determinant objective enters through per-Eve 3x3 surrogate matrices tied
to the Fisher matrix by a Schur-complement block, so maximizing their
log-determinants maximizes the Fisher information of each Eve's parameter
triple. Secrecy enters through the quadratic-transform epigraph variable z
(z = 2^rate at the optimum), scanned over the SINR-level variable c by
golden search. Everything is solved in power-normalized units (total
transmit power 1) for conic-solver conditioning.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import cvxpy as cp
import numpy as np

from .arrays import ArrayGeometry, steering
from .conic import INFEASIBLE_STATUSES, USABLE_STATUSES, solve_with_fallback
from .errors import (
    InfeasibleProblemError,
    NoSidelobeRegionError,
    NumericalDegeneracyError,
    OptimizationFailureError,
)
from .fpcore import FP_MAX_ITER, FP_TOL, c_interval, fp_row_parameters
from .golden import golden_section_max
from .security import TransmitDesign, secrecy_rate
from .sensing import EveParameters, build_fim, fim_expression

log = logging.getLogger(__name__)

HALF_PI = np.pi / 2
GUARD_BAND = np.deg2rad(3.0)
MAX_LOBE_POINTS = 41
SIDE_STEP_FLOOR = np.deg2rad(1.0)
RANK_DEFECT_WARN = 0.05


@dataclass(frozen=True)
class BeamConstraintSet:
    """Sampled main-lobe and sidelobe directions with the gap and ripple."""

    centers: np.ndarray
    intervals: tuple
    omega: tuple
    psi: np.ndarray
    gamma_s: float
    ripple_alpha: float

    @property
    def k(self) -> int:
        return self.centers.size

    def lobe_widths(self) -> np.ndarray:
        return np.array([hi - lo for lo, hi in self.intervals])


def _merge_intervals(intervals):
    ivs = sorted((float(lo), float(hi)) for lo, hi in intervals)
    merged = [list(ivs[0])]
    for lo, hi in ivs[1:]:
        if lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged]


def build_constraints(
    centers: np.ndarray,
    intervals,
    ripple_alpha: float,
    gamma_s: float,
    grid_step: float,
    guard: float = GUARD_BAND,
) -> BeamConstraintSet:
    """Discretize the uncertainty intervals into constraint sample sets.

    Each Eve's main-lobe set covers its interval at ``grid_step`` (coarsened
    above MAX_LOBE_POINTS samples so very wide early-iteration lobes stay
    solver-friendly) and always contains both endpoints and the center. The
    sidelobe set covers the complement of all merged intervals plus a guard
    band. Overlapping intervals merge into a single lobe for the sidelobe
    complement.
    """
    if gamma_s <= 0:
        raise ValueError("gamma_s must be positive")
    if not 0 < ripple_alpha < 1:
        raise ValueError("ripple_alpha must lie in (0, 1)")
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    centers = np.atleast_1d(np.asarray(centers, float))
    intervals = [(float(lo), float(hi)) for lo, hi in intervals]
    if len(intervals) != centers.size:
        raise ValueError("one interval per center required")
    omega = []
    for (lo, hi), ctr in zip(intervals, centers):
        if not lo <= ctr <= hi:
            raise ValueError("interval must contain its center")
        width = hi - lo
        step = max(grid_step, width / (MAX_LOBE_POINTS - 1)) if width > 0 else grid_step
        pts = np.arange(lo, hi + step / 2, step)
        pts = np.unique(np.clip(np.concatenate([pts, [lo, ctr, hi]]), -HALF_PI, HALF_PI))
        omega.append(pts)
    merged = _merge_intervals(intervals)
    side_step = max(grid_step, SIDE_STEP_FLOOR)
    grid = np.arange(-HALF_PI, HALF_PI + side_step / 2, side_step)
    keep = np.ones(grid.size, bool)
    for lo, hi in merged:
        keep &= (grid < lo - guard) | (grid > hi + guard)
    psi = grid[keep]
    if psi.size == 0:
        raise NoSidelobeRegionError(
            "uncertainty intervals plus guard band cover the whole angular domain"
        )
    return BeamConstraintSet(
        centers=centers,
        intervals=tuple(intervals),
        omega=tuple(omega),
        psi=psi,
        gamma_s=float(gamma_s),
        ripple_alpha=float(ripple_alpha),
    )


@dataclass(frozen=True)
class WeightedContext:
    """Everything a weighted solve needs besides (c, y)."""

    channels: np.ndarray            # n_tx x I, user channels as columns
    estimates: EveParameters        # Eve centers and estimated amplitudes
    geometry: ArrayGeometry
    frame_length: int
    power_budget: float
    noise_var_c: float
    noise_var_0: float
    noise_var_r: float
    constraints: BeamConstraintSet
    rho: float
    det_ub: float
    sr_ub: float

    @property
    def n_users(self) -> int:
        return self.channels.shape[1]


@dataclass
class WeightedSolution:
    design: TransmitDesign
    c_opt: float
    z_opt: float
    upsilon: list
    objective: float
    det_j: float
    secrecy_rate: float
    solver_status: str
    y_opt: np.ndarray = field(default_factory=lambda: np.array([]))


def _pattern_rows(angles: np.ndarray, n: int) -> np.ndarray:
    """Rows r with r . vec(R) = a^H R a for each angle (row-major vec)."""
    rows = []
    for ang in np.atleast_1d(angles):
        a = steering(float(ang), n)
        rows.append(np.conj(np.outer(a, a.conj())).ravel())
    return np.stack(rows)


def _det_rootn_epigraph(U, n: int):
    """t <= det(U)^(1/n) for symmetric PSD U, via the lower-triangular
    factor trick (SOC + one small PSD block, no exponential cones)."""
    Lm = cp.Variable((n, n))
    d = cp.diag(Lm)
    t = cp.Variable(nonneg=True)
    cons = [cp.bmat([[U, Lm], [Lm.T, cp.diag(d)]]) >> 0, t <= cp.geo_mean(d)]
    cons += [Lm[i, j] == 0 for i in range(n) for j in range(i + 1, n)]
    return t, cons


def _selector(k: int, n_eves: int) -> np.ndarray:
    """3K x 3 matrix picking Eve k's (theta, Re beta, Im beta) rows."""
    P = np.zeros((3 * n_eves, 3))
    P[k, 0] = 1.0
    P[n_eves + k, 1] = 1.0
    P[2 * n_eves + k, 2] = 1.0
    return P


class WeightedProblem:
    """Compiled inner convex problem of the weighted optimization.

    Built once per constraint set; (c, y) enter as cvxpy parameters so the
    golden search and the quadratic-transform loop re-solve without
    re-canonicalizing.
    """

    def __init__(self, ctx: WeightedContext):
        self.ctx = ctx
        n = ctx.geometry.n_tx
        I_users = ctx.n_users
        K = ctx.estimates.k
        scale = ctx.power_budget
        cs = ctx.constraints

        self.W = [cp.Variable((n, n), hermitian=True) for _ in range(I_users)]
        self.RN = cp.Variable((n, n), hermitian=True)
        RX = sum(self.W) + self.RN
        vec = lambda M: cp.reshape(M, (n * n,), order="C")
        rx_vec, sw_vec, rn_vec = vec(RX), vec(sum(self.W)), vec(self.RN)

        cons = [w >> 0 for w in self.W] + [self.RN >> 0]
        cons += [cp.real(cp.trace(RX)) == 1.0]

        gamma_n = cs.gamma_s / scale
        alpha = cs.ripple_alpha
        self.p_c = cp.Parameter(nonneg=True)
        self.p_1mc = cp.Parameter(nonneg=True)
        self.p_a = cp.Parameter(I_users, nonneg=True)
        self.p_b = cp.Parameter(I_users, nonneg=True)
        self.p_g = cp.Parameter(I_users, nonneg=True)

        psi_rows = _pattern_rows(cs.psi, n)
        pat_psi = cp.real(psi_rows @ rx_vec)
        include_secrecy = ctx.rho < 1.0
        for k in range(K):
            ctr_row = _pattern_rows(cs.centers[k], n)
            pat_ctr = cp.real(ctr_row @ rx_vec)[0]
            om_rows = _pattern_rows(cs.omega[k], n)
            pat_om = cp.real(om_rows @ rx_vec)
            cons += [pat_om <= (1 + alpha) * pat_ctr,
                     pat_om >= (1 - alpha) * pat_ctr,
                     pat_ctr - pat_psi >= gamma_n]
            if include_secrecy:
                g2 = abs(ctx.estimates.amplitudes[k]) ** 2
                ew = cp.real(om_rows @ sw_vec)
                en = cp.real(om_rows @ rn_vec)
                cons += [self.p_c * g2 * ew
                         <= self.p_1mc * (g2 * en + ctx.noise_var_0 / scale)]

        h_outer = [np.outer(ctx.channels[:, i], ctx.channels[:, i].conj())
                   for i in range(I_users)]
        self.S, self.D = [], []
        for i in range(I_users):
            received = sum(cp.real(cp.trace(h_outer[i] @ w)) for w in self.W)
            own = cp.real(cp.trace(h_outer[i] @ self.W[i]))
            an = cp.real(cp.trace(h_outer[i] @ self.RN))
            self.S.append(received + an + ctx.noise_var_c / scale)
            self.D.append(received - own + an + ctx.noise_var_c / scale)

        self.z_scale = 2.0 ** ctx.sr_ub
        self.zt = cp.Variable() if include_secrecy else None
        if include_secrecy:
            cons += [self.p_a[i] * cp.sqrt(self.S[i]) - self.p_b[i] * self.D[i]
                     >= self.p_g[i] * self.zt for i in range(I_users)]

        obj_terms = []
        self.upsilon = []
        if ctx.rho > 0:
            Jx = fim_expression(ctx.estimates, RX * scale, ctx.noise_var_r,
                                ctx.frame_length, ctx.geometry)
            det_norm = max(ctx.det_ub, 1e-300) ** (1.0 / (3 * K))
            for k in range(K):
                U = cp.Variable((3, 3), symmetric=True)
                P = _selector(k, K)
                cons += [cp.bmat([[U, U @ P.T], [P @ U, Jx]]) >> 0]
                t, det_cons = _det_rootn_epigraph(U, 3)
                cons += det_cons
                self.upsilon.append(U)
                obj_terms.append(ctx.rho / K * t / det_norm)
        if include_secrecy:
            obj_terms.append((1 - ctx.rho) * self.zt)
        self.problem = cp.Problem(cp.Maximize(sum(obj_terms)), cons)

    def solve(self, c: float, y: np.ndarray) -> str:
        self.p_c.value = c
        self.p_1mc.value = 1.0 - c
        a, b, g = fp_row_parameters(c, y)
        self.p_a.value, self.p_b.value, self.p_g.value = a, b, g * self.z_scale
        return solve_with_fallback(self.problem)

    def current_sd(self):
        S = np.array([float(s.value) for s in self.S])
        D = np.array([float(d.value) for d in self.D])
        return S, D

    def extract(self, c: float, status: str, y: np.ndarray) -> WeightedSolution:
        ctx = self.ctx
        scale = ctx.power_budget
        design = TransmitDesign(
            w_tilde=[scale * w.value for w in self.W],
            r_n=scale * self.RN.value,
        )
        fim = build_fim(ctx.estimates, design.r_x, ctx.noise_var_r,
                        ctx.frame_length, ctx.geometry)
        evals = []
        for k in range(ctx.estimates.k):
            amp = ctx.estimates.amplitudes[k]
            evals += [(float(ang), amp) for ang in ctx.constraints.omega[k]]
        report = secrecy_rate(design, ctx.channels, evals,
                              ctx.noise_var_c, ctx.noise_var_0)
        return WeightedSolution(
            design=design,
            c_opt=c,
            z_opt=float(self.zt.value) * self.z_scale if self.zt is not None else float("nan"),
            upsilon=[np.array(U.value) for U in self.upsilon],
            objective=float(self.problem.value),
            det_j=float(np.linalg.det(fim.j_matrix)),
            secrecy_rate=report.secrecy_rate,
            solver_status=status,
            y_opt=np.asarray(y, float).copy(),
        )


def fp_update_y(design: TransmitDesign, channels: np.ndarray, c: float,
                noise_var_c: float) -> np.ndarray:
    """Closed-form quadratic-transform weights for a given design.

    y_i = c * sqrt(S_i) / D_i with S_i the user's total received power plus
    noise and D_i its interference-plus-noise part (physical units).
    """
    I_users = channels.shape[1]
    y = np.empty(I_users)
    for i in range(I_users):
        h = channels[:, i]
        Ht = np.outer(h, h.conj())
        received = sum(float(np.trace(Ht @ w).real) for w in design.w_tilde)
        own = float(np.trace(Ht @ design.w_tilde[i]).real)
        an = float(np.trace(Ht @ design.r_n).real)
        S = received + an + noise_var_c
        D = received - own + an + noise_var_c
        if D <= 0:
            raise NumericalDegeneracyError(f"nonpositive SINR denominator for user {i}")
        y[i] = c * np.sqrt(S) / D
    return y


def _initial_y(ctx: WeightedContext, c: float) -> np.ndarray:
    """Quadratic-transform weights of the equal-split omnidirectional design."""
    n = ctx.geometry.n_tx
    I_users = ctx.n_users
    share = 1.0 / n / (I_users + 1)
    y = np.empty(I_users)
    for i in range(I_users):
        h2 = float(np.linalg.norm(ctx.channels[:, i]) ** 2)
        received = h2 * share * I_users
        an = h2 * share
        S = received + an + ctx.noise_var_c / ctx.power_budget
        D = received - h2 * share + an + ctx.noise_var_c / ctx.power_budget
        y[i] = c * np.sqrt(S) / D
    return y


def solve_inner_sdp(ctx: WeightedContext, c: float, y: np.ndarray,
                    problem: WeightedProblem | None = None) -> WeightedSolution:
    """One inner convex solve at fixed (c, y); y in normalized units."""
    prob = problem or WeightedProblem(ctx)
    status = prob.solve(c, y)
    if status in INFEASIBLE_STATUSES:
        raise InfeasibleProblemError(
            "beampattern/power constraint set is empty", status=status
        )
    if status not in USABLE_STATUSES or prob.problem.value is None:
        raise OptimizationFailureError(f"inner solve failed: {status}", status=status)
    return prob.extract(c, status, y)


def run_fp(prob: WeightedProblem, c: float, y0: np.ndarray,
           tol: float = FP_TOL, max_iter: int = FP_MAX_ITER):
    """Quadratic-transform loop at fixed c; returns (status, objectives, y)."""
    y = np.asarray(y0, float).copy()
    objs = []
    status = None
    for _ in range(max_iter):
        status = prob.solve(c, y)
        if status in INFEASIBLE_STATUSES:
            return status, objs, y
        if status not in USABLE_STATUSES or prob.problem.value is None:
            return status or "solver_error", objs, y
        objs.append(float(prob.problem.value))
        S, D = prob.current_sd()
        if np.any(D <= 0):
            break
        y = c * np.sqrt(S) / D
        if len(objs) >= 2 and abs(objs[-1] - objs[-2]) < tol:
            break
    return status, objs, y


def golden_search_c(ctx: WeightedContext, tol_c: float | None = None) -> WeightedSolution:
    """Golden-section line search over c with the FP loop at each candidate.

    Raises InfeasibleProblemError when the (c-independent) beampattern and
    power constraints admit no design at all.
    """
    prob = WeightedProblem(ctx)
    if ctx.rho >= 1.0:
        sol = solve_inner_sdp(ctx, 1.0, np.zeros(ctx.n_users), problem=prob)
        return sol

    lo, hi = c_interval(np.linalg.norm(ctx.channels, axis=0) ** 2, ctx.power_budget)
    if tol_c is None:
        tol_c = 1e-3 * (hi - lo)
    state = {"y": None, "best": None}

    def objective(c):
        y0 = state["y"] if state["y"] is not None else _initial_y(ctx, c)
        status, objs, y = run_fp(prob, c, y0)
        if status in INFEASIBLE_STATUSES:
            raise InfeasibleProblemError(
                "beampattern/power constraint set is empty", status=status
            )
        if status not in USABLE_STATUSES or not objs:
            return -np.inf, None
        state["y"] = y
        sol = prob.extract(c, status, y)
        if state["best"] is None or sol.objective > state["best"].objective:
            state["best"] = sol
        return objs[-1], None

    _, best_val, _ = golden_section_max(objective, lo, hi, tol=tol_c)
    if state["best"] is None or not np.isfinite(best_val):
        raise OptimizationFailureError("no usable solve among the c candidates")
    return state["best"]


def extract_beamformers(design: TransmitDesign):
    """Principal-eigenvector beamformers with their rank-1 defect ratios.

    Returns (list of w_i, list of defect ratios). A defect ratio above
    RANK_DEFECT_WARN signals a relaxation gap worth logging.
    """
    beams, defects = [], []
    for W in design.w_tilde:
        w_eigs, v = np.linalg.eigh(W)
        lead = float(w_eigs[-1])
        if lead <= 0:
            beams.append(np.zeros(W.shape[0], complex))
            defects.append(0.0)
            continue
        beams.append(np.sqrt(lead) * v[:, -1])
        ratio = float(max(w_eigs[-2], 0.0) / lead) if W.shape[0] > 1 else 0.0
        defects.append(ratio)
        if ratio > RANK_DEFECT_WARN:
            log.warning("rank-1 relaxation gap: defect ratio %.3f", ratio)
    return beams, defects
