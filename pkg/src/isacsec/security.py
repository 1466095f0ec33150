"""Communication-side metrics and the artificial-noise benchmarks.

Rates are base-2 logarithms (bit/s/Hz). The worst-case secrecy rate pairs
the weakest user with the strongest eavesdropper evaluation point and clips
at zero.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .arrays import steering
from .conic import INFEASIBLE_STATUSES, USABLE_STATUSES
from .errors import (
    InfeasibleProblemError,
    OptimizationFailureError,
    ProjectorDegenerateError,
)
from .fpcore import FpSubproblem, c_interval, fp_loop, sinr_terms
from .golden import golden_section_max

log = logging.getLogger(__name__)


def _psd_project(mat: np.ndarray) -> np.ndarray:
    """Symmetrize and clip tiny negative eigenvalues from solver output."""
    m = (np.asarray(mat, complex) + np.asarray(mat, complex).conj().T) / 2
    w, v = np.linalg.eigh(m)
    if w.min() >= 0:
        return m
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.conj().T


@dataclass(frozen=True)
class TransmitDesign:
    """Rank-relaxed per-user covariances plus the AN covariance.

    Solver output is projected onto the PSD cone at construction so the
    stored matrices satisfy the PSD invariants exactly; ``r_x`` caches the
    total transmit covariance.
    """

    w_tilde: list
    r_n: np.ndarray
    r_x: np.ndarray = field(init=False)

    def __post_init__(self):
        w = [_psd_project(m) for m in self.w_tilde]
        rn = _psd_project(self.r_n)
        object.__setattr__(self, "w_tilde", w)
        object.__setattr__(self, "r_n", rn)
        object.__setattr__(self, "r_x", sum(w, np.zeros_like(rn)) + rn)

    @property
    def n_tx(self) -> int:
        return self.r_n.shape[0]

    @property
    def n_users(self) -> int:
        return len(self.w_tilde)

    def sum_w(self) -> np.ndarray:
        return sum(self.w_tilde, np.zeros_like(self.r_n))

    def total_power(self) -> float:
        return float(np.trace(self.r_x).real)


@dataclass(frozen=True)
class SecrecyReport:
    """Worst-case secrecy rate together with the per-link quantities."""

    cu_sinr: np.ndarray
    eve_snr: np.ndarray
    rate_cu: np.ndarray
    rate_eve: np.ndarray
    secrecy_rate: float


def cu_sinr(design: TransmitDesign, h: np.ndarray, noise_var_c: float) -> float:
    """Downlink SINR of the user with channel ``h`` (trace form)."""
    i = _user_index(design, h)
    Ht = np.outer(h, h.conj())
    sig = float(np.trace(Ht @ design.w_tilde[i]).real)
    interference = sum(
        float(np.trace(Ht @ w).real) for m, w in enumerate(design.w_tilde) if m != i
    )
    an = float(np.trace(Ht @ design.r_n).real)
    return sig / (interference + an + noise_var_c)


def _user_index(design: TransmitDesign, h: np.ndarray) -> int:
    """Best-matching beam for ``h``: the one carrying the most of its power."""
    if not design.w_tilde:
        raise ValueError("design has no user beams")
    Ht = np.outer(h, h.conj())
    gains = [float(np.trace(Ht @ w).real) for w in design.w_tilde]
    return int(np.argmax(gains))


def cu_sinr_all(design: TransmitDesign, channels: np.ndarray, noise_var_c: float) -> np.ndarray:
    """SINR of every user; column i of ``channels`` is paired with beam i."""
    n = channels.shape[1]
    out = np.empty(n)
    for i in range(n):
        h = channels[:, i]
        Ht = np.outer(h, h.conj())
        gains = np.array([float(np.trace(Ht @ w).real) for w in design.w_tilde])
        an = float(np.trace(Ht @ design.r_n).real)
        out[i] = gains[i] / (gains.sum() - gains[i] + an + noise_var_c)
    return out


def eve_snr(design: TransmitDesign, angle: float, amplitude: complex, noise_var_0: float) -> float:
    """Eavesdropping SNR at a probed direction with path gain ``amplitude``."""
    a = steering(angle, design.n_tx)
    g2 = abs(amplitude) ** 2
    num = g2 * float(np.real(a.conj() @ design.sum_w() @ a))
    den = g2 * float(np.real(a.conj() @ design.r_n @ a)) + noise_var_0
    return num / den


def secrecy_rate(
    design: TransmitDesign,
    channels: np.ndarray,
    eve_evaluations,
    noise_var_c: float,
    noise_var_0: float,
) -> SecrecyReport:
    """Worst-case secrecy rate over all users and Eve evaluation points.

    ``eve_evaluations`` is a sequence of (angle, amplitude) pairs; typically
    the sampled main-lobe directions of each Eve with its estimated gain.
    """
    if channels.ndim != 2 or channels.shape[1] < 1:
        raise ValueError("need at least one user channel (column)")
    evals = list(eve_evaluations)
    if not evals:
        raise ValueError("need at least one Eve evaluation point")
    sinr = cu_sinr_all(design, channels, noise_var_c)
    snr_e = np.array([eve_snr(design, ang, amp, noise_var_0) for ang, amp in evals])
    rate_cu = np.log2(1 + sinr)
    rate_eve = np.log2(1 + snr_e)
    sr = max(0.0, float(rate_cu.min() - rate_eve.max()))
    return SecrecyReport(sinr, snr_e, rate_cu, rate_eve, sr)


def isotropic_an_projector(H: np.ndarray) -> np.ndarray:
    """Orthogonal-complement projector of the downlink mixing matrix.

    ``H`` is I x n_tx with rows h_i^H, so V = I - H^H (H H^H)^-1 H nulls the
    AN at every user: h_i^H V = 0.
    """
    H = np.asarray(H, complex)
    I_users, n = H.shape
    gram = H @ H.conj().T
    if np.linalg.cond(gram) > 1e10:
        raise ProjectorDegenerateError("channel matrix is (numerically) rank deficient")
    V = np.eye(n) - H.conj().T @ np.linalg.solve(gram, H)
    return (V + V.conj().T) / 2


def _rate(x: float) -> float:
    return float(np.log2(1 + x))


def benchmark_isotropic_sr(
    channels: np.ndarray,
    power_budget: float,
    eve_gain: float,
    noise_var_c: float,
    noise_var_0: float,
    mode: str = "blind",
) -> float:
    """Best secrecy rate of the omnidirectional null-space-AN benchmarks.

    The total covariance is pinned to (P0/n_tx) I. In ``blind`` mode the
    colored-noise covariance is the identity (no Eve knowledge); in
    ``eve_aware`` mode it is optimized against an isotropic Eve second-order
    model E{g g^H} = eve_gain * I.

    ``channels`` is n_tx x I with user channels as columns.
    """
    channels = np.asarray(channels, complex)
    n, I_users = channels.shape
    if power_budget <= 0:
        raise ValueError("power budget must be positive")
    V = isotropic_an_projector(channels.conj().T)
    h_outer = [np.outer(channels[:, i], channels[:, i].conj()) for i in range(I_users)]
    p_elem = power_budget / n
    if p_elem < 1.0 and mode == "blind":
        raise InfeasibleProblemError(
            "per-element power below the unit AN floor of the blind benchmark"
        )
    scale = power_budget  # work in trace==1 units
    sc = noise_var_c / scale

    z_cap = 1.0 + power_budget * float(np.max(np.linalg.norm(channels, axis=0) ** 2)) / noise_var_c
    if mode == "blind":
        m0 = (p_elem * np.eye(n) - V) / scale
        W = [cp.Variable((n, n), hermitian=True) for _ in range(I_users)]
        S, D = sinr_terms(W, None, h_outer, sc)
        cons = [w >> 0 for w in W] + [sum(W) == m0]
        sub = FpSubproblem(cons, S, D, I_users, z_scale=z_cap)
        y0 = np.ones(I_users)
        status, trace, _ = fp_loop(sub, 1.0, y0)
        if status in INFEASIBLE_STATUSES:
            raise InfeasibleProblemError("blind benchmark infeasible", status=status)
        if status not in USABLE_STATUSES or not trace:
            raise OptimizationFailureError("blind benchmark solve failed", status=status)
        sinr_min = max(sub.current_z() - 1.0, 0.0)
        p_w = power_budget - (n - I_users)  # AN trace is tr(V) = n - I
        snr_e = eve_gain * p_w / (eve_gain * (n - I_users) + noise_var_0)
        return max(0.0, _rate(sinr_min) - _rate(snr_e))

    if mode != "eve_aware":
        raise ValueError(f"unknown benchmark mode {mode!r}")

    W = [cp.Variable((n, n), hermitian=True) for _ in range(I_users)]
    Rn = cp.Variable((n, n), hermitian=True)
    an_expr = V @ Rn @ V.conj().T
    S, D = sinr_terms(W, an_expr, h_outer, sc)
    p_c = cp.Parameter(nonneg=True)
    p_1mc = cp.Parameter(nonneg=True)
    tr_w = sum(cp.real(cp.trace(w)) for w in W)
    tr_an = cp.real(cp.trace(an_expr))
    cons = [w >> 0 for w in W] + [Rn >> 0, sum(W) + an_expr == p_elem / scale * np.eye(n)]
    cons += [p_c * eve_gain * scale * tr_w
             <= p_1mc * (eve_gain * scale * tr_an + noise_var_0)]
    sub = FpSubproblem(cons, S, D, I_users, z_scale=z_cap)

    lo, hi = c_interval(np.linalg.norm(channels, axis=0) ** 2, power_budget)
    state = {"y": np.ones(I_users)}

    def objective(c):
        p_c.value = c
        p_1mc.value = 1.0 - c
        status, trace, y = fp_loop(sub, c, state["y"])
        if status in INFEASIBLE_STATUSES or not trace:
            return -np.inf
        state["y"] = y
        return sub.current_z()

    _, best, _ = golden_section_max(objective, lo, hi, tol=1e-3 * (hi - lo))
    if not np.isfinite(best):
        raise InfeasibleProblemError("eve-aware benchmark infeasible at every c")
    return max(0.0, float(np.log2(max(best, 1e-300))))


def sr_upper_bound(
    channels: np.ndarray,
    eve_angles: np.ndarray,
    eve_amplitudes: np.ndarray,
    power_budget: float,
    noise_var_c: float,
    noise_var_0: float,
) -> float:
    """Secrecy-rate ceiling under the power budget alone.

    Solves the max-min secrecy problem through the SINR-level relaxation: a
    golden search over c with, at each c, the quadratic-transform inner
    problem whose optimum z satisfies log2(z) = achievable secrecy rate.
    ``channels`` is n_tx x I with user channels as columns.
    """
    channels = np.asarray(channels, complex)
    n, I_users = channels.shape
    eve_angles = np.atleast_1d(np.asarray(eve_angles, float))
    eve_amplitudes = np.atleast_1d(np.asarray(eve_amplitudes, complex))
    if power_budget <= 0:
        raise ValueError("power budget must be positive")
    h_outer = [np.outer(channels[:, i], channels[:, i].conj()) for i in range(I_users)]
    scale = power_budget
    sc = noise_var_c / scale

    z_cap = 1.0 + power_budget * float(np.max(np.linalg.norm(channels, axis=0) ** 2)) / noise_var_c
    W = [cp.Variable((n, n), hermitian=True) for _ in range(I_users)]
    Rn = cp.Variable((n, n), hermitian=True)
    S, D = sinr_terms(W, Rn, h_outer, sc)
    p_c = cp.Parameter(nonneg=True)
    p_1mc = cp.Parameter(nonneg=True)
    cons = [w >> 0 for w in W] + [Rn >> 0]
    cons += [sum(cp.real(cp.trace(w)) for w in W) + cp.real(cp.trace(Rn)) == 1.0]
    for ang, amp in zip(eve_angles, eve_amplitudes):
        a = steering(ang, n)
        C = np.outer(a, a.conj())
        g2 = abs(amp) ** 2
        pat_w = sum(cp.real(cp.trace(C @ w)) for w in W)
        pat_n = cp.real(cp.trace(C @ Rn))
        cons += [p_c * g2 * scale * pat_w <= p_1mc * (g2 * scale * pat_n + noise_var_0)]
    sub = FpSubproblem(cons, S, D, I_users, z_scale=z_cap)

    lo, hi = c_interval(np.linalg.norm(channels, axis=0) ** 2, power_budget)
    state = {"y": np.ones(I_users)}

    def objective(c):
        p_c.value = c
        p_1mc.value = 1.0 - c
        status, trace, y = fp_loop(sub, c, state["y"])
        if status in INFEASIBLE_STATUSES or not trace:
            return -np.inf
        state["y"] = y
        return sub.current_z()

    _, best, _ = golden_section_max(objective, lo, hi, tol=1e-3 * (hi - lo))
    if not np.isfinite(best):
        raise InfeasibleProblemError("secrecy bound infeasible at every c")
    return max(0.0, float(np.log2(max(best, 1e-300))))
