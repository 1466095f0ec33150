"""Fisher information of the echo model, CRB extraction, and the
determinant upper bound used to normalize the weighted objective.

The 3K x 3K Fisher matrix is ordered (theta_1..theta_K, Re beta_1..K,
Im beta_1..K). It is linear in the transmit covariance, which is what lets
the determinant bound and the weighted problem treat it as an affine
expression of the design variables.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .arrays import ArrayGeometry, steering_derivative_matrix, steering_matrix
from .errors import EstimationDegenerateError, InvalidCovarianceError, OptimizationFailureError

COND_LIMIT = 1e12


@dataclass(frozen=True)
class EveParameters:
    """Point parameters the radar side estimates: angles and complex amplitudes."""

    angles: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.angles, float))
        b = np.atleast_1d(np.asarray(self.amplitudes, complex))
        if a.size != b.size:
            raise ValueError("angles and amplitudes must have equal length")
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "amplitudes", b)

    @property
    def k(self) -> int:
        return self.angles.size


@dataclass(frozen=True)
class FimBundle:
    """Assembled Fisher matrix with its complex blocks."""

    j_matrix: np.ndarray
    j11: np.ndarray
    j12: np.ndarray
    j22: np.ndarray
    frame_length: int
    noise_var: float
    status: str = "ok"

    @property
    def k(self) -> int:
        return self.j11.shape[0]


@dataclass(frozen=True)
class CrbReport:
    """Diagonal Cramer-Rao bounds: angle block and summed amplitude blocks."""

    crb_theta: np.ndarray
    crb_beta: np.ndarray

    @property
    def root_crb_theta(self) -> np.ndarray:
        return np.sqrt(self.crb_theta)

    @property
    def root_crb_theta_deg(self) -> np.ndarray:
        return np.rad2deg(np.sqrt(self.crb_theta))

    @property
    def root_crb_beta(self) -> np.ndarray:
        return np.sqrt(self.crb_beta)


def _gram_factors(eves: EveParameters, geometry: ArrayGeometry, noise_var: float):
    A = steering_matrix(eves.angles, geometry.n_rx)
    B = steering_matrix(eves.angles, geometry.n_tx)
    Ad = steering_derivative_matrix(eves.angles, geometry.n_rx)
    Bd = steering_derivative_matrix(eves.angles, geometry.n_tx)
    qi = 1.0 / noise_var
    return {
        "B": B, "Bd": Bd,
        "dQd": (Ad.conj().T @ Ad) * qi,
        "dQa": (Ad.conj().T @ A) * qi,
        "aQd": (A.conj().T @ Ad) * qi,
        "aQa": (A.conj().T @ A) * qi,
        "Lam": np.diag(eves.amplitudes),
    }


def _blocks(f, rx_conj, mul):
    """J11/J12/J22 for a given conjugated transmit covariance.

    ``mul`` is the elementwise product of the backing library, so the same
    formula serves numpy matrices and cvxpy affine expressions.
    """
    B, Bd, Lam = f["B"], f["Bd"], f["Lam"]
    g = lambda X1, X2: X1.conj().T @ rx_conj @ X2
    j11 = (mul(f["dQd"], Lam.conj().T @ g(B, B) @ Lam)
           + mul(f["dQa"], Lam.conj().T @ g(B, Bd) @ Lam)
           + mul(f["aQd"], Lam.conj().T @ g(Bd, B) @ Lam)
           + mul(f["aQa"], Lam.conj().T @ g(Bd, Bd) @ Lam))
    j12 = mul(f["dQa"], Lam.conj().T @ g(B, B)) + mul(f["aQa"], Lam.conj().T @ g(Bd, B))
    j22 = mul(f["aQa"], g(B, B))
    return j11, j12, j22


def build_fim(
    eves: EveParameters,
    r_x: np.ndarray,
    noise_var: float,
    frame_length: int,
    geometry: ArrayGeometry,
) -> FimBundle:
    """Assemble the Fisher matrix of the echo block for given point targets."""
    if eves.k < 1:
        raise ValueError("need at least one target")
    if np.any(np.abs(eves.amplitudes) == 0):
        raise ValueError("all target amplitudes must be nonzero")
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    r_x = np.asarray(r_x, complex)
    if np.abs(r_x - r_x.conj().T).max() > 1e-6 * max(1.0, np.abs(r_x).max()):
        raise InvalidCovarianceError("transmit covariance must be Hermitian")
    f = _gram_factors(eves, geometry, noise_var)
    j11, j12, j22 = _blocks(f, r_x.conj(), np.multiply)
    J = 2 * frame_length * np.block([
        [j11.real, j12.real, -j12.imag],
        [j12.real.T, j22.real, -j22.imag],
        [-j12.imag.T, -j22.imag.T, j22.real],
    ])
    J = (J + J.T) / 2
    status = "ok"
    cond = np.linalg.cond(J)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        status = "near_singular"
        warnings.warn(
            f"Fisher matrix condition number {cond:.3e} exceeds {COND_LIMIT:.0e}",
            RuntimeWarning,
            stacklevel=2,
        )
    return FimBundle(J, j11, j12, j22, frame_length, float(noise_var), status)


def fim_expression(
    eves: EveParameters,
    rx_expr,
    noise_var: float,
    frame_length: int,
    geometry: ArrayGeometry,
):
    """Fisher matrix as a cvxpy affine expression of a transmit-covariance variable."""
    f = _gram_factors(eves, geometry, noise_var)
    j11, j12, j22 = _blocks(f, cp.conj(rx_expr), cp.multiply)
    re, im = cp.real, cp.imag
    return 2 * frame_length * cp.bmat([
        [re(j11), re(j12), -im(j12)],
        [re(j12).T, re(j22), -im(j22)],
        [-im(j12).T, -im(j22).T, re(j22)],
    ])


def crb_from_fim(fim: FimBundle) -> CrbReport:
    """Invert the Fisher matrix and read off the parameter-block diagonals."""
    J = fim.j_matrix
    cond = np.linalg.cond(J)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise EstimationDegenerateError(
            f"Fisher matrix condition number {cond:.3e} exceeds {COND_LIMIT:.0e}",
            condition_number=cond,
        )
    k = fim.k
    Ji = np.linalg.inv(J)
    Ji = (Ji + Ji.T) / 2
    d = np.diag(Ji)
    return CrbReport(crb_theta=d[:k].copy(), crb_beta=(d[k:2 * k] + d[2 * k:]).copy())


def fim_det_upper_bound(
    eves: EveParameters,
    geometry: ArrayGeometry,
    noise_var: float,
    frame_length: int,
    power_budget: float,
    extra_pattern_constraints=None,
    solver_kwargs: dict | None = None,
):
    """Maximize |J| over PSD transmit covariances with trace = power_budget.

    The determinant depends on the design only through R_X, so the search
    runs over a single covariance variable; the returned design carries the
    optimum as AN covariance with zero data beams. ``extra_pattern_constraints``
    optionally receives the (normalized) covariance variable and returns
    additional cvxpy constraints, used for cross-checks against the weighted
    problem.

    Returns (det_ub, TransmitDesign).
    """
    from .security import TransmitDesign  # local import avoids a module cycle

    if power_budget <= 0:
        raise ValueError("power budget must be positive")
    n = geometry.n_tx
    R = cp.Variable((n, n), hermitian=True)
    Jx = fim_expression(eves, R * power_budget, noise_var, frame_length, geometry)
    cons = [R >> 0, cp.real(cp.trace(R)) == 1.0]
    if extra_pattern_constraints is not None:
        cons += extra_pattern_constraints(R)
    prob = cp.Problem(cp.Maximize(cp.log_det(Jx)), cons)
    from .conic import solve_with_fallback

    status = solve_with_fallback(prob, **(solver_kwargs or {}))
    if R.value is None:
        raise OptimizationFailureError(
            f"determinant bound solve failed with status {status}", status=status
        )
    rx = power_budget * (R.value + R.value.conj().T) / 2
    design = TransmitDesign(
        w_tilde=[np.zeros((n, n), complex) for _ in range(0)],
        r_n=rx,
    )
    det_ub = float(np.linalg.det(
        build_fim(eves, design.r_x, noise_var, frame_length, geometry).j_matrix
    ))
    return det_ub, design
