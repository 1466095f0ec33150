"""Uniform-linear-array primitives: steering vectors, Rician channels,
transmit beampatterns and simulated radar echoes.

Angles are radians in [-pi/2, pi/2] everywhere in this module; powers are
linear milliwatts. The phase reference sits at the physical array center,
which is what makes a(theta)^H a'(theta) vanish identically for even
element counts.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AngleDomainError, InvalidCovarianceError, UnsupportedGeometryError

HALF_PI = np.pi / 2


@dataclass(frozen=True)
class ArrayGeometry:
    """Monostatic ULA pair with half-wavelength spacing.

    Element counts must be even: the center-referenced phase convention
    (and the derivative orthogonality it buys) assumes a symmetric array.
    """

    n_tx: int
    n_rx: int
    spacing: float = 0.5

    def __post_init__(self):
        for name, n in (("n_tx", self.n_tx), ("n_rx", self.n_rx)):
            if n < 2:
                raise UnsupportedGeometryError(f"{name}={n}: need at least 2 elements")
            if n % 2:
                raise UnsupportedGeometryError(
                    f"{name}={n}: odd element counts break the center-referenced "
                    "phase convention; use an even count"
                )


def _check_angle(angle: float) -> None:
    if not (-HALF_PI - 1e-12 <= angle <= HALF_PI + 1e-12):
        raise AngleDomainError(f"angle {angle} rad outside [-pi/2, pi/2]")


def _check_n(n: int) -> None:
    if n < 2 or n % 2:
        raise UnsupportedGeometryError(f"element count {n} must be even and >= 2")


def steering(angle: float, n: int) -> np.ndarray:
    """Center-referenced steering vector of an n-element half-wavelength ULA.

    Entry m (m = 0..n-1) is exp(j*(m - (n-1)/2)*pi*sin(angle)). The same
    formula serves the transmit and receive arrays with their own n.
    """
    _check_angle(angle)
    _check_n(n)
    m = np.arange(n) - (n - 1) / 2
    return np.exp(1j * np.pi * m * np.sin(angle))


def steering_derivative(angle: float, n: int) -> np.ndarray:
    """Entrywise derivative of :func:`steering` with respect to the angle."""
    _check_angle(angle)
    _check_n(n)
    m = np.arange(n) - (n - 1) / 2
    return 1j * np.pi * m * np.cos(angle) * steering(angle, n)


def steering_matrix(angles: np.ndarray, n: int) -> np.ndarray:
    """Stack steering vectors as columns, one per angle."""
    return np.column_stack([steering(t, n) for t in np.atleast_1d(angles)])


def steering_derivative_matrix(angles: np.ndarray, n: int) -> np.ndarray:
    return np.column_stack([steering_derivative(t, n) for t in np.atleast_1d(angles)])


@dataclass(frozen=True)
class RicianChannel:
    """One downlink user channel h = sqrt(v/(1+v)) h_los + sqrt(1/(1+v)) h_nlos.

    The stored pieces are sufficient to recompute ``vector`` bit-exactly:
    h_los = sqrt(n_tx) b(los_angle) and
    h_nlos = sqrt(n_tx / path_count) sum_l path_gains[l] b(path_angles[l]).
    """

    vector: np.ndarray
    rician_v: float
    los_angle: float
    path_count: int
    path_gains: np.ndarray
    path_angles: np.ndarray

    @property
    def n_tx(self) -> int:
        return self.vector.size

    def recompute(self) -> np.ndarray:
        """Rebuild the channel vector from the stored parts."""
        n = self.n_tx
        los = np.sqrt(n) * steering(self.los_angle, n)
        nlos = np.sqrt(n / self.path_count) * (
            steering_matrix(self.path_angles, n) @ self.path_gains
        )
        v = self.rician_v
        return np.sqrt(v / (1 + v)) * los + np.sqrt(1 / (1 + v)) * nlos


def sample_rician(
    rng: np.random.Generator,
    rician_v: float,
    los_angle: float,
    path_count: int,
    n_tx: int,
) -> RicianChannel:
    """Draw one Rician channel with CN(0,1) path gains and uniform path angles.

    Note the resulting normalization E{||h||^2} = n_tx^2: the line-of-sight
    part is sqrt(n_tx) times a unit-modulus-entry steering vector.
    """
    if rician_v < 0:
        raise ValueError(f"rician_v must be nonnegative, got {rician_v}")
    if path_count < 1:
        raise ValueError(f"path_count must be >= 1, got {path_count}")
    _check_angle(los_angle)
    gains = (rng.standard_normal(path_count) + 1j * rng.standard_normal(path_count)) / np.sqrt(2)
    angles = rng.uniform(-HALF_PI, HALF_PI, path_count)
    ch = RicianChannel(
        vector=np.zeros(n_tx, complex),
        rician_v=float(rician_v),
        los_angle=float(los_angle),
        path_count=int(path_count),
        path_gains=gains,
        path_angles=angles,
    )
    object.__setattr__(ch, "vector", ch.recompute())
    return ch


def check_psd(mat: np.ndarray, tol: float = 1e-8) -> None:
    """Raise if ``mat`` is visibly non-Hermitian or has an eigenvalue < -tol."""
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InvalidCovarianceError(f"expected square matrix, got shape {mat.shape}")
    if np.abs(mat - mat.conj().T).max() > 1e-6 * max(1.0, np.abs(mat).max()):
        raise InvalidCovarianceError("matrix is not Hermitian")
    w = np.linalg.eigvalsh((mat + mat.conj().T) / 2)
    if w.min() < -tol:
        raise InvalidCovarianceError(f"matrix has eigenvalue {w.min():.3e} < -{tol:.0e}")


def beampattern(r_x: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Transmit power pattern a^H(theta) R_X a(theta) over an angle grid."""
    check_psd(r_x)
    A = steering_matrix(np.asarray(angles, float), r_x.shape[0])
    return np.einsum("ij,ik,kj->j", A.conj(), r_x, A).real


@dataclass(frozen=True)
class EchoBlock:
    """Received radar echo Y (n_rx x L) with its noise level."""

    samples: np.ndarray
    frame_length: int
    noise_var: float

    def __post_init__(self):
        if self.samples.shape[1] != self.frame_length:
            raise ValueError("sample matrix width must equal frame_length")


def simulate_echo(
    rng: np.random.Generator,
    angles: np.ndarray,
    amplitudes: np.ndarray,
    waveform: np.ndarray,
    n_rx: int,
    noise_var: float,
) -> EchoBlock:
    """Generate Y = A*(theta) diag(beta) B^T(theta) X + Z with CN(0, noise_var) noise.

    ``angles``/``amplitudes`` list every reflector in view (Eves and, when
    modelled, reflecting users). Angles must be pairwise distinct.
    """
    angles = np.atleast_1d(np.asarray(angles, float))
    amplitudes = np.atleast_1d(np.asarray(amplitudes, complex))
    if angles.size != amplitudes.size:
        raise ValueError("angles and amplitudes must have equal length")
    if angles.size > 1 and np.min(np.diff(np.sort(angles))) <= 0:
        raise ValueError("reflector angles must be pairwise distinct")
    n_tx, L = waveform.shape
    A = steering_matrix(angles, n_rx)
    B = steering_matrix(angles, n_tx)
    Y = A.conj() @ np.diag(amplitudes) @ B.T @ waveform
    if noise_var > 0:
        Z = (rng.standard_normal((n_rx, L)) + 1j * rng.standard_normal((n_rx, L)))
        Y = Y + Z * np.sqrt(noise_var / 2)
    return EchoBlock(samples=Y, frame_length=L, noise_var=float(noise_var))


def orthogonal_waveform(rng: np.random.Generator, n_tx: int, L: int, power: float) -> np.ndarray:
    """Probing block X with sample covariance exactly (power/n_tx) I.

    Rows are the first n_tx rows of a random unitary, so X X^H / L hits the
    omnidirectional covariance exactly rather than only asymptotically.
    """
    if L < n_tx:
        raise ValueError(f"frame length {L} shorter than n_tx={n_tx}")
    Z = rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
    Q, _ = np.linalg.qr(Z)
    return Q[:n_tx, :] * np.sqrt(L * power / n_tx)
