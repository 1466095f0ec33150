"""Eavesdropper estimation from the omnidirectional probe.

Direction finding runs on the matched-filtered virtual array: averaging the
per-element matched-filter output along constant transmit-minus-receive
index lags yields a (n_tx + n_rx - 1)-element virtual ULA profile, and a
forward-backward smoothed Capon spectrum on that profile resolves echoes
that are strongly correlated through the shared probing waveform. The plain
minimum-variance spectrum on the receive-side sample covariance is also
provided for covariance-only use.

Amplitudes come from the approximate-ML closed form, evaluated with the
conjugated receive signature so the estimator inverts the echo model
exactly on noiseless data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .arrays import EchoBlock, steering_matrix
from .errors import DetectionFailureError, IllConditionedEstimateError

HALF_PI = np.pi / 2
DEFAULT_SUBAPERTURE = 12
DEFAULT_MASK_RADIUS = np.deg2rad(2.0)


@dataclass(frozen=True)
class SpatialSpectrum:
    """Spectrum values over a strictly increasing angle grid (radians)."""

    grid: np.ndarray
    values: np.ndarray
    excluded_angles: tuple = ()
    mask_radius: float = DEFAULT_MASK_RADIUS

    def __post_init__(self):
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("spectrum values must be finite and nonnegative")

    def mask(self) -> np.ndarray:
        keep = np.ones(self.grid.size, bool)
        for ang in self.excluded_angles:
            keep &= np.abs(self.grid - ang) > self.mask_radius
        return keep


@dataclass(frozen=True)
class EveEstimate:
    """Estimated directions and gains with their 3-sigma angular intervals."""

    angles: np.ndarray
    amplitudes: np.ndarray
    root_crb_theta: np.ndarray
    intervals: tuple

    def __post_init__(self):
        order = np.argsort(self.angles)
        ang = np.asarray(self.angles, float)[order]
        if ang.size > 1 and np.min(np.diff(ang)) <= 0:
            raise ValueError("estimated angles must be pairwise distinct")
        object.__setattr__(self, "angles", ang)
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, complex)[order])
        object.__setattr__(self, "root_crb_theta", np.asarray(self.root_crb_theta, float)[order])
        object.__setattr__(self, "intervals", tuple(self.intervals[i] for i in order))

    @property
    def k(self) -> int:
        return self.angles.size

    def interval_widths(self) -> np.ndarray:
        return np.array([hi - lo for lo, hi in self.intervals])


def sample_covariance(echo: EchoBlock) -> np.ndarray:
    """Receive-side sample covariance (1/L) Y Y^H."""
    Y = echo.samples
    R = Y @ Y.conj().T / echo.frame_length
    return (R + R.conj().T) / 2


def capon_spectrum(
    sample_cov: np.ndarray,
    grid: np.ndarray,
    excluded_angles=(),
    mask_radius: float = DEFAULT_MASK_RADIUS,
) -> SpatialSpectrum:
    """Minimum-variance spectrum 1 / (s^H R^-1 s) on the receive covariance.

    The scan signature is the conjugated receive steering vector, matching
    the echo model. Diagonal loading 1e-6 * tr(R)/n keeps the inverse sane.
    """
    n = sample_cov.shape[0]
    grid = np.asarray(grid, float)
    eps = 1e-6 * float(np.trace(sample_cov).real) / n
    Ri = np.linalg.inv(sample_cov + eps * np.eye(n))
    A = steering_matrix(grid, n).conj()
    vals = 1.0 / np.einsum("ij,ik,kj->j", A.conj(), Ri, A).real
    return SpatialSpectrum(grid, np.maximum(vals, 0.0), tuple(excluded_angles), mask_radius)


def matched_filter_profile(echo: EchoBlock, waveform: np.ndarray) -> np.ndarray:
    """Virtual-ULA lag profile of the matched-filter output.

    Entry d (d = 0..n_tx+n_rx-2) averages the waveform-whitened matched
    filter over all element pairs with tx index minus rx index equal to
    d - (n_rx - 1); a reflector at angle theta contributes
    beta * exp(j*pi*(d - n_rx + 1)*sin(theta)).
    """
    Y = echo.samples
    n_tx, L = waveform.shape
    n_rx = Y.shape[0]
    rx_w = waveform @ waveform.conj().T / L
    mf = (Y @ waveform.conj().T / L) @ np.linalg.inv(rx_w)
    n_lag = n_tx + n_rx - 1
    acc = np.zeros(n_lag, complex)
    cnt = np.zeros(n_lag)
    idx = np.arange(n_tx)[None, :] - np.arange(n_rx)[:, None] + n_rx - 1
    np.add.at(acc, idx.ravel(), mf.ravel())
    np.add.at(cnt, idx.ravel(), 1.0)
    return acc / cnt


def probe_spectrum(
    echo: EchoBlock,
    waveform: np.ndarray,
    grid: np.ndarray,
    excluded_angles=(),
    mask_radius: float = DEFAULT_MASK_RADIUS,
    subaperture: int = DEFAULT_SUBAPERTURE,
) -> SpatialSpectrum:
    """Forward-backward smoothed Capon spectrum on the virtual lag profile."""
    prof = matched_filter_profile(echo, waveform)
    n = prof.size
    sub = min(subaperture, n - 1)
    n_snap = n - sub + 1
    snaps = np.column_stack([prof[i:i + sub] for i in range(n_snap)])
    R = snaps @ snaps.conj().T / n_snap
    Jx = np.eye(sub)[::-1]
    R = 0.5 * (R + Jx @ R.conj() @ Jx)
    eps = 1e-6 * float(np.trace(R).real) / sub
    Ri = np.linalg.inv(R + eps * np.eye(sub))
    grid = np.asarray(grid, float)
    A = np.exp(1j * np.pi * np.arange(sub)[:, None] * np.sin(grid)[None, :])
    vals = 1.0 / np.einsum("ij,ik,kj->j", A.conj(), Ri, A).real
    return SpatialSpectrum(grid, np.maximum(vals, 0.0), tuple(excluded_angles), mask_radius)


def _local_maxima(values: np.ndarray, keep: np.ndarray):
    v = np.where(keep, values, -np.inf)
    idx = []
    for i in range(1, v.size - 1):
        if np.isfinite(v[i]) and v[i] > v[i - 1] and v[i] >= v[i + 1]:
            idx.append(i)
    return idx


def _parabolic_refine(grid, values, i):
    h = grid[1] - grid[0]
    den = values[i - 1] - 2 * values[i] + values[i + 1]
    if den >= 0:
        return grid[i]
    off = 0.5 * h * (values[i - 1] - values[i + 1]) / den
    return grid[i] + float(np.clip(off, -h / 2, h / 2))


def peaks_from_spectrum(spectrum: SpatialSpectrum, k_expected: int, refine: bool = True) -> np.ndarray:
    """The k largest masked local maxima, parabolic-refined, sorted ascending."""
    if k_expected < 1:
        raise ValueError("k_expected must be >= 1")
    keep = spectrum.mask()
    idx = _local_maxima(spectrum.values, keep)
    if len(idx) < k_expected:
        raise DetectionFailureError(
            f"found {len(idx)} spectral peaks, expected {k_expected}"
        )
    idx.sort(key=lambda i: (-spectrum.values[i], spectrum.grid[i]))
    chosen = idx[:k_expected]
    out = []
    for i in chosen:
        if refine and keep[i - 1] and keep[i + 1]:
            out.append(_parabolic_refine(spectrum.grid, spectrum.values, i))
        else:
            out.append(float(spectrum.grid[i]))
    return np.sort(np.array(out))


def capon_peaks(
    sample_cov: np.ndarray,
    grid: np.ndarray,
    known_cu_angles,
    k_expected: int,
    mask_radius: float = DEFAULT_MASK_RADIUS,
    refine: bool = True,
) -> np.ndarray:
    """Peak directions of the minimum-variance spectrum after CU masking."""
    spec = capon_spectrum(sample_cov, grid, tuple(known_cu_angles), mask_radius)
    return peaks_from_spectrum(spec, k_expected, refine=refine)


def aml_amplitudes(Y: np.ndarray, X: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """Closed-form approximate-ML amplitudes at known/estimated directions.

    Evaluates the AML solution with T = L*R_hat minus the waveform-projected
    signal part; T is diagonally loaded relative to the data power because it
    collapses to zero on noiseless echoes (the load cancels from the final
    expression in that limit).
    """
    angles = np.atleast_1d(np.asarray(angles, float))
    if angles.size > 1 and np.min(np.diff(np.sort(angles))) <= 0:
        raise ValueError("angles must be pairwise distinct")
    n_tx, L = X.shape
    n_rx = Y.shape[0]
    A = steering_matrix(angles, n_rx).conj()  # receive signature of the echo model
    B = steering_matrix(angles, n_tx)
    rx_w = X @ X.conj().T / L
    r_hat = Y @ Y.conj().T / L
    C = B.T @ rx_w @ B.conj()
    YXB = Y @ X.conj().T @ B.conj()
    T = L * r_hat - (1.0 / L) * YXB @ np.linalg.solve(C, YXB.conj().T)
    load = 1e-8 * float(np.trace(Y @ Y.conj().T).real) / n_rx
    T = T + load * np.eye(n_rx)
    Ti_A = np.linalg.solve(T, A)
    bracket = (A.conj().T @ Ti_A) * (B.conj().T @ rx_w.conj() @ B)
    if np.linalg.cond(bracket) > 1e12:
        raise IllConditionedEstimateError(
            "amplitude normal matrix is singular (angles too close?)"
        )
    rhs = np.diag(A.conj().T @ np.linalg.solve(T, Y) @ X.conj().T @ B.conj())
    return (1.0 / L) * np.linalg.solve(bracket, rhs)


def uncertainty_intervals(angles: np.ndarray, crb_theta: np.ndarray):
    """3-sigma angular intervals, clipped to the visible region."""
    angles = np.atleast_1d(np.asarray(angles, float))
    crb_theta = np.atleast_1d(np.asarray(crb_theta, float))
    if np.any(crb_theta <= 0):
        raise ValueError("crb_theta entries must be positive")
    out = []
    for ang, crb in zip(angles, crb_theta):
        half = 3.0 * np.sqrt(crb)
        out.append((max(ang - half, -HALF_PI), min(ang + half, HALF_PI)))
    return out


def estimate_directions_amplitudes(
    echo: EchoBlock,
    waveform: np.ndarray,
    k_expected: int,
    known_cu_angles=(),
    grid_step: float = np.deg2rad(0.5),
    mask_radius: float = DEFAULT_MASK_RADIUS,
):
    """Full CAML stage: smoothed-Capon directions, then AML amplitudes.

    Returns (angles, amplitudes, spectrum).
    """
    grid = np.arange(-HALF_PI, HALF_PI + grid_step / 2, grid_step)
    spec = probe_spectrum(echo, waveform, grid, tuple(known_cu_angles), mask_radius)
    angles = peaks_from_spectrum(spec, k_expected)
    amps = aml_amplitudes(echo.samples, waveform, angles)
    return angles, amps, spec


@dataclass(frozen=True)
class RmseRow:
    snr_db: float
    rmse: float
    root_crb: float
    n_excluded: int
    n_used: int


def rmse_sweep(scenario, snr_grid_db, trials: int, rng=None) -> list:
    """Monte Carlo angle RMSE of the probe estimator against the omni CRB.

    Per SNR point the radar noise follows the echo-SNR definition with the
    first configured Eve as reference, the probe repeats ``trials`` times
    with independent derived seeds, and the root-CRB is evaluated at the
    true Eve parameters under the omnidirectional design. Reflectors are
    the configured eavesdroppers only, so the bound and the simulation
    share one signal model; detection failures are excluded per trial and
    counted.
    """
    from .arrays import orthogonal_waveform, simulate_echo
    from .scenario import STREAM_TRIALS
    from .sensing import build_fim, crb_from_fim

    if trials < 50:
        raise ValueError(f"trials={trials}: need at least 50 for a stable RMSE")
    snr_grid_db = list(snr_grid_db)
    cfg = scenario.config
    n_tx, n_rx = scenario.geometry.n_tx, scenario.geometry.n_rx
    L = scenario.frame_length
    p0 = scenario.power_budget
    beta_ref = abs(scenario.eves.amplitudes[0])
    omni_rx = p0 / n_tx * np.eye(n_tx)
    truth = np.sort(scenario.eves.angles)
    grid_step = np.deg2rad(cfg.grid_step_deg)
    spawned = None if rng is None else iter(rng.spawn(len(snr_grid_db) * trials))
    rows = []
    for i_snr, snr_db in enumerate(snr_grid_db):
        noise_var = beta_ref ** 2 * L * p0 / 10.0 ** (snr_db / 10.0)
        fim = build_fim(scenario.eves, omni_rx, noise_var, L, scenario.geometry)
        crb = crb_from_fim(fim)
        root_crb = float(np.sqrt(np.mean(crb.crb_theta)))
        sq_errors = []
        excluded = 0
        for t in range(trials):
            rng_t = scenario.rng(STREAM_TRIALS, i_snr, t) if spawned is None else next(spawned)
            X = orthogonal_waveform(rng_t, n_tx, L, p0)
            echo = simulate_echo(rng_t, scenario.eves.angles, scenario.eves.amplitudes,
                                 X, n_rx, noise_var)
            try:
                angles, _, _ = estimate_directions_amplitudes(
                    echo, X, scenario.eves.k,
                    known_cu_angles=scenario.cu_angles,
                    grid_step=grid_step,
                    mask_radius=np.deg2rad(cfg.cu_mask_radius_deg),
                )
            except (DetectionFailureError, IllConditionedEstimateError):
                excluded += 1
                continue
            sq_errors.extend((np.sort(angles) - truth) ** 2)
        used = trials - excluded
        rmse = float(np.sqrt(np.mean(sq_errors))) if sq_errors else float("nan")
        rows.append(RmseRow(float(snr_db), rmse, root_crb, excluded, used))
    return rows
