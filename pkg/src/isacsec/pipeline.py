"""Closed-loop probing and optimization: omnidirectional probe, CAML
estimation, CRB-driven interval update, weighted optimization, repeat until
both the CRB and the secrecy rate settle.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .arrays import EchoBlock, orthogonal_waveform, simulate_echo
from .errors import InfeasibleProblemError
from .estimator import (
    EveEstimate,
    estimate_directions_amplitudes,
    uncertainty_intervals,
)
from .optimizer import (
    WeightedContext,
    build_constraints,
    golden_search_c,
)
from .scenario import STREAM_PROBE, Scenario
from .security import TransmitDesign
from .sensing import EveParameters, build_fim, crb_from_fim, fim_det_upper_bound
from .security import sr_upper_bound

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProbeResult:
    echo: EchoBlock
    waveform: np.ndarray
    estimate: EveEstimate
    omni_design: TransmitDesign


@dataclass(frozen=True)
class IterationRecord:
    """One row of the Algorithm-1 trace.

    ``main_lobe_widths`` are the lobe widths used by this iteration's
    optimization (the previous record's intervals); ``intervals`` are the
    updated 3-sigma intervals produced by this iteration's CRB.
    """

    index: int
    intervals: tuple
    root_crb_theta: np.ndarray
    root_crb_beta: np.ndarray
    secrecy_rate: float
    objective: float
    solver_status: str
    main_lobe_widths: np.ndarray


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)
    status: str = "running"
    det_ub: float = float("nan")
    sr_ub: float = float("nan")
    estimate: EveEstimate | None = None
    designs: list = field(default_factory=list)

    @property
    def n_iterations(self) -> int:
        """Number of completed weighted-optimization rounds."""
        return max(len(self.records) - 1, 0)

    def final_secrecy_rate(self) -> float:
        return self.records[-1].secrecy_rate

    def final_root_crb_theta(self) -> np.ndarray:
        return self.records[-1].root_crb_theta


def omni_probe(scenario: Scenario, rng: np.random.Generator | None = None) -> ProbeResult:
    """Probe with an exactly omnidirectional block and estimate the Eves.

    The probing waveform is a scaled partial unitary, so its sample
    covariance equals (P0/n_tx) I exactly and the initial CRB evaluates the
    true omnidirectional design.
    """
    cfg = scenario.config
    rng = rng or scenario.rng(STREAM_PROBE)
    n_tx = scenario.geometry.n_tx
    waveform = orthogonal_waveform(rng, n_tx, scenario.frame_length, scenario.power_budget)
    echo = simulate_echo(
        rng,
        scenario.reflector_angles(),
        scenario.reflector_amplitudes(),
        waveform,
        scenario.geometry.n_rx,
        scenario.echo_noise,
    )
    angles, amps, _ = estimate_directions_amplitudes(
        echo,
        waveform,
        k_expected=scenario.eves.k,
        known_cu_angles=scenario.cu_angles,
        grid_step=np.deg2rad(cfg.grid_step_deg),
        mask_radius=np.deg2rad(cfg.cu_mask_radius_deg),
    )
    omni_rx = scenario.power_budget / n_tx * np.eye(n_tx)
    omni_design = TransmitDesign(w_tilde=[], r_n=omni_rx)
    fim = build_fim(
        EveParameters(angles, amps), omni_rx, scenario.echo_noise,
        scenario.frame_length, scenario.geometry,
    )
    crb = crb_from_fim(fim)
    estimate = EveEstimate(
        angles=angles,
        amplitudes=amps,
        root_crb_theta=crb.root_crb_theta,
        intervals=uncertainty_intervals(angles, crb.crb_theta),
    )
    return ProbeResult(echo, waveform, estimate, omni_design)


def run_algorithm1(
    scenario: Scenario,
    rho: float | None = None,
    max_iter: int = 10,
    tol: float = 1e-2,
    rng: np.random.Generator | None = None,
    keep_designs: bool = False,
) -> IterationTrace:
    """Iterative co-optimization of estimation accuracy and secrecy rate.

    Each round turns the current 3-sigma intervals into main-lobe
    constraints, runs the golden search over c with the FP inner loop,
    recomputes the CRB at the estimated directions under the new design,
    and shrinks the intervals. Stops when the relative changes of both the
    angle CRB and the secrecy rate fall below ``tol``.
    """
    cfg = scenario.config
    if rho is None:
        rho = cfg.rho
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho={rho} outside [0, 1]")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")

    probe = omni_probe(scenario, rng=rng)
    est = probe.estimate
    estimates = EveParameters(est.angles, est.amplitudes)

    det_ub, _ = fim_det_upper_bound(
        estimates, scenario.geometry, scenario.echo_noise,
        scenario.frame_length, scenario.power_budget,
    )
    sr_ub = sr_upper_bound(
        scenario.channel_matrix, est.angles, est.amplitudes,
        scenario.power_budget, scenario.cu_noise, scenario.eve_noise,
    )
    log.info("normalizers: |J|_ub=%.4g, SR_ub=%.3f bit/s/Hz", det_ub, sr_ub)

    trace = IterationTrace(det_ub=det_ub, sr_ub=sr_ub, estimate=est)
    fim0 = build_fim(estimates, probe.omni_design.r_x, scenario.echo_noise,
                     scenario.frame_length, scenario.geometry)
    crb0 = crb_from_fim(fim0)
    trace.records.append(IterationRecord(
        index=0,
        intervals=tuple(est.intervals),
        root_crb_theta=crb0.root_crb_theta,
        root_crb_beta=crb0.root_crb_beta,
        secrecy_rate=0.0,
        objective=float("nan"),
        solver_status="probe",
        main_lobe_widths=np.full(est.k, np.nan),
    ))
    if keep_designs:
        trace.designs.append(probe.omni_design)

    intervals = list(est.intervals)
    prev_crb = crb0.root_crb_theta
    prev_sr = 0.0
    for r in range(1, max_iter + 1):
        constraints = build_constraints(
            centers=est.angles,
            intervals=intervals,
            ripple_alpha=cfg.ripple_alpha,
            gamma_s=cfg.gamma_s_mw,
            grid_step=np.deg2rad(cfg.grid_step_deg),
        )
        ctx = WeightedContext(
            channels=scenario.channel_matrix,
            estimates=estimates,
            geometry=scenario.geometry,
            frame_length=scenario.frame_length,
            power_budget=scenario.power_budget,
            noise_var_c=scenario.cu_noise,
            noise_var_0=scenario.eve_noise,
            noise_var_r=scenario.echo_noise,
            constraints=constraints,
            rho=rho,
            det_ub=det_ub,
            sr_ub=sr_ub,
        )
        try:
            sol = golden_search_c(ctx)
        except InfeasibleProblemError as exc:
            log.warning("iteration %d infeasible: %s", r, exc)
            trace.status = f"infeasible_at_iteration_{r}"
            return trace
        fim = build_fim(estimates, sol.design.r_x, scenario.echo_noise,
                        scenario.frame_length, scenario.geometry)
        crb = crb_from_fim(fim)
        intervals = uncertainty_intervals(est.angles, crb.crb_theta)
        trace.records.append(IterationRecord(
            index=r,
            intervals=tuple(intervals),
            root_crb_theta=crb.root_crb_theta,
            root_crb_beta=crb.root_crb_beta,
            secrecy_rate=sol.secrecy_rate,
            objective=sol.objective,
            solver_status=sol.solver_status,
            main_lobe_widths=constraints.lobe_widths(),
        ))
        if keep_designs:
            trace.designs.append(sol.design)
        d_crb = np.max(np.abs(crb.root_crb_theta - prev_crb)
                       / np.maximum(np.abs(prev_crb), 1e-12))
        d_sr = abs(sol.secrecy_rate - prev_sr) / max(abs(prev_sr), 1e-9)
        log.info("iter %d: SR=%.3f, rootCRB=%s deg, dCRB=%.3g, dSR=%.3g",
                 r, sol.secrecy_rate, np.round(np.rad2deg(crb.root_crb_theta), 3),
                 d_crb, d_sr)
        prev_crb = crb.root_crb_theta
        prev_sr = sol.secrecy_rate
        if d_crb < tol and d_sr < tol:
            trace.status = "converged"
            return trace
    trace.status = "max_iter"
    return trace
