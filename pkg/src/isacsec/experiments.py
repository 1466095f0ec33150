"""Seeded experiment runners emitting figure data as CSV.

Every runner is deterministic for a fixed (config, seed): random streams
derive from the scenario seed, the conic solvers are deterministic, and the
CSV writer formats floats with a fixed precision, so reruns are
byte-identical. Infeasible sweep points become rows with empty value cells
and a status column rather than errors.
"""
from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from .arrays import beampattern
from .config import ScenarioConfig, dbm_to_mw
from .errors import InfeasibleProblemError, NoSidelobeRegionError
from .estimator import rmse_sweep, uncertainty_intervals
from .optimizer import WeightedContext, build_constraints, golden_search_c
from .pipeline import omni_probe, run_algorithm1
from .scenario import Scenario, materialize
from .security import benchmark_isotropic_sr, sr_upper_bound
from .sensing import EveParameters, build_fim, crb_from_fim, fim_det_upper_bound

log = logging.getLogger(__name__)

FIGURE_IDS = (
    "beampattern", "rmse", "convergence", "sr_vs_width",
    "sr_vs_ncu", "tradeoff", "colocated",
)

PATTERN_GRID_DEG = np.arange(-90.0, 90.25, 0.5)

# Absolute sidelobe gap used by the width sweep: the budget-dependent
# infeasibility of wide lobes at low power only appears when the gap does
# not scale with the budget.
WIDTH_SWEEP_GAMMA_DBM = 30.0


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    x = float(x)
    if np.isnan(x):
        return ""
    return format(x, ".10g")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    return path


def power_db(linear_mw: np.ndarray) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(linear_mw, 1e-12))


def _blind_baseline(sc: Scenario) -> float:
    gain = float(np.max(np.abs(sc.eves.amplitudes)) ** 2)
    return benchmark_isotropic_sr(sc.channel_matrix, sc.power_budget, gain,
                                  sc.cu_noise, sc.eve_noise, mode="blind")


def _eve_aware_baseline(sc: Scenario) -> float:
    gain = float(np.max(np.abs(sc.eves.amplitudes)) ** 2)
    return benchmark_isotropic_sr(sc.channel_matrix, sc.power_budget, gain,
                                  sc.cu_noise, sc.eve_noise, mode="eve_aware")


class _BoundsCache:
    """Memoizes the per-scenario normalizers (they are sweep-invariant)."""

    def __init__(self):
        self._det = {}
        self._sr = {}

    def det_ub(self, sc: Scenario, estimates: EveParameters, key) -> float:
        if key not in self._det:
            self._det[key], _ = fim_det_upper_bound(
                estimates, sc.geometry, sc.echo_noise,
                sc.frame_length, sc.power_budget)
        return self._det[key]

    def sr_ub(self, sc: Scenario, estimates: EveParameters, key) -> float:
        if key not in self._sr:
            self._sr[key] = sr_upper_bound(
                sc.channel_matrix, estimates.angles, estimates.amplitudes,
                sc.power_budget, sc.cu_noise, sc.eve_noise)
        return self._sr[key]


def fixed_interval_solution(
    sc: Scenario,
    estimates: EveParameters,
    intervals,
    rho: float,
    det_ub: float,
    sr_ub_val: float,
    gamma_mw: float | None = None,
):
    """One weighted optimization round at externally fixed intervals.

    Returns (solution_or_None, status_string).
    """
    cfg = sc.config
    try:
        constraints = build_constraints(
            centers=estimates.angles,
            intervals=intervals,
            ripple_alpha=cfg.ripple_alpha,
            gamma_s=gamma_mw if gamma_mw is not None else cfg.gamma_s_mw,
            grid_step=np.deg2rad(cfg.grid_step_deg),
        )
    except NoSidelobeRegionError:
        return None, "no_sidelobe_region"
    ctx = WeightedContext(
        channels=sc.channel_matrix,
        estimates=estimates,
        geometry=sc.geometry,
        frame_length=sc.frame_length,
        power_budget=sc.power_budget,
        noise_var_c=sc.cu_noise,
        noise_var_0=sc.eve_noise,
        noise_var_r=sc.echo_noise,
        constraints=constraints,
        rho=rho,
        det_ub=det_ub,
        sr_ub=sr_ub_val,
    )
    try:
        sol = golden_search_c(ctx)
    except InfeasibleProblemError:
        return None, "infeasible"
    return sol, sol.solver_status


def _root_crb_deg(sc: Scenario, estimates: EveParameters, design) -> float:
    fim = build_fim(estimates, design.r_x, sc.echo_noise,
                    sc.frame_length, sc.geometry)
    crb = crb_from_fim(fim)
    return float(np.rad2deg(np.sqrt(np.mean(crb.crb_theta))))


def figure_beampattern(cfg: ScenarioConfig, out_dir, rho=None) -> list:
    """Per-iteration transmit beampatterns of the closed loop."""
    sc = materialize(cfg)
    trace = run_algorithm1(sc, rho=rho, keep_designs=True)
    rows = []
    for it, design in enumerate(trace.designs):
        pat = beampattern(design.r_x, np.deg2rad(PATTERN_GRID_DEG))
        for theta, p in zip(PATTERN_GRID_DEG, power_db(pat)):
            rows.append((it, theta, p))
    return [write_csv(Path(out_dir) / "beampattern.csv",
                      ("iter", "theta_deg", "power_db"), rows)]


def figure_rmse(cfg: ScenarioConfig, out_dir, trials: int = 200) -> list:
    sc = materialize(cfg)
    snr_grid = list(range(-20, 21, 5))
    rows = [
        (r.snr_db, np.rad2deg(r.rmse), np.rad2deg(r.root_crb), r.n_excluded)
        for r in rmse_sweep(sc, snr_grid, trials)
    ]
    return [write_csv(Path(out_dir) / "rmse.csv",
                      ("snr_db", "rmse_deg", "root_crb_deg", "n_excluded"), rows)]


def figure_convergence(cfg: ScenarioConfig, out_dir, rho=None) -> list:
    sc = materialize(cfg)
    trace = run_algorithm1(sc, rho=rho)
    baseline = _blind_baseline(sc)
    rows = []
    for rec in trace.records:
        rows.append((
            rec.index,
            float(np.mean(rec.root_crb_beta)),
            float(np.rad2deg(np.mean(rec.root_crb_theta))),
            rec.secrecy_rate,
            baseline,
        ))
    return [write_csv(Path(out_dir) / "convergence.csv",
                      ("iter", "root_crb_amp", "root_crb_theta_deg",
                       "secrecy_rate", "baseline_sr"), rows)]


def figure_sr_vs_width(cfg: ScenarioConfig, out_dir, budgets_dbm=(25.0, 30.0, 35.0),
                       widths_deg=(2.0, 4.0, 6.0, 8.0, 10.0), rho=None) -> list:
    """Secrecy rate against the fixed main-lobe width, one file per budget.

    The sidelobe gap is held at an absolute level across budgets unless the
    config pins one, which is what makes wide lobes infeasible at low power.
    """
    paths = []
    gamma_dbm = cfg.gamma_s_dbm if cfg.gamma_s_dbm is not None else WIDTH_SWEEP_GAMMA_DBM
    for p_dbm in budgets_dbm:
        sub = cfg.replace(power_budget_dbm=float(p_dbm))
        sc = materialize(sub)
        estimates = sc.eves
        cache = _BoundsCache()
        det_ub = cache.det_ub(sc, estimates, p_dbm)
        sr_ub_val = cache.sr_ub(sc, estimates, p_dbm)
        blind = _blind_baseline(sc)
        aware = _eve_aware_baseline(sc)
        rows = []
        for width in widths_deg:
            half = np.deg2rad(width) / 2
            intervals = [(a - half, a + half) for a in estimates.angles]
            sol, status = fixed_interval_solution(
                sc, estimates, intervals, rho if rho is not None else sub.rho,
                det_ub, sr_ub_val, gamma_mw=dbm_to_mw(gamma_dbm))
            sr = sol.secrecy_rate if sol is not None else None
            rows.append((width, sr, blind, aware, status))
        paths.append(write_csv(
            Path(out_dir) / f"sr_vs_width_p{int(round(p_dbm))}.csv",
            ("delta_theta_deg", "sr", "sr_isotropic", "sr_eve_aware", "status"),
            rows))
    return paths


CU_ANGLE_POOL = (40.0, 10.0, -30.0, 55.0, -55.0, 25.0, -70.0, 70.0)


def figure_sr_vs_ncu(cfg: ScenarioConfig, out_dir, budgets_dbm=(25.0, 35.0),
                     n_cu_range=(1, 2, 3, 4, 5, 6), width_deg: float = 4.0,
                     rho=None) -> list:
    """Secrecy rate against the number of served users, one file per budget."""
    from .config import CuConfig

    paths = []
    for p_dbm in budgets_dbm:
        rows = []
        for n_cu in n_cu_range:
            cus = tuple(CuConfig(CU_ANGLE_POOL[i % len(CU_ANGLE_POOL)],
                                 cfg.cus[0].rician_v, cfg.cus[0].path_count)
                        for i in range(n_cu))
            sub = cfg.replace(power_budget_dbm=float(p_dbm), cus=cus)
            sc = materialize(sub)
            estimates = sc.eves
            det_ub, _ = fim_det_upper_bound(
                estimates, sc.geometry, sc.echo_noise,
                sc.frame_length, sc.power_budget)
            sr_ub_val = sr_upper_bound(
                sc.channel_matrix, estimates.angles, estimates.amplitudes,
                sc.power_budget, sc.cu_noise, sc.eve_noise)
            half = np.deg2rad(width_deg) / 2
            intervals = [(a - half, a + half) for a in estimates.angles]
            sol, status = fixed_interval_solution(
                sc, estimates, intervals, rho if rho is not None else sub.rho,
                det_ub, sr_ub_val)
            rows.append((n_cu, sol.secrecy_rate if sol is not None else None, status))
        paths.append(write_csv(
            Path(out_dir) / f"sr_vs_ncu_p{int(round(p_dbm))}.csv",
            ("n_cu", "sr", "status"), rows))
    return paths


TRADEOFF_RHO_GRID = (0.0, 0.25, 0.5, 0.75, 1.0)


def figure_tradeoff(cfg: ScenarioConfig, out_dir, rho_grid=TRADEOFF_RHO_GRID) -> list:
    """CRB/secrecy trade-off over the weighting factor.

    One probe fixes the estimate, the intervals, and the normalizers; each
    weight then solves the same constrained problem, so the sweep isolates
    the scalarization trade-off.
    """
    sc = materialize(cfg)
    probe = omni_probe(sc)
    est = probe.estimate
    estimates = EveParameters(est.angles, est.amplitudes)
    det_ub, _ = fim_det_upper_bound(estimates, sc.geometry, sc.echo_noise,
                                    sc.frame_length, sc.power_budget)
    sr_ub_val = sr_upper_bound(sc.channel_matrix, est.angles, est.amplitudes,
                               sc.power_budget, sc.cu_noise, sc.eve_noise)
    rows = []
    for rho in rho_grid:
        sol, status = fixed_interval_solution(
            sc, estimates, list(est.intervals), float(rho), det_ub, sr_ub_val)
        if sol is None:
            rows.append((rho, None, None, status))
            continue
        rows.append((rho, _root_crb_deg(sc, estimates, sol.design),
                     sol.secrecy_rate, status))
    return [write_csv(Path(out_dir) / "tradeoff.csv",
                      ("rho", "root_crb", "sr", "status"), rows)]


def figure_colocated(cfg: ScenarioConfig, out_dir,
                     angle_diffs_deg=(0.0, 10.0, 20.0),
                     widths_deg=(2.0, 4.0, 6.0, 8.0, 10.0), rho=None) -> list:
    """Strong-LoS single-user scenario swept over the CU/Eve angle difference."""
    from .config import CuConfig, EveConfig

    cu_angle = -20.0
    rows = []
    for diff in angle_diffs_deg:
        sub = cfg.replace(
            cus=(CuConfig(cu_angle, rician_v=7.0, path_count=cfg.cus[0].path_count),),
            eves=(EveConfig(cu_angle + diff, cfg.eves[0].amplitude_mod,
                            cfg.eves[0].amplitude_phase_deg),),
            echo_snr_db=-15.0,
        )
        sc = materialize(sub)
        estimates = sc.eves
        det_ub, _ = fim_det_upper_bound(estimates, sc.geometry, sc.echo_noise,
                                        sc.frame_length, sc.power_budget)
        sr_ub_val = sr_upper_bound(sc.channel_matrix, estimates.angles,
                                   estimates.amplitudes, sc.power_budget,
                                   sc.cu_noise, sc.eve_noise)
        for width in widths_deg:
            half = np.deg2rad(width) / 2
            intervals = [(a - half, a + half) for a in estimates.angles]
            sol, status = fixed_interval_solution(
                sc, estimates, intervals, rho if rho is not None else sub.rho,
                det_ub, sr_ub_val)
            if sol is None:
                rows.append((diff, width, None, None, status))
            else:
                rows.append((diff, width, sol.secrecy_rate,
                             _root_crb_deg(sc, estimates, sol.design), status))
    return [write_csv(Path(out_dir) / "colocated.csv",
                      ("angle_diff_deg", "delta_theta_deg", "sr",
                       "root_crb_theta_deg", "status"), rows)]


def run_figure(fig_id: str, cfg: ScenarioConfig, out_dir, trials: int = 200,
               rho: float | None = None) -> list:
    """Dispatch a figure runner; returns the list of written CSV paths."""
    if fig_id == "beampattern":
        return figure_beampattern(cfg, out_dir, rho=rho)
    if fig_id == "rmse":
        return figure_rmse(cfg, out_dir, trials=trials)
    if fig_id == "convergence":
        return figure_convergence(cfg, out_dir, rho=rho)
    if fig_id == "sr_vs_width":
        return figure_sr_vs_width(cfg, out_dir, rho=rho)
    if fig_id == "sr_vs_ncu":
        return figure_sr_vs_ncu(cfg, out_dir, rho=rho)
    if fig_id == "tradeoff":
        return figure_tradeoff(cfg, out_dir)
    if fig_id == "colocated":
        return figure_colocated(cfg, out_dir, rho=rho)
    raise ValueError(f"unknown figure id {fig_id!r}; choose from {FIGURE_IDS}")
