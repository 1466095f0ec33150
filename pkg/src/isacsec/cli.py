"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 solver infeasibility on a
non-sweep command, 4 detection failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .arrays import beampattern
from .config import ScenarioConfig, parse_config
from .errors import (
    ConfigError,
    DetectionFailureError,
    InfeasibleProblemError,
    IsacsecError,
    NoSidelobeRegionError,
    OptimizationFailureError,
)
from .estimator import probe_spectrum
from .experiments import write_csv
from .optimizer import extract_beamformers
from .pipeline import omni_probe, run_algorithm1
from .scenario import materialize
from .sensing import EveParameters, fim_det_upper_bound
from .security import sr_upper_bound

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_DETECTION = 4


def _load_config(args) -> ScenarioConfig:
    cfg = parse_config(args.config) if args.config else ScenarioConfig()
    if args.seed_override is not None:
        cfg = cfg.replace(seed=args.seed_override)
    if getattr(args, "rho", None) is not None:
        cfg = cfg.replace(rho=args.rho)
    return cfg


def _estimate_rows(estimate):
    rows = []
    for k in range(estimate.k):
        lo, hi = estimate.intervals[k]
        rows.append((
            k,
            np.rad2deg(estimate.angles[k]),
            abs(estimate.amplitudes[k]),
            np.rad2deg(np.angle(estimate.amplitudes[k])),
            np.rad2deg(estimate.root_crb_theta[k]),
            np.rad2deg(lo),
            np.rad2deg(hi),
        ))
    return rows


ESTIMATE_HEADER = ("eve", "angle_deg", "amp_mod", "amp_phase_deg",
                   "root_crb_theta_deg", "interval_lo_deg", "interval_hi_deg")


def cmd_probe(args) -> int:
    cfg = _load_config(args)
    sc = materialize(cfg)
    probe = omni_probe(sc)
    path = write_csv(Path(args.out) / "estimates.csv", ESTIMATE_HEADER,
                     _estimate_rows(probe.estimate))
    print(path)
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    sc = materialize(cfg)
    probe = omni_probe(sc)
    grid = np.deg2rad(np.arange(-90.0, 90.0 + cfg.grid_step_deg / 2, cfg.grid_step_deg))
    spec = probe_spectrum(probe.echo, probe.waveform, grid,
                          tuple(sc.cu_angles), np.deg2rad(cfg.cu_mask_radius_deg))
    p1 = write_csv(Path(args.out) / "spectrum.csv", ("theta_deg", "value"),
                   zip(np.rad2deg(spec.grid), spec.values))
    p2 = write_csv(Path(args.out) / "estimates.csv", ESTIMATE_HEADER,
                   _estimate_rows(probe.estimate))
    print(p1)
    print(p2)
    return EXIT_OK


def cmd_bound(args) -> int:
    cfg = _load_config(args)
    sc = materialize(cfg)
    det_ub, design = fim_det_upper_bound(
        sc.eves, sc.geometry, sc.echo_noise, sc.frame_length, sc.power_budget)
    sr_ub = sr_upper_bound(sc.channel_matrix, sc.eves.angles, sc.eves.amplitudes,
                           sc.power_budget, sc.cu_noise, sc.eve_noise)
    path = write_csv(Path(args.out) / "bounds.csv",
                     ("det_j_upper_bound", "sr_upper_bound", "design_trace_mw"),
                     [(det_ub, sr_ub, design.total_power())])
    print(path)
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = _load_config(args)
    sc = materialize(cfg)
    probe = omni_probe(sc)
    est = probe.estimate
    estimates = EveParameters(est.angles, est.amplitudes)
    det_ub, _ = fim_det_upper_bound(estimates, sc.geometry, sc.echo_noise,
                                    sc.frame_length, sc.power_budget)
    sr_ub = sr_upper_bound(sc.channel_matrix, est.angles, est.amplitudes,
                           sc.power_budget, sc.cu_noise, sc.eve_noise)
    sol, status = experiments.fixed_interval_solution(
        sc, estimates, list(est.intervals), cfg.rho, det_ub, sr_ub)
    if sol is None:
        log.error("weighted optimization infeasible (%s)", status)
        return EXIT_INFEASIBLE
    out = Path(args.out)
    _, defects = extract_beamformers(sol.design)
    p1 = write_csv(out / "solution.csv",
                   ("c_opt", "z_opt", "objective", "det_j", "secrecy_rate",
                    "trace_mw", "status", "max_rank_defect"),
                   [(sol.c_opt, sol.z_opt, sol.objective, sol.det_j,
                     sol.secrecy_rate, sol.design.total_power(),
                     sol.solver_status, max(defects) if defects else 0.0)])
    pat = beampattern(sol.design.r_x, np.deg2rad(experiments.PATTERN_GRID_DEG))
    p2 = write_csv(out / "beampattern_optimized.csv", ("theta_deg", "power_db"),
                   zip(experiments.PATTERN_GRID_DEG, experiments.power_db(pat)))
    print(p1)
    print(p2)
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _load_config(args)
    sc = materialize(cfg)
    trace = run_algorithm1(sc, rho=cfg.rho)
    rows = []
    for rec in trace.records:
        for k in range(len(rec.root_crb_theta)):
            lo, hi = rec.intervals[k]
            rows.append((
                rec.index, k,
                np.rad2deg(rec.root_crb_theta[k]),
                rec.root_crb_beta[k],
                rec.secrecy_rate,
                rec.objective,
                rec.solver_status,
                np.rad2deg(rec.main_lobe_widths[k]),
                np.rad2deg(lo), np.rad2deg(hi),
            ))
    path = write_csv(Path(args.out) / "trace.csv",
                     ("iter", "eve", "root_crb_theta_deg", "root_crb_amp",
                      "secrecy_rate", "objective", "solver_status",
                      "main_lobe_width_deg", "interval_lo_deg", "interval_hi_deg"),
                     rows)
    print(path)
    if trace.status.startswith("infeasible"):
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_figure(args) -> int:
    cfg = _load_config(args)
    for path in experiments.run_figure(args.fig_id, cfg, args.out,
                                       trials=args.trials, rho=args.rho):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isacsec",
        description="Sensing-assisted physical-layer security simulator",
    )
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="enable info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, rho_flag=True):
        p.add_argument("--config", type=str, default=None,
                       help="YAML scenario file (defaults used when omitted)")
        p.add_argument("--out", type=str, default=".",
                       help="output directory for CSV files")
        p.add_argument("--seed-override", type=int, default=None)
        if rho_flag:
            p.add_argument("--rho", type=float, default=None,
                           help="override the config weighting factor")

    p = sub.add_parser("probe", help="omnidirectional probe and CAML estimate")
    common(p)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("estimate", help="spatial spectrum plus estimates")
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("bound", help="FIM-determinant and secrecy-rate bounds")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("optimize", help="one weighted optimization round")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("pipeline", help="full iterative loop")
    common(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("figure", help="reproduce a figure as CSV data")
    p.add_argument("fig_id", choices=experiments.FIGURE_IDS)
    common(p)
    p.add_argument("--trials", type=int, default=200,
                   help="Monte Carlo trials for trial-based figures")
    p.set_defaults(func=cmd_figure)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleProblemError, NoSidelobeRegionError, OptimizationFailureError) as exc:
        print(f"optimization failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DetectionFailureError as exc:
        print(f"detection failure: {exc}", file=sys.stderr)
        return EXIT_DETECTION
    except IsacsecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
