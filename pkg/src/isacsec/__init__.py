"""Sensing-assisted physical-layer security simulator for ISAC transmitters."""

from .arrays import (
    ArrayGeometry,
    EchoBlock,
    RicianChannel,
    beampattern,
    orthogonal_waveform,
    sample_rician,
    simulate_echo,
    steering,
    steering_derivative,
)
from .config import ScenarioConfig, parse_config
from .estimator import (
    EveEstimate,
    SpatialSpectrum,
    aml_amplitudes,
    capon_peaks,
    capon_spectrum,
    sample_covariance,
    uncertainty_intervals,
)
from .optimizer import (
    BeamConstraintSet,
    WeightedContext,
    WeightedSolution,
    build_constraints,
    extract_beamformers,
    fp_update_y,
    golden_search_c,
    solve_inner_sdp,
)
from .pipeline import IterationTrace, omni_probe, run_algorithm1
from .scenario import Scenario, materialize
from .security import (
    SecrecyReport,
    TransmitDesign,
    benchmark_isotropic_sr,
    cu_sinr,
    eve_snr,
    isotropic_an_projector,
    secrecy_rate,
    sr_upper_bound,
)
from .sensing import (
    CrbReport,
    EveParameters,
    FimBundle,
    build_fim,
    crb_from_fim,
    fim_det_upper_bound,
)

__version__ = "0.1.0"
