"""Scenario configuration: YAML schema, validation, defaults.

Angles cross the interface in degrees and powers in dBm; everything is
converted once when the scenario is materialized. The defaults reproduce
the standard benchmark setup (10x10 array serving three users, 64-snapshot
frames, 0 dBm noise floors).
"""
from __future__ import annotations

import io
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from .errors import ConfigError


def dbm_to_mw(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw: float) -> float:
    return 10.0 * np.log10(mw)


@dataclass(frozen=True)
class CuConfig:
    angle_deg: float
    rician_v: float = 0.1
    path_count: int = 8


@dataclass(frozen=True)
class EveConfig:
    true_angle_deg: float
    amplitude_mod: float = 1.0
    amplitude_phase_deg: float = 0.0

    @property
    def amplitude(self) -> complex:
        return self.amplitude_mod * np.exp(1j * np.deg2rad(self.amplitude_phase_deg))


@dataclass(frozen=True)
class ClutterConfig:
    """Extra known reflectors (e.g. reflecting users) added to the echo."""

    angle_deg: float
    amplitude_mod: float = 1.0
    amplitude_phase_deg: float = 0.0

    @property
    def amplitude(self) -> complex:
        return self.amplitude_mod * np.exp(1j * np.deg2rad(self.amplitude_phase_deg))


DEFAULT_RHO = 0.4


@dataclass(frozen=True)
class ScenarioConfig:
    n_tx: int = 10
    n_rx: int = 10
    frame_length: int = 64
    power_budget_dbm: float = 35.0
    cu_noise_dbm: float = 0.0
    eve_noise_dbm: float = 0.0
    echo_snr_db: float = -22.0
    rho: float = DEFAULT_RHO
    ripple_alpha: float = 0.05
    gamma_s_fraction: float = 0.1
    gamma_s_dbm: float | None = None
    grid_step_deg: float = 0.5
    cu_mask_radius_deg: float = 2.0
    seed: int = 20240601
    cus: tuple = (
        CuConfig(40.0), CuConfig(10.0), CuConfig(-30.0),
    )
    eves: tuple = (EveConfig(-25.0, 1.0, 0.0),)
    clutter: tuple = ()

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_tx < 2 or self.n_tx % 2:
            raise ConfigError(f"n_tx={self.n_tx} must be even and >= 2")
        if self.n_rx < 2 or self.n_rx % 2:
            raise ConfigError(f"n_rx={self.n_rx} must be even and >= 2")
        if self.frame_length < self.n_tx:
            raise ConfigError(
                f"frame_length={self.frame_length} must be >= n_tx={self.n_tx}"
            )
        if not self.cus:
            raise ConfigError("cus: need at least one communication user")
        if not self.eves:
            raise ConfigError("eves: need at least one eavesdropper")
        for kind, entries in (("cus", self.cus), ("eves", self.eves), ("clutter", self.clutter)):
            for e in entries:
                ang = e.angle_deg if kind != "eves" else e.true_angle_deg
                if not -90.0 <= ang <= 90.0:
                    raise ConfigError(f"{kind}: angle {ang} deg outside [-90, 90]")
        for e in self.cus:
            if e.rician_v < 0:
                raise ConfigError(f"cus: rician_v={e.rician_v} must be nonnegative")
            if e.path_count < 1:
                raise ConfigError(f"cus: path_count={e.path_count} must be >= 1")
        for e in self.eves:
            if e.amplitude_mod <= 0:
                raise ConfigError("eves: amplitude_mod must be positive")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigError(f"rho={self.rho} outside [0, 1]")
        if not 0.0 < self.ripple_alpha < 1.0:
            raise ConfigError(f"ripple_alpha={self.ripple_alpha} outside (0, 1)")
        if self.gamma_s_fraction <= 0:
            raise ConfigError("gamma_s_fraction must be positive")
        if self.grid_step_deg <= 0:
            raise ConfigError("grid_step_deg must be positive")

    @property
    def power_budget_mw(self) -> float:
        return dbm_to_mw(self.power_budget_dbm)

    @property
    def cu_noise_mw(self) -> float:
        return dbm_to_mw(self.cu_noise_dbm)

    @property
    def eve_noise_mw(self) -> float:
        return dbm_to_mw(self.eve_noise_dbm)

    @property
    def echo_noise_mw(self) -> float:
        """Radar noise variance implied by the echo-SNR definition.

        SNR = |beta_1|^2 * L * P0 / sigma_R^2 with the first Eve as the
        reference reflector, so sigma_R^2 is derived and never stored.
        """
        beta_ref = self.eves[0].amplitude_mod
        snr = 10.0 ** (self.echo_snr_db / 10.0)
        return beta_ref ** 2 * self.frame_length * self.power_budget_mw / snr

    @property
    def gamma_s_mw(self) -> float:
        """Sidelobe gap in mW; absolute dBm value wins over the fraction."""
        if self.gamma_s_dbm is not None:
            return dbm_to_mw(self.gamma_s_dbm)
        return self.gamma_s_fraction * self.power_budget_mw

    def replace(self, **kwargs) -> "ScenarioConfig":
        data = asdict(self)
        data["cus"] = tuple(CuConfig(**c) for c in data["cus"])
        data["eves"] = tuple(EveConfig(**e) for e in data["eves"])
        data["clutter"] = tuple(ClutterConfig(**c) for c in data["clutter"])
        data.update(kwargs)
        return ScenarioConfig(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cus"] = [asdict(c) for c in self.cus]
        d["eves"] = [asdict(e) for e in self.eves]
        d["clutter"] = [asdict(c) for c in self.clutter]
        return d


def _build(data: dict) -> ScenarioConfig:
    known = {f for f in ScenarioConfig.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    kwargs = dict(data)
    try:
        if "cus" in kwargs:
            kwargs["cus"] = tuple(CuConfig(**c) for c in kwargs["cus"])
        if "eves" in kwargs:
            kwargs["eves"] = tuple(EveConfig(**e) for e in kwargs["eves"])
        if "clutter" in kwargs:
            kwargs["clutter"] = tuple(ClutterConfig(**c) for c in kwargs["clutter"])
    except TypeError as exc:
        raise ConfigError(f"malformed list entry: {exc}") from exc
    try:
        return ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> ScenarioConfig:
    """Load a YAML scenario file; an empty file yields the default scenario."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text)


def parse_config_text(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if data is None:
        return ScenarioConfig()
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    return _build(data)


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
