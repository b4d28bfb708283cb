"""Simulation configuration: scenario constants, array setup and feature flags.

Near-field constants come from the specular-cluster/Beta table and the SNS
constants from the visibility table of the near-field/SNS model. The
small-scale and path-loss constants are representative TR 38.901 LOS values
at 7 GHz and are not normative; override them in the YAML file.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
import yaml
from scipy.constants import speed_of_light

from .blocker import Blocker
from .geometry import ArrayGeometry, FieldPattern
from .metrics import PathLossModel
from .nearfield import NearFieldParams
from .smallscale import ScenarioParams
from .sns_stochastic import SnsScenarioParams
from .sns_ue import UeAttenuationTable

# (n_spec, beta_a, beta_b)
NEAR_FIELD_TABLE = {
    "UMa": (2, 1.93, 1.33),
    "UMi": (2, 1.53, 1.42),
    "InH": (4, 1.25, 1.27),
    "InF": (4, 1.38, 1.26),
}
# Rural and suburban macro reuse the UMa row.
NEAR_FIELD_TABLE["RMa"] = NEAR_FIELD_TABLE["UMa"]
NEAR_FIELD_TABLE["SMa"] = NEAR_FIELD_TABLE["UMa"]

# (pr_mu, pr_sigma, A, B, R, noise variance)
SNS_TABLE = {
    "UMa": (0.56, 0.20, 0.15, 0.45, 33.0, 0.0015),
    "UMi": (0.49, 0.18, 0.12, 0.48, 50.0, 0.001),
    "InH": (0.31, 0.08, 0.0, 0.60, None, 0.0011),
    "InF": (0.32, 0.06, 0.0, 0.57, None, 0.002),
    "RMa": (0.14, 0.08, 0.16, 0.74, 60.0, 0.0016),
    "SMa": (0.24, 0.07, 0.06, 0.56, 23.0, 0.0013),
}
SNS_ROLLOFF = 13.0

# Representative LOS small-scale constants at 7 GHz (degrees, seconds, dB).
SMALL_SCALE_DEFAULTS = {
    "UMa": dict(n_clusters=12, n_rays=20, delay_spread=92e-9, delay_scaling=2.5,
                cluster_shadowing_std_db=3.0, asd=14.3, asa=64.6, zsd=10.0, zsa=8.9,
                cluster_asd=5.0, cluster_asa=11.0, cluster_zsd=3.0, cluster_zsa=7.0,
                k_factor_mean_db=9.0, k_factor_std_db=3.5, xpr_mean_db=8.0, xpr_std_db=4.0,
                cluster_delay_spread=3.68e-9, excess_delay_lg_mu=-6.955, excess_delay_lg_sigma=0.5),
    "UMi": dict(n_clusters=12, n_rays=20, delay_spread=44e-9, delay_scaling=3.0,
                cluster_shadowing_std_db=3.0, asd=14.6, asa=45.5, zsd=7.9, zsa=4.4,
                cluster_asd=3.0, cluster_asa=17.0, cluster_zsd=2.0, cluster_zsa=7.0,
                k_factor_mean_db=9.0, k_factor_std_db=5.0, xpr_mean_db=9.0, xpr_std_db=3.0,
                cluster_delay_spread=5e-9, excess_delay_lg_mu=-7.5, excess_delay_lg_sigma=0.5),
    "InH": dict(n_clusters=15, n_rays=20, delay_spread=19.9e-9, delay_scaling=3.6,
                cluster_shadowing_std_db=6.0, asd=39.8, asa=40.6, zsd=8.6, zsa=16.0,
                cluster_asd=5.0, cluster_asa=8.0, cluster_zsd=3.0, cluster_zsa=9.0,
                k_factor_mean_db=7.0, k_factor_std_db=4.0, xpr_mean_db=11.0, xpr_std_db=4.0,
                cluster_delay_spread=3.91e-9, excess_delay_lg_mu=-8.6, excess_delay_lg_sigma=0.4),
    "InF": dict(n_clusters=25, n_rays=20, delay_spread=29.5e-9, delay_scaling=2.7,
                cluster_shadowing_std_db=4.0, asd=36.3, asa=41.4, zsd=22.4, zsa=20.9,
                cluster_asd=5.0, cluster_asa=8.0, cluster_zsd=3.0, cluster_zsa=9.0,
                k_factor_mean_db=7.0, k_factor_std_db=8.0, xpr_mean_db=12.0, xpr_std_db=6.0,
                cluster_delay_spread=3.91e-9, excess_delay_lg_mu=-7.5, excess_delay_lg_sigma=0.5),
    "RMa": dict(n_clusters=11, n_rays=20, delay_spread=32e-9, delay_scaling=3.8,
                cluster_shadowing_std_db=3.0, asd=7.9, asa=33.1, zsd=3.0, zsa=3.0,
                cluster_asd=2.0, cluster_asa=3.0, cluster_zsd=3.0, cluster_zsa=3.0,
                k_factor_mean_db=7.0, k_factor_std_db=4.0, xpr_mean_db=12.0, xpr_std_db=4.0,
                cluster_delay_spread=3.91e-9, excess_delay_lg_mu=-7.0, excess_delay_lg_sigma=0.5),
    "SMa": dict(n_clusters=12, n_rays=20, delay_spread=59e-9, delay_scaling=2.4,
                cluster_shadowing_std_db=3.0, asd=8.0, asa=36.0, zsd=4.0, zsa=5.0,
                cluster_asd=2.0, cluster_asa=5.0, cluster_zsd=3.0, cluster_zsa=3.0,
                k_factor_mean_db=9.0, k_factor_std_db=5.0, xpr_mean_db=8.0, xpr_std_db=4.0,
                cluster_delay_spread=3.91e-9, excess_delay_lg_mu=-7.0, excess_delay_lg_sigma=0.5),
}

# Log-distance LOS path loss at 7 GHz: (intercept dB, exponent, shadowing std dB).
PATHLOSS_DEFAULTS = {
    "UMa": (44.9, 2.2, 4.0),
    "UMi": (49.3, 2.1, 4.0),
    "InH": (49.3, 1.73, 3.0),
    "InF": (47.9, 2.15, 4.3),
    "RMa": (49.4, 2.0, 4.0),
    "SMa": (44.9, 2.2, 4.0),
}

# Deployment defaults used when the config does not set them.
DEPLOYMENT_DEFAULTS = {
    "UMa": dict(bs_height_m=25.0, ue_height_m=1.5, min_distance_2d_m=35.0),
    "UMi": dict(bs_height_m=10.0, ue_height_m=1.5, min_distance_2d_m=10.0),
    "InH": dict(bs_height_m=3.0, ue_height_m=1.0, min_distance_2d_m=0.0),
    "InF": dict(bs_height_m=8.0, ue_height_m=1.5, min_distance_2d_m=0.0),
    "RMa": dict(bs_height_m=35.0, ue_height_m=1.5, min_distance_2d_m=10.0),
    "SMa": dict(bs_height_m=25.0, ue_height_m=1.5, min_distance_2d_m=10.0),
}

FEATURES = ("near_field", "sns_stochastic", "sns_blocker", "sns_ue")
FEATURE_ALIASES = {
    "nf": "near_field",
    "near_field": "near_field",
    "sns-stoch": "sns_stochastic",
    "sns_stochastic": "sns_stochastic",
    "sns-block": "sns_blocker",
    "sns_blocker": "sns_blocker",
    "sns-ue": "sns_ue",
    "sns_ue": "sns_ue",
}


class ConfigError(ValueError):
    pass


def scenario_params(name: str, **overrides) -> ScenarioParams:
    """Built-in constants of a scenario with optional field overrides."""
    if name not in SMALL_SCALE_DEFAULTS:
        raise ConfigError(f"unknown scenario {name!r}")
    kwargs = dict(SMALL_SCALE_DEFAULTS[name])
    n_spec, a, b = NEAR_FIELD_TABLE[name]
    mu, sigma, va, vb, vr, var = SNS_TABLE[name]
    kwargs["near_field"] = NearFieldParams(n_spec=n_spec, beta_a=a, beta_b=b)
    kwargs["sns"] = SnsScenarioParams(pr_mu=mu, pr_sigma=sigma, vp_a=va, vp_b=vb, vp_r=vr,
                                      vp_noise_var=var, rolloff=SNS_ROLLOFF)
    nf = overrides.pop("near_field", None)
    sns = overrides.pop("sns", None)
    if isinstance(nf, dict):
        kwargs["near_field"] = NearFieldParams(**{**kwargs["near_field"].__dict__, **nf})
    if isinstance(sns, dict):
        kwargs["sns"] = SnsScenarioParams(**{**kwargs["sns"].__dict__, **sns})
    kwargs.update(overrides)
    return ScenarioParams(name=name, **kwargs)


def parse_features(spec) -> frozenset:
    """Feature set from ``"nf,sns-stoch"`` or an iterable of names."""
    if spec is None:
        return frozenset()
    items = spec.split(",") if isinstance(spec, str) else list(spec)
    out = set()
    for item in items:
        item = item.strip()
        if not item or item == "none":
            continue
        if item not in FEATURE_ALIASES:
            raise ConfigError(f"unknown feature {item!r}")
        out.add(FEATURE_ALIASES[item])
    if {"sns_stochastic", "sns_blocker"} <= out:
        raise ConfigError("stochastic and blocker-based BS-side SNS are mutually exclusive")
    return frozenset(out)


def mode_label(features) -> str:
    short = {"near_field": "nf", "sns_stochastic": "sns-stoch", "sns_blocker": "sns-block", "sns_ue": "sns-ue"}
    parts = [short[f] for f in FEATURES if f in features]
    return "+".join(parts) if parts else "ff"


@dataclass
class SimulationConfig:
    scenario: ScenarioParams
    carrier_frequency: float = 7e9
    bs: ArrayGeometry = field(default_factory=ArrayGeometry)
    ue: ArrayGeometry = field(default_factory=ArrayGeometry)
    bs_height: float = 3.0
    ue_height: float = 1.0
    radius: float = 10.0
    min_distance_2d: float = 0.0
    sector_half_angle: float = np.pi
    n_ue: int = 1
    seed: int = 0
    features: frozenset = frozenset()
    snr_db: float = 10.0
    # "frobenius" evaluates capacity on the channel scaled to unit mean sublink power.
    capacity_normalization: str = "frobenius"
    pathloss: Optional[PathLossModel] = None
    blockers: tuple = ()
    ue_table: Optional[UeAttenuationTable] = None
    ue_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    time: float = 0.0
    los: bool = True
    output_dir: str = "out"
    export_pdp: bool = False

    def __post_init__(self):
        self.validate()

    @property
    def wavelength(self) -> float:
        return speed_of_light / self.carrier_frequency

    @property
    def snr(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    def validate(self):
        if self.n_ue < 1:
            raise ConfigError("n_ue must be >= 1")
        if self.carrier_frequency <= 0:
            raise ConfigError("carrier frequency must be positive")
        if self.radius <= 0 or self.min_distance_2d < 0 or self.min_distance_2d >= self.radius:
            raise ConfigError("need 0 <= min_distance_2d < radius")
        unknown = set(self.features) - set(FEATURES)
        if unknown:
            raise ConfigError(f"unknown features {sorted(unknown)}")
        if {"sns_stochastic", "sns_blocker"} <= set(self.features):
            raise ConfigError("stochastic and blocker-based BS-side SNS are mutually exclusive")
        if "sns_ue" in self.features and self.ue_table is None:
            raise ConfigError("UE-side SNS needs an attenuation table")
        if not 0 < self.sector_half_angle <= np.pi:
            raise ConfigError("sector half-angle must lie in (0, pi]")
        if self.capacity_normalization not in ("frobenius", "none"):
            raise ConfigError("capacity_normalization must be 'frobenius' or 'none'")
        if self.pathloss is None:
            self.pathloss = PathLossModel(*PATHLOSS_DEFAULTS.get(self.scenario.name, PATHLOSS_DEFAULTS["UMi"]))

    def with_features(self, features) -> "SimulationConfig":
        new = copy.copy(self)
        new.features = parse_features(features) if not isinstance(features, frozenset) else features
        new.validate()
        return new


def default_config_path() -> Path:
    return Path(str(resources.files("xlchansim") / "data" / "default.yaml"))


def default_ue_table_path() -> Path:
    return Path(str(resources.files("xlchansim") / "data" / "ue_attenuation_placeholder.csv"))


def _pattern(section: Optional[dict]) -> FieldPattern:
    return FieldPattern(**(section or {}))


def _array(section: dict, wavelength: float, reference_point) -> ArrayGeometry:
    section = dict(section)
    offsets = section.pop("offsets_m", None)
    return ArrayGeometry(
        rows=int(section.get("rows", 1)),
        cols=int(section.get("cols", 1)),
        spacing_h=float(section.get("spacing_h_wavelengths", 0.5)) * wavelength,
        spacing_v=float(section.get("spacing_v_wavelengths", 0.5)) * wavelength,
        polarizations=int(section.get("polarizations", 1)),
        reference_point=np.asarray(reference_point, dtype=float),
        bearing=np.radians(section.get("bearing_deg", 0.0)),
        downtilt=np.radians(section.get("downtilt_deg", 0.0)),
        slant=np.radians(section.get("slant_deg", 0.0)),
        centered=bool(section.get("centered", False)),
        pattern=_pattern(section.get("pattern")),
        offsets=None if offsets is None else np.asarray(offsets, dtype=float),
    )


def _deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in (extra or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def load_raw(path=None) -> dict:
    """Bundled defaults merged with the YAML file at ``path`` (if any)."""
    with open(default_config_path()) as fh:
        raw = yaml.safe_load(fh)
    if path is not None:
        with open(path) as fh:
            raw = _deep_merge(raw, yaml.safe_load(fh) or {})
    return raw


def build_config(raw: dict, **overrides) -> SimulationConfig:
    """Build a :class:`SimulationConfig` from a parsed config mapping.

    ``overrides`` replace keys of the ``simulation`` section (for example
    ``n_ue``, ``seed``, ``features``, ``radius_m``, ``scenario``).
    """
    sim = dict(raw.get("simulation", {}))
    sim.update({k: v for k, v in overrides.items() if v is not None})
    name = sim.get("scenario", "InH")
    if name not in DEPLOYMENT_DEFAULTS:
        raise ConfigError(f"unknown scenario {name!r}")
    for key, value in DEPLOYMENT_DEFAULTS[name].items():
        if sim.get(key) is None:
            sim[key] = value
    freq = float(sim.get("carrier_frequency_hz", 7e9))
    lam = speed_of_light / freq

    scen_over = dict((raw.get("scenarios") or {}).get(name, {}))
    pl = scen_over.pop("pathloss", None)
    try:
        scenario = scenario_params(name, **scen_over)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    pathloss = PathLossModel(*PATHLOSS_DEFAULTS[name]) if pl is None else PathLossModel(**pl)

    bs_h = float(sim.get("bs_height_m", 3.0))
    bs = _array(raw.get("bs_array", {}), lam, (0.0, 0.0, bs_h))
    ue = _array(raw.get("ue_array", {}), lam, (0.0, 0.0, float(sim.get("ue_height_m", 1.0))))

    blockers = tuple(
        Blocker(
            kind=b["kind"], center=b["center"], w=float(b["w"]), h=float(b["h"]),
            velocity=b.get("velocity", (0.0, 0.0, 0.0)), edge=b.get("edge", "w1"),
        )
        for b in raw.get("blockers") or []
    )

    ue_sec = raw.get("ue_attenuation") or {}
    table_path = ue_sec.get("table") or default_ue_table_path()
    ue_table = UeAttenuationTable.from_csv(table_path, nearest_band=bool(ue_sec.get("nearest_band", False)))

    speed = float(sim.get("ue_speed_mps", 0.0))
    return SimulationConfig(
        scenario=scenario,
        carrier_frequency=freq,
        bs=bs,
        ue=ue,
        bs_height=bs_h,
        ue_height=float(sim.get("ue_height_m", 1.0)),
        radius=float(sim.get("radius_m", 10.0)),
        min_distance_2d=float(sim.get("min_distance_2d_m", 0.0)),
        sector_half_angle=np.radians(float(sim.get("sector_half_angle_deg", 180.0))),
        n_ue=int(sim.get("n_ue", 1)),
        seed=int(sim.get("seed", 0)),
        features=parse_features(sim.get("features")),
        snr_db=float(sim.get("snr_db", 10.0)),
        capacity_normalization=str(sim.get("capacity_normalization", "frobenius")),
        pathloss=pathloss,
        blockers=blockers,
        ue_table=ue_table,
        ue_velocity=np.array([speed, 0.0, 0.0]),
        time=float(sim.get("time_s", 0.0)),
        los=bool(sim.get("los", True)),
        output_dir=str(sim.get("output_dir", "out")),
        export_pdp=bool(sim.get("export_pdp", False)),
    )


def load_config(path=None, **overrides) -> SimulationConfig:
    return build_config(load_raw(path), **overrides)
