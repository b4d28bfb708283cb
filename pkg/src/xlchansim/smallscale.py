"""Cluster and ray small-scale parameters for one drop.

Follows the TR 38.901 step sequence (delays, powers, angles, XPR and random
phases, sub-cluster split) with every scenario constant taken from
:class:`ScenarioParams`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.constants import speed_of_light

from .geometry import wrap_angle
from .nearfield import NearFieldParams
from .sns_stochastic import SnsScenarioParams

# Intra-cluster ray offsets for M = 20 (TR 38.901 Table 7.5-3), unit rms spread.
RAY_OFFSETS_20 = np.array(
    [0.0447, -0.0447, 0.1413, -0.1413, 0.2492, -0.2492, 0.3715, -0.3715, 0.5129, -0.5129,
     0.6797, -0.6797, 0.8844, -0.8844, 1.1481, -1.1481, 1.5195, -1.5195, 2.1551, -2.1551]
)

# Cluster-count scaling factors of the inverse-Gaussian angle mapping.
_C_PHI = {4: 0.779, 5: 0.860, 8: 1.018, 10: 1.090, 11: 1.123, 12: 1.146, 14: 1.190,
          15: 1.211, 16: 1.226, 19: 1.273, 20: 1.289, 25: 1.358}
_C_THETA = {8: 0.889, 10: 0.957, 11: 1.031, 12: 1.104, 15: 1.1088, 19: 1.184, 20: 1.178,
            25: 1.282}

SUBCLUSTER_OFFSETS = np.array([0.0, 1.28, 2.56])

# 1-based ray sets of the three sub-clusters for M = 20.
DEFAULT_SUBCLUSTER_RAYS = (
    (1, 2, 3, 4, 5, 6, 7, 8, 19, 20),
    (9, 10, 11, 12, 17, 18),
    (13, 14, 15, 16),
)


@dataclass(frozen=True)
class ScenarioParams:
    """Scenario constants. Times in seconds, angles in degrees, levels in dB.

    The excess delay is lognormal in the base-10 sense:
    ``log10(excess_delay) ~ Normal(excess_delay_lg_mu, excess_delay_lg_sigma)``.
    """

    name: str
    n_clusters: int
    n_rays: int
    delay_spread: float
    delay_scaling: float
    cluster_shadowing_std_db: float
    asd: float
    asa: float
    zsd: float
    zsa: float
    cluster_asd: float
    cluster_asa: float
    cluster_zsd: float
    cluster_zsa: float
    k_factor_mean_db: float
    k_factor_std_db: float
    xpr_mean_db: float
    xpr_std_db: float
    cluster_delay_spread: float
    excess_delay_lg_mu: float
    excess_delay_lg_sigma: float
    zod_offset: float = 0.0
    near_field: NearFieldParams = field(default_factory=NearFieldParams)
    sns: SnsScenarioParams = field(default_factory=SnsScenarioParams)
    subcluster_rays: Optional[tuple] = None
    # Whether the visibility-probability power gap uses K-scaled powers.
    vp_power_post_k: bool = True

    def __post_init__(self):
        if self.n_rays < 1:
            raise ValueError("n_rays must be >= 1")
        if self.n_clusters < self.near_field.n_spec + 1:
            raise ValueError("n_clusters must exceed the number of specular clusters")
        spreads = (self.delay_spread, self.asd, self.asa, self.zsd, self.zsa)
        if any(s <= 0 for s in spreads):
            raise ValueError("delay and angular spreads must be positive")

    def with_overrides(self, **kwargs) -> "ScenarioParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class SubClusterMap:
    """Zero-based ray index sets and delay offsets (seconds) of the three sub-clusters."""

    rays: tuple
    offsets: np.ndarray

    def __post_init__(self):
        flat = sorted(i for r in self.rays for i in r)
        if flat != list(range(len(flat))):
            raise ValueError("sub-cluster ray sets must partition 0..M-1")


@dataclass
class RayAngles:
    """Per-ray angles in radians, each of shape (N, M)."""

    aod: np.ndarray
    aoa: np.ndarray
    zod: np.ndarray
    zoa: np.ndarray


@dataclass
class ClusterSet:
    """Small-scale parameters of one drop.

    ``delays`` are relative cluster delays (sorted, first is zero) and
    ``powers`` the NLOS-normalized cluster powers. ``ray_delays`` holds the
    relative delay of every ray after the sub-cluster split and ``tap_index``
    the tap each ray contributes to.
    """

    delays: np.ndarray
    powers: np.ndarray
    angles: RayAngles
    xpr: np.ndarray
    phases: np.ndarray
    abs_delays: np.ndarray
    excess_delay: float
    los: bool
    k_factor_db: float
    strongest: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    subclusters: Optional[SubClusterMap] = None
    ray_delays: Optional[np.ndarray] = None
    tap_index: Optional[np.ndarray] = None
    tap_delays: Optional[np.ndarray] = None

    @property
    def n_clusters(self) -> int:
        return self.delays.size

    @property
    def n_rays(self) -> int:
        return self.xpr.shape[1]

    @property
    def k_factor(self) -> float:
        return 10.0 ** (self.k_factor_db / 10.0) if self.los else 0.0


def generate_delays(params: ScenarioParams, rng: np.random.Generator, normalize: bool = True) -> np.ndarray:
    """Exponential-profile cluster delays, sorted and shifted to start at zero."""
    u = rng.uniform(size=params.n_clusters)
    tau = -params.delay_scaling * params.delay_spread * np.log1p(-u)
    if not normalize:
        return tau
    tau = np.sort(tau)
    return tau - tau[0]


def generate_powers(delays: np.ndarray, params: ScenarioParams, rng: np.random.Generator) -> np.ndarray:
    r_tau, ds = params.delay_scaling, params.delay_spread
    zeta = rng.normal(0.0, params.cluster_shadowing_std_db, size=delays.size)
    p = np.exp(-delays * (r_tau - 1.0) / (r_tau * ds)) * 10.0 ** (-zeta / 10.0)
    return p / p.sum()


def los_scaled_powers(powers: np.ndarray, k_factor_db: float) -> np.ndarray:
    """Cluster powers with the LOS ray folded into the first cluster."""
    k = 10.0 ** (k_factor_db / 10.0)
    scaled = powers / (k + 1.0)
    scaled[0] += k / (k + 1.0)
    return scaled


def _scaling_constant(table: dict, n: int) -> float:
    keys = np.array(sorted(table))
    vals = np.array([table[k] for k in keys])
    return float(np.interp(n, keys, vals))


def ray_offsets(n_rays: int) -> np.ndarray:
    """Symmetric unit-rms intra-cluster offsets; the tabulated set for M = 20."""
    if n_rays == 20:
        return RAY_OFFSETS_20.copy()
    if n_rays == 1:
        return np.zeros(1)
    # Laplacian quantiles at the mid-points of M equal-probability bins.
    q = (np.arange(n_rays) + 0.5) / n_rays
    lap = -np.sign(q - 0.5) * np.log(1 - 2 * np.abs(q - 0.5)) / np.sqrt(2)
    lap = lap - lap.mean()
    return lap / np.sqrt(np.mean(lap**2))


def _fold_zenith(theta_deg: np.ndarray) -> np.ndarray:
    theta = np.mod(theta_deg, 360.0)
    return np.where(theta > 180.0, 360.0 - theta, theta)


def generate_angles(
    powers: np.ndarray,
    params: ScenarioParams,
    rng: np.random.Generator,
    *,
    los: bool = False,
    k_factor_db: float = 0.0,
    los_angles: Sequence[float] = (0.0, np.pi, np.pi / 2, np.pi / 2),
) -> RayAngles:
    """Cluster centre angles via the inverse-Gaussian/Laplacian envelope mapping.

    ``los_angles`` is ``(aod, aoa, zod, zoa)`` of the direct path in radians.
    Stronger clusters land closer to the direct-path direction; in LOS the
    first cluster is pinned onto it.
    """
    n, m = powers.size, params.n_rays
    aod_los, aoa_los, zod_los, zoa_los = np.degrees(np.asarray(los_angles, dtype=float))

    p = los_scaled_powers(powers, k_factor_db) if los else powers
    rel = np.maximum(p / p.max(), 1e-300)

    c_phi = _scaling_constant(_C_PHI, n)
    c_theta = _scaling_constant(_C_THETA, n)
    if los:
        k = k_factor_db
        c_phi *= 1.1035 - 0.028 * k - 0.002 * k**2 + 0.0001 * k**3
        c_theta *= 1.3086 + 0.0339 * k - 0.0077 * k**2 + 0.0002 * k**3

    offsets = ray_offsets(m)

    def azimuths(spread, cluster_spread, centre):
        prime = 2.0 * (spread / 1.4) * np.sqrt(-np.log(rel)) / c_phi
        x = rng.choice([-1.0, 1.0], size=n)
        y = rng.normal(0.0, spread / 7.0, size=n)
        phi = x * prime + y
        phi = phi - phi[0] + centre if los else phi + centre
        perm = np.argsort(rng.uniform(size=(n, m)), axis=1)
        return phi[:, None] + cluster_spread * offsets[perm]

    def zeniths(spread, cluster_spread, centre, offset):
        prime = -spread * np.log(rel) / c_theta
        x = rng.choice([-1.0, 1.0], size=n)
        y = rng.normal(0.0, spread / 7.0, size=n)
        theta = x * prime + y
        theta = theta - theta[0] + centre if los else theta + centre + offset
        perm = np.argsort(rng.uniform(size=(n, m)), axis=1)
        return _fold_zenith(theta[:, None] + cluster_spread * offsets[perm])

    aoa = azimuths(params.asa, params.cluster_asa, aoa_los)
    aod = azimuths(params.asd, params.cluster_asd, aod_los)
    zoa = zeniths(params.zsa, params.cluster_zsa, zoa_los, 0.0)
    zod = zeniths(params.zsd, params.cluster_zsd, zod_los, params.zod_offset)
    return RayAngles(
        aod=wrap_angle(np.radians(aod)),
        aoa=wrap_angle(np.radians(aoa)),
        zod=np.radians(zod),
        zoa=np.radians(zoa),
    )


def generate_xpr_phases(params: ScenarioParams, rng: np.random.Generator, n_clusters: Optional[int] = None):
    """Per-ray XPR (linear) and the four polarization phases in [0, 2 pi)."""
    n = params.n_clusters if n_clusters is None else n_clusters
    x = rng.normal(params.xpr_mean_db, params.xpr_std_db, size=(n, params.n_rays))
    kappa = 10.0 ** (x / 10.0)
    phases = rng.uniform(0.0, 2 * np.pi, size=(n, params.n_rays, 4))
    return kappa, phases


def sample_excess_delay(params: ScenarioParams, los: bool, rng: np.random.Generator) -> float:
    if los:
        return 0.0
    return float(10.0 ** rng.normal(params.excess_delay_lg_mu, params.excess_delay_lg_sigma))


def absolute_delays(delays: np.ndarray, d_3d: float, los: bool, params: ScenarioParams, rng: np.random.Generator):
    """Absolute delays ``d_3d / c + tau + excess``; returns ``(abs_delays, excess)``."""
    if d_3d <= 0:
        raise ValueError("d_3d must be positive")
    excess = sample_excess_delay(params, los, rng)
    return d_3d / speed_of_light + np.asarray(delays) + excess, excess


def subcluster_map(params: ScenarioParams) -> SubClusterMap:
    m = params.n_rays
    if params.subcluster_rays is not None:
        rays = tuple(tuple(int(i) - 1 for i in r) for r in params.subcluster_rays)
    elif m == 20:
        rays = tuple(tuple(i - 1 for i in r) for r in DEFAULT_SUBCLUSTER_RAYS)
    else:
        # Contiguous 10/6/4 proportions for other ray counts.
        k1 = int(round(m * 0.5))
        k2 = int(round(m * 0.3))
        idx = np.arange(m)
        rays = (tuple(idx[:k1]), tuple(idx[k1:k1 + k2]), tuple(idx[k1 + k2:]))
    return SubClusterMap(rays=rays, offsets=SUBCLUSTER_OFFSETS * params.cluster_delay_spread)


def split_subclusters(clusters: ClusterSet, params: ScenarioParams) -> ClusterSet:
    """Spread the two strongest clusters over three delay sub-clusters each.

    Fills ``strongest``, ``subclusters``, ``ray_delays``, ``tap_index`` and
    ``tap_delays`` (relative). Taps are ordered by cluster index, with the
    three sub-cluster taps of a split cluster in offset order.
    """
    n, m = clusters.n_clusters, clusters.n_rays
    if n < 2:
        raise ValueError("sub-cluster split needs at least two clusters")
    smap = subcluster_map(params)
    strongest = np.argsort(-clusters.powers, kind="stable")[:2]

    ray_delays = np.repeat(clusters.delays[:, None], m, axis=1)
    tap_index = np.empty((n, m), dtype=int)
    tap_delays = []
    for c in range(n):
        if c in strongest:
            for i, rays in enumerate(smap.rays):
                ray_delays[c, list(rays)] = clusters.delays[c] + smap.offsets[i]
                tap_index[c, list(rays)] = len(tap_delays)
                tap_delays.append(clusters.delays[c] + smap.offsets[i])
        else:
            tap_index[c, :] = len(tap_delays)
            tap_delays.append(clusters.delays[c])

    return replace(
        clusters,
        strongest=np.sort(strongest),
        subclusters=smap,
        ray_delays=ray_delays,
        tap_index=tap_index,
        tap_delays=np.asarray(tap_delays),
    )


def circular_angle_spread(angles: np.ndarray, powers: np.ndarray) -> float:
    """Power-weighted circular angular spread in radians (TR 38.901 Annex A.1)."""
    w = np.broadcast_to(powers, angles.shape)
    r = np.abs(np.sum(w * np.exp(1j * angles)) / np.sum(w))
    return float(np.sqrt(-2.0 * np.log(min(r, 1.0))))
