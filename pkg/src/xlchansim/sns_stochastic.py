"""Stochastic BS-side spatial non-stationarity via visibility regions.

Each cluster is declared non-stationary with a per-UE probability. A
non-stationary cluster gets a visibility probability from its power, a
rectangular visibility region anchored at a random array corner, and a
per-element power attenuation that decays exponentially outside the region.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

VP_FLOOR = 1e-3
# Overhangs and diagonals below this length (metres) are rounding noise.
EDGE_TOL = 1e-12


@dataclass(frozen=True)
class SnsScenarioParams:
    pr_mu: float = 0.49
    pr_sigma: float = 0.18
    vp_a: float = 0.12
    vp_b: float = 0.48
    vp_r: Optional[float] = 50.0
    vp_noise_var: float = 0.001
    rolloff: float = 13.0

    def __post_init__(self):
        if self.pr_sigma < 0 or self.vp_noise_var < 0:
            raise ValueError("spreads must be non-negative")
        if not 0.0 <= self.vp_b <= 1.0:
            raise ValueError("vp_b must lie in [0, 1]")
        if self.rolloff <= 0:
            raise ValueError("rolloff must be positive")
        if self.vp_a != 0 and (self.vp_r is None or self.vp_r <= 0):
            raise ValueError("vp_r is required and positive when vp_a != 0")


@dataclass(frozen=True)
class VisibilityRegion:
    """Rectangle inside the array plane, anchored at one array corner (metres)."""

    x0: float
    y0: float
    corner: int
    a: float
    b: float
    xa: float
    yb: float
    x_far: float
    y_far: float

    @property
    def diagonal(self) -> float:
        return float(np.hypot(self.x_far - self.xa, self.y_far - self.yb))


@dataclass
class ClusterVisibility:
    is_sns: bool
    vp: float = 1.0
    region: Optional[VisibilityRegion] = None
    alpha: Optional[np.ndarray] = None


def sample_sns_probability(params: SnsScenarioParams, rng: np.random.Generator) -> float:
    return float(np.clip(rng.normal(params.pr_mu, params.pr_sigma), 0.0, 1.0))


def classify_clusters(pr_sns: float, n_clusters: int, los: bool, rng: np.random.Generator) -> np.ndarray:
    """Bernoulli SNS flags; with ``los`` the direct path is appended as an extra entry."""
    if not 0.0 <= pr_sns <= 1.0:
        raise ValueError("pr_sns must lie in [0, 1]")
    x = rng.uniform(size=n_clusters + int(los))
    return x < pr_sns


def visibility_probability(p_db, p_max_db, params: SnsScenarioParams, rng: Optional[np.random.Generator] = None, xi=None):
    """Visibility probability from the power gap to the strongest cluster.

    ``xi`` overrides the Gaussian noise term; otherwise it is drawn from
    ``rng``. The result is clipped to ``[VP_FLOOR, 1]``.
    """
    p_db = np.asarray(p_db, dtype=float)
    if xi is None:
        xi = rng.normal(0.0, np.sqrt(params.vp_noise_var), size=p_db.shape)
    v = params.vp_b + np.asarray(xi, dtype=float)
    if params.vp_a != 0:
        v = v + params.vp_a * np.exp(-(p_max_db - p_db) / params.vp_r)
    return np.clip(v, VP_FLOOR, 1.0)


def generate_vr(vp: float, width: float, height: float, rng: np.random.Generator) -> VisibilityRegion:
    """Random rectangle of area ``vp * width * height`` anchored at a random corner."""
    if not 0.0 < vp <= 1.0:
        raise ValueError("vp must lie in (0, 1]")
    a = rng.uniform(vp * width, width) if width > 0 else 0.0
    b = vp * height * width / a if a > 0 else vp * height
    corner = int(rng.integers(4))
    return region_from_corner(corner, a, b, width, height)


def region_from_corner(corner: int, a: float, b: float, width: float, height: float) -> VisibilityRegion:
    """Corners are numbered (0,0), (W,0), (0,H), (W,H)."""
    x0 = width if corner in (1, 3) else 0.0
    y0 = height if corner in (2, 3) else 0.0
    sx = -1.0 if x0 > 0 else 1.0
    sy = -1.0 if y0 > 0 else 1.0
    return VisibilityRegion(
        x0=x0, y0=y0, corner=corner, a=a, b=b,
        xa=x0 + sx * a, yb=y0 + sy * b,
        x_far=width - x0, y_far=height - y0,
    )


def boundary_distance(xs, ys, region: VisibilityRegion) -> np.ndarray:
    """Distance from element coordinates to the nearest point of the region (0 inside)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    dx = np.maximum(np.abs(xs - region.x0) - region.a, 0.0)
    dy = np.maximum(np.abs(ys - region.y0) - region.b, 0.0)
    return np.hypot(dx, dy)


def attenuation_factor(xs, ys, region: VisibilityRegion, rolloff: float = 13.0) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    diag = region.diagonal
    if diag <= EDGE_TOL:
        return np.ones(np.broadcast(xs, ys).shape)
    d = boundary_distance(xs, ys, region)
    return np.where(d > EDGE_TOL, np.exp(-rolloff * d / diag), 1.0)


def attenuation_field(cluster: ClusterVisibility, coords: np.ndarray, rolloff: float = 13.0) -> np.ndarray:
    """Per-element attenuation for one cluster; ``coords`` has shape (S, 2)."""
    coords = np.asarray(coords, dtype=float)
    if not cluster.is_sns or cluster.region is None:
        return np.ones(coords.shape[0])
    return attenuation_factor(coords[:, 0], coords[:, 1], cluster.region, rolloff)


@dataclass
class StochasticSnsState:
    """Outcome of the stochastic SNS procedure for one drop."""

    pr_sns: float
    clusters: list = field(default_factory=list)
    los: Optional[ClusterVisibility] = None

    def alpha_matrix(self) -> np.ndarray:
        """NLOS attenuation, shape (N, S)."""
        return np.stack([c.alpha for c in self.clusters])


def generate_stochastic_sns(
    powers: np.ndarray,
    k_factor: float,
    los: bool,
    coords: np.ndarray,
    width: float,
    height: float,
    params: SnsScenarioParams,
    rng_class: np.random.Generator,
    rng_vr: np.random.Generator,
    post_k: bool = True,
) -> StochasticSnsState:
    """Classification, visibility regions and attenuation fields for one drop.

    ``powers`` are the NLOS-normalized cluster powers. With ``post_k`` the
    power gap is measured on K-scaled powers, with the direct path as a
    cluster of power ``K/(K+1)``; otherwise NLOS clusters are compared among
    themselves. The direct path always uses its own post-K power as maximum.
    """
    n = powers.size
    pr = sample_sns_probability(params, rng_class)
    flags = classify_clusters(pr, n, los, rng_class)

    if los and post_k:
        scale = 1.0 / (k_factor + 1.0)
        p_los = k_factor / (k_factor + 1.0)
        nlos_db = 10 * np.log10(powers * scale)
        p_max_db = max(float(nlos_db.max()), 10 * np.log10(p_los) if p_los > 0 else -np.inf)
    else:
        nlos_db = 10 * np.log10(powers)
        p_max_db = float(nlos_db.max())

    # Noise drawn for every cluster so the stream layout does not depend on flags.
    xi = rng_vr.normal(0.0, np.sqrt(params.vp_noise_var), size=n + int(los))
    state = StochasticSnsState(pr_sns=pr)
    for i in range(n):
        state.clusters.append(
            _cluster_visibility(flags[i], nlos_db[i], p_max_db, xi[i], coords, width, height, params, rng_vr)
        )
    if los:
        state.los = _cluster_visibility(flags[n], 0.0, 0.0, xi[n], coords, width, height, params, rng_vr)
    return state


def _cluster_visibility(is_sns, p_db, p_max_db, xi, coords, width, height, params, rng):
    if not is_sns:
        return ClusterVisibility(is_sns=False, alpha=np.ones(coords.shape[0]))
    vp = float(visibility_probability(p_db, p_max_db, params, xi=xi))
    region = generate_vr(vp, width, height, rng)
    vis = ClusterVisibility(is_sns=True, vp=vp, region=region)
    vis.alpha = attenuation_field(vis, coords, params.rolloff)
    return vis
