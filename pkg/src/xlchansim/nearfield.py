"""Spherical-wave sources of clusters and element-wise near-field phases and angles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import speed_of_light

from .geometry import angles_from_vector


@dataclass(frozen=True)
class NearFieldParams:
    """Specular-cluster count and Beta shape of the BS-side scaling factor."""

    n_spec: int = 2
    beta_a: float = 1.53
    beta_b: float = 1.42

    def __post_init__(self):
        if self.n_spec < 0:
            raise ValueError("n_spec must be >= 0")
        if self.beta_a <= 0 or self.beta_b <= 0:
            raise ValueError("Beta shape parameters must be positive")


@dataclass
class SphericalSourceDistances:
    """Scaling factors per cluster (N,) and source distances per ray (N, M), metres."""

    specular: np.ndarray
    s_bs: np.ndarray
    s_ue: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    path_length: np.ndarray


def assign_specular_clusters(powers, n_spec: int) -> np.ndarray:
    """Indices of the ``n_spec`` strongest clusters, ties resolved towards lower index."""
    powers = np.asarray(powers)
    if n_spec > powers.size:
        raise ValueError("n_spec exceeds the number of clusters")
    return np.sort(np.argsort(-powers, kind="stable")[:n_spec])


def sample_scaling_factor_bs(is_specular, params: NearFieldParams, rng: np.random.Generator) -> np.ndarray:
    is_specular = np.asarray(is_specular, dtype=bool)
    s = np.ones(is_specular.shape)
    n_draw = int(np.count_nonzero(~is_specular))
    if n_draw:
        draws = rng.beta(params.beta_a, params.beta_b, size=n_draw)
        # Keep both sides of a non-specular split strictly positive.
        tiny = np.finfo(float).eps
        s[~is_specular] = np.clip(draws, tiny, 1.0 - tiny)
    return s


def scaling_factor_ue(s_bs, is_specular) -> np.ndarray:
    s_bs = np.asarray(s_bs, dtype=float)
    return np.where(np.asarray(is_specular, dtype=bool), 1.0, 1.0 - s_bs)


def source_distances(s, d_3d, delay, excess_delay=0.0):
    """Distance to the spherical-wave source: ``s * (d_3d + c * (delay + excess))``."""
    if np.any(np.asarray(d_3d) <= 0):
        raise ValueError("d_3d must be positive")
    return np.asarray(s) * (d_3d + speed_of_light * (np.asarray(delay) + excess_delay))


def generate_source_distances(clusters, d_3d: float, params: NearFieldParams, rng: np.random.Generator) -> SphericalSourceDistances:
    """Scaling factors per cluster and source distances per ray for one drop.

    Rays of a split cluster use their sub-cluster delay.
    """
    specular = np.zeros(clusters.n_clusters, dtype=bool)
    specular[assign_specular_clusters(clusters.powers, params.n_spec)] = True
    s_bs = sample_scaling_factor_bs(specular, params, rng)
    s_ue = scaling_factor_ue(s_bs, specular)
    ray_delays = clusters.ray_delays
    if ray_delays is None:
        ray_delays = np.repeat(clusters.delays[:, None], clusters.n_rays, axis=1)
    path = source_distances(1.0, d_3d, ray_delays, clusters.excess_delay)
    return SphericalSourceDistances(
        specular=specular,
        s_bs=s_bs,
        s_ue=s_ue,
        d1=s_bs[:, None] * path,
        d2=s_ue[:, None] * path,
        path_length=path,
    )


def element_direction_vector(d, r_hat, d_elem) -> np.ndarray:
    """Vector from an element to the spherical-wave source, ``d * r_hat - d_elem``.

    Broadcasts ``d`` (...), ``r_hat`` (..., 3) and ``d_elem`` (..., 3).
    """
    d = np.asarray(d, dtype=float)
    v = d[..., None] * np.asarray(r_hat, dtype=float) - np.asarray(d_elem, dtype=float)
    norm = np.linalg.norm(v, axis=-1)
    if np.any(norm <= 1e-12 * np.maximum(d, 1.0)):
        raise ValueError("source inside array")
    return v


def element_angles(d, r_hat, d_elem):
    """Element-wise (zenith, azimuth) towards the spherical-wave source."""
    return angles_from_vector(element_direction_vector(d, r_hat, d_elem))


def nearfield_phase_delta(d, r_hat, d_elem, wavelength: float) -> np.ndarray:
    """Unwrapped phase ``2 pi (d - |d r_hat - d_elem|) / wavelength``.

    Evaluated as ``(2 d r.d - |d|^2) / (d + |d r - d_elem|)``, which is exact
    algebraically and avoids cancellation when ``d`` is large.
    """
    d = np.asarray(d, dtype=float)
    r_hat = np.asarray(r_hat, dtype=float)
    d_elem = np.asarray(d_elem, dtype=float)
    v = element_direction_vector(d, r_hat, d_elem)
    dist = np.linalg.norm(v, axis=-1)
    proj = np.sum(r_hat * d_elem, axis=-1)
    sq = np.sum(d_elem * d_elem, axis=-1)
    return 2 * np.pi * (2 * d * proj - sq) / (d + dist) / wavelength


def farfield_phase(r_hat, d_elem, wavelength: float) -> np.ndarray:
    """Plane-wave array phase ``2 pi r_hat . d_elem / wavelength``."""
    return 2 * np.pi * np.sum(np.asarray(r_hat) * np.asarray(d_elem), axis=-1) / wavelength


def los_pairwise(tx_elem, rx_elem):
    """Exact distance and per-pair angles between TX and RX element positions.

    Returns ``(distance, zod, aod, zoa, aoa)`` where departure angles describe
    ``rx - tx`` and arrival angles its negation.
    """
    r = np.asarray(rx_elem, dtype=float) - np.asarray(tx_elem, dtype=float)
    dist = np.linalg.norm(r, axis=-1)
    if np.any(dist == 0):
        raise ValueError("coincident TX and RX elements")
    zod, aod = angles_from_vector(r)
    zoa, aoa = angles_from_vector(-r)
    return dist, zod, aod, zoa, aoa
