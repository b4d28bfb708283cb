"""Channel coefficient synthesis for far-field and near-field modes.

``nlos_ray_coefficient`` and ``los_coefficient`` evaluate one (u, s) pair at
a time and read like the coefficient formulas; ``assemble_cir`` is the
vectorized path used by the simulator and is tested against them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.constants import speed_of_light

from .geometry import ArrayGeometry, FieldPattern, angles_from_vector, element_positions, spherical_unit_vector
from .nearfield import SphericalSourceDistances, farfield_phase, los_pairwise, nearfield_phase_delta
from .smallscale import ClusterSet

LOS_POLARIZATION = np.array([[1.0, 0.0], [0.0, -1.0]])


def polarization_matrix(xpr, phases) -> np.ndarray:
    """2x2 polarization matrices; ``phases[..., :]`` is (tt, tp, pt, pp)."""
    xpr = np.asarray(xpr, dtype=float)
    phases = np.asarray(phases, dtype=float)
    cross = np.sqrt(1.0 / xpr)
    out = np.empty(xpr.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(1j * phases[..., 0])
    out[..., 0, 1] = cross * np.exp(1j * phases[..., 1])
    out[..., 1, 0] = cross * np.exp(1j * phases[..., 2])
    out[..., 1, 1] = np.exp(1j * phases[..., 3])
    return out


def doppler_term(r_hat_rx, velocity, t: float, wavelength: float):
    return np.exp(2j * np.pi * np.sum(np.asarray(r_hat_rx) * np.asarray(velocity), axis=-1) * t / wavelength)


@dataclass
class DropConfig:
    """Link-level inputs of one drop. Positions are array reference points."""

    bs_position: np.ndarray
    ue_position: np.ndarray
    wavelength: float
    k_factor: float = 0.0
    los: bool = True
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t: float = 0.0
    near_field: bool = False

    def __post_init__(self):
        self.bs_position = np.asarray(self.bs_position, dtype=float)
        self.ue_position = np.asarray(self.ue_position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        if self.d_3d <= 0:
            raise ValueError("BS and UE reference points coincide")
        if self.k_factor < 0:
            raise ValueError("k_factor must be non-negative")

    @property
    def d_3d(self) -> float:
        return float(np.linalg.norm(self.ue_position - self.bs_position))

    @property
    def los_direction(self) -> np.ndarray:
        """Unit vector from the BS towards the UE."""
        return (self.ue_position - self.bs_position) / self.d_3d

    def los_angles(self):
        """(aod, aoa, zod, zoa) of the direct path in radians."""
        zod, aod = angles_from_vector(self.los_direction)
        zoa, aoa = angles_from_vector(-self.los_direction)
        return float(aod), float(aoa), float(zod), float(zoa)


@dataclass
class ChannelRealization:
    """Tap list of a U x S link: ``coefficients[k]`` is the tap at ``delays[k]``."""

    delays: np.ndarray
    coefficients: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.coefficients.shape[1:]

    def narrowband(self) -> np.ndarray:
        """Delay-integrated U x S matrix."""
        return self.coefficients.sum(axis=0)

    def sublink_power(self) -> np.ndarray:
        return np.sum(np.abs(self.coefficients) ** 2, axis=0)


def _port_basis(geom: ArrayGeometry) -> np.ndarray:
    """(ports, 2) unit polarization vectors along (theta, phi)."""
    slants = geom.port_slants
    return np.stack([np.cos(slants), np.sin(slants)], axis=-1)


def _pattern_amplitude(geom: ArrayGeometry, vectors) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=float)
    if geom.pattern.kind == "isotropic":
        return np.ones(vectors.shape[:-1])
    zen, az = angles_from_vector(geom.to_local(vectors))
    return geom.pattern.amplitude(zen, az)


def _element_side(geom: ArrayGeometry, r_hat, dist, wavelength, near: bool):
    """Array response of rays ``r_hat`` (R, 3) at every element: (R, P) complex."""
    offsets = element_positions(geom)
    if near:
        v = dist[:, None, None] * r_hat[:, None, :] - offsets[None, :, :]
        phase = nearfield_phase_delta(dist[:, None], r_hat[:, None, :], offsets[None, :, :], wavelength)
        gain = _pattern_amplitude(geom, v)
    else:
        phase = farfield_phase(r_hat[:, None, :], offsets[None, :, :], wavelength)
        gain = _pattern_amplitude(geom, r_hat)[:, None]
    return gain * np.exp(1j * phase)


def _expand_ports(h: np.ndarray, n_rx_pol: int, n_tx_pol: int) -> np.ndarray:
    """(Q, Prx, P, Ptx) -> (Q * Prx, P * Ptx), position-major port order."""
    q, _, p, _ = h.shape
    return h.reshape(q * n_rx_pol, p * n_tx_pol)


def nlos_coefficients(
    drop: DropConfig,
    clusters: ClusterSet,
    bs: ArrayGeometry,
    ue: ArrayGeometry,
    nf: Optional[SphericalSourceDistances] = None,
    alpha: Optional[np.ndarray] = None,
):
    """NLOS taps before the Ricean weighting: ``(tap_delays_rel, coeffs (T, U, S))``.

    ``alpha`` broadcasts to (N, M, P_bs) over BS positions.
    """
    if clusters.tap_index is None:
        raise ValueError("clusters must be split into sub-clusters first")
    n, m = clusters.n_clusters, clusters.n_rays
    lam = drop.wavelength
    near = drop.near_field
    if near and nf is None:
        raise ValueError("near-field synthesis needs spherical source distances")
    if nf is not None and nf.d1.shape != (n, m):
        raise ValueError("cluster counts differ between small-scale and near-field parameters")

    ang = clusters.angles
    r_tx = spherical_unit_vector(ang.zod, ang.aod).reshape(-1, 3)
    r_rx = spherical_unit_vector(ang.zoa, ang.aoa).reshape(-1, 3)
    d1 = nf.d1.reshape(-1) if near else None
    d2 = nf.d2.reshape(-1) if near else None

    w_tx = _element_side(bs, r_tx, d1, lam, near)
    w_rx = _element_side(ue, r_rx, d2, lam, near)
    if alpha is not None:
        n_pos = bs.n_positions
        alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (n, m, n_pos)).reshape(-1, n_pos)
        w_tx = w_tx * np.sqrt(alpha)

    amp = np.sqrt(np.repeat(clusters.powers, m) / m)
    amp = amp * doppler_term(r_rx, drop.velocity, drop.t, lam)

    chi_tx = _port_basis(bs)
    chi_rx = _port_basis(ue)
    phi = polarization_matrix(clusters.xpr, clusters.phases).reshape(-1, 2, 2)
    kern = np.einsum("ai,rij,bj->rab", chi_rx, phi, chi_tx)

    tap = clusters.tap_index.reshape(-1)
    n_taps = clusters.tap_delays.size
    q, p = w_rx.shape[1], w_tx.shape[1]
    prx, ptx = chi_rx.shape[0], chi_tx.shape[0]
    out = np.zeros((n_taps, q, prx, p, ptx), dtype=complex)
    order = np.argsort(tap, kind="stable")
    bounds = np.searchsorted(tap[order], np.arange(n_taps + 1))
    for k in range(n_taps):
        rays = order[bounds[k]:bounds[k + 1]]
        left = (amp[rays, None, None, None] * w_rx[rays, :, None, None] * kern[rays, None, :, :])
        for b in range(ptx):
            lb = left[..., b].reshape(rays.size, q * prx).T
            out[k, :, :, :, b] = (lb @ w_tx[rays]).reshape(q, prx, p)
    coeffs = out.reshape(n_taps, q * prx, p * ptx)
    return clusters.tap_delays.copy(), coeffs


def los_matrix(drop: DropConfig, bs: ArrayGeometry, ue: ArrayGeometry, alpha: Optional[np.ndarray] = None) -> np.ndarray:
    """Direct-path coefficient matrix (U, S) before the Ricean weighting."""
    lam = drop.wavelength
    bs_off = element_positions(bs)
    ue_off = element_positions(ue)
    r_tx = drop.los_direction
    r_rx = -r_tx
    d3d = drop.d_3d
    if drop.near_field:
        tx = drop.bs_position + bs_off
        rx = drop.ue_position + ue_off
        dist, *_ = los_pairwise(tx[None, :, :], rx[:, None, :])
        vec = rx[:, None, :] - tx[None, :, :]
        g_tx = _pattern_amplitude(bs, vec)
        g_rx = _pattern_amplitude(ue, -vec)
        h = g_rx * g_tx * np.exp(-2j * np.pi * d3d / lam) * np.exp(-2j * np.pi * (dist - d3d) / lam)
    else:
        g_tx = _pattern_amplitude(bs, r_tx)
        g_rx = _pattern_amplitude(ue, r_rx)
        ph_tx = farfield_phase(r_tx, bs_off, lam)
        ph_rx = farfield_phase(r_rx, ue_off, lam)
        h = (g_rx * g_tx * np.exp(-2j * np.pi * d3d / lam)
             * np.exp(1j * ph_rx)[:, None] * np.exp(1j * ph_tx)[None, :])
    h = h * doppler_term(r_rx, drop.velocity, drop.t, lam)
    if alpha is not None:
        h = h * np.sqrt(np.asarray(alpha, dtype=float))[None, :]
    kern = _port_basis(ue) @ LOS_POLARIZATION @ _port_basis(bs).T
    full = h[:, None, :, None] * kern[None, :, None, :]
    return _expand_ports(full, kern.shape[0], kern.shape[1])


def assemble_cir(
    drop: DropConfig,
    clusters: ClusterSet,
    bs: ArrayGeometry,
    ue: ArrayGeometry,
    nf: Optional[SphericalSourceDistances] = None,
    alpha_nlos: Optional[np.ndarray] = None,
    alpha_los: Optional[np.ndarray] = None,
    beta: Optional[np.ndarray] = None,
    metadata: Optional[dict] = None,
) -> ChannelRealization:
    """Full tap list with the Ricean combination of direct and scattered parts.

    ``alpha_nlos`` broadcasts to (N, M, P_bs) and ``alpha_los`` to (P_bs,)
    over BS element positions; ``beta`` has one entry per UE port. The direct
    path, when present with K > 0, is the first tap.
    """
    k = drop.k_factor if drop.los else 0.0
    tau_rel, nlos = nlos_coefficients(drop, clusters, bs, ue, nf, alpha_nlos)
    nlos *= np.sqrt(1.0 / (k + 1.0))
    base = drop.d_3d / speed_of_light + clusters.excess_delay
    delays = base + tau_rel
    coeffs = nlos
    if drop.los and k > 0:
        los = np.sqrt(k / (k + 1.0)) * los_matrix(drop, bs, ue, alpha_los)
        delays = np.concatenate([[base + clusters.delays[0]], delays])
        coeffs = np.concatenate([los[None], nlos], axis=0)
    if beta is not None:
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (coeffs.shape[1],):
            raise ValueError("beta needs one entry per UE port")
        coeffs = coeffs * np.sqrt(beta)[None, :, None]
    meta = {"near_field": drop.near_field, "t": drop.t}
    meta.update(metadata or {})
    return ChannelRealization(delays=delays, coefficients=coeffs, metadata=meta)


def nlos_ray_coefficient(
    mode: str,
    *,
    power: float,
    n_rays: int,
    xpr: float,
    phases,
    zod: float,
    aod: float,
    zoa: float,
    aoa: float,
    d_tx,
    d_rx,
    wavelength: float,
    slant_tx: float = 0.0,
    slant_rx: float = 0.0,
    pattern_tx: FieldPattern = FieldPattern(),
    pattern_rx: FieldPattern = FieldPattern(),
    rot_tx=np.eye(3),
    rot_rx=np.eye(3),
    d1: Optional[float] = None,
    d2: Optional[float] = None,
    alpha: float = 1.0,
    beta: float = 1.0,
    velocity=np.zeros(3),
    t: float = 0.0,
) -> complex:
    """Coefficient of one ray between TX element offset ``d_tx`` and RX offset ``d_rx``."""
    r_tx = spherical_unit_vector(zod, aod)
    r_rx = spherical_unit_vector(zoa, aoa)
    d_tx = np.asarray(d_tx, dtype=float)
    d_rx = np.asarray(d_rx, dtype=float)
    if mode == "far":
        dir_tx, dir_rx = r_tx, r_rx
        phase = (np.exp(2j * np.pi * (r_rx @ d_rx) / wavelength)
                 * np.exp(2j * np.pi * (r_tx @ d_tx) / wavelength))
    elif mode == "near":
        dir_tx = d1 * r_tx - d_tx
        dir_rx = d2 * r_rx - d_rx
        phase = (np.exp(2j * np.pi * (d2 - np.linalg.norm(dir_rx)) / wavelength)
                 * np.exp(2j * np.pi * (d1 - np.linalg.norm(dir_tx)) / wavelength))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    f_tx = _field_vector(pattern_tx, np.asarray(rot_tx), dir_tx, slant_tx)
    f_rx = _field_vector(pattern_rx, np.asarray(rot_rx), dir_rx, slant_rx)
    pol = polarization_matrix(xpr, phases)
    return complex(
        np.sqrt(beta * alpha) * np.sqrt(power / n_rays) * (f_rx @ pol @ f_tx) * phase
        * doppler_term(r_rx, velocity, t, wavelength)
    )


def los_coefficient(
    mode: str,
    *,
    tx_ref,
    rx_ref,
    d_tx,
    d_rx,
    wavelength: float,
    slant_tx: float = 0.0,
    slant_rx: float = 0.0,
    pattern_tx: FieldPattern = FieldPattern(),
    pattern_rx: FieldPattern = FieldPattern(),
    rot_tx=np.eye(3),
    rot_rx=np.eye(3),
    alpha: float = 1.0,
    beta: float = 1.0,
    velocity=np.zeros(3),
    t: float = 0.0,
) -> complex:
    """Direct-path coefficient of one element pair (no Ricean weighting)."""
    tx_ref = np.asarray(tx_ref, dtype=float)
    rx_ref = np.asarray(rx_ref, dtype=float)
    d3d = np.linalg.norm(rx_ref - tx_ref)
    r_tx = (rx_ref - tx_ref) / d3d
    r_rx = -r_tx
    if mode == "far":
        dir_tx, dir_rx = r_tx, r_rx
        phase = (np.exp(-2j * np.pi * d3d / wavelength)
                 * np.exp(2j * np.pi * (r_rx @ np.asarray(d_rx)) / wavelength)
                 * np.exp(2j * np.pi * (r_tx @ np.asarray(d_tx)) / wavelength))
    elif mode == "near":
        r_us = (rx_ref + np.asarray(d_rx)) - (tx_ref + np.asarray(d_tx))
        dir_tx, dir_rx = r_us, -r_us
        phase = (np.exp(-2j * np.pi * d3d / wavelength)
                 * np.exp(-2j * np.pi * (np.linalg.norm(r_us) - d3d) / wavelength))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    f_tx = _field_vector(pattern_tx, np.asarray(rot_tx), dir_tx, slant_tx)
    f_rx = _field_vector(pattern_rx, np.asarray(rot_rx), dir_rx, slant_rx)
    return complex(
        np.sqrt(beta * alpha) * (f_rx @ LOS_POLARIZATION @ f_tx) * phase
        * doppler_term(r_rx, velocity, t, wavelength)
    )


def _field_vector(pattern: FieldPattern, rot, direction, slant) -> np.ndarray:
    zen, az = angles_from_vector(np.asarray(direction) @ rot)
    amp = float(pattern.amplitude(zen, az))
    return np.array([amp * np.cos(slant), amp * np.sin(slant)])
