"""Array geometry, spherical basis vectors and antenna element field patterns.

Global frame: z points up, an unrotated panel has its boresight along +x,
columns run along +y and rows along +z.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class FieldPattern:
    """Element field pattern.

    ``kind`` is either ``"isotropic"`` or ``"tr38901"`` (the single-element
    directional envelope of TR 38.901 Table 7.3-1). Angles in degrees, gains
    in dB.
    """

    kind: str = "isotropic"
    max_gain_db: float = 8.0
    hpbw_v_deg: float = 65.0
    hpbw_h_deg: float = 65.0
    sla_v_db: float = 30.0
    a_max_db: float = 30.0

    def __post_init__(self):
        if self.kind not in ("isotropic", "tr38901"):
            raise ValueError(f"unknown field pattern kind {self.kind!r}")

    def power_gain_db(self, zenith, azimuth) -> np.ndarray:
        """Power gain in dB for local-frame angles given in radians."""
        zenith = np.asarray(zenith, dtype=float)
        azimuth = np.asarray(azimuth, dtype=float)
        if self.kind == "isotropic":
            return np.zeros(np.broadcast(zenith, azimuth).shape)
        theta_deg = np.degrees(zenith)
        phi_deg = np.degrees(wrap_angle(azimuth))
        a_v = -np.minimum(12.0 * ((theta_deg - 90.0) / self.hpbw_v_deg) ** 2, self.sla_v_db)
        a_h = -np.minimum(12.0 * (phi_deg / self.hpbw_h_deg) ** 2, self.a_max_db)
        return self.max_gain_db - np.minimum(-(a_v + a_h), self.a_max_db)

    def amplitude(self, zenith, azimuth) -> np.ndarray:
        return 10.0 ** (self.power_gain_db(zenith, azimuth) / 20.0)


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array, or an arbitrary element layout via ``offsets``.

    Positions are laid out row-major relative to ``reference_point``. With
    ``centered=False`` the first element sits on the reference point; with
    ``centered=True`` the array centre does. Dual-polarized arrays expose two
    co-located ports per position with slants ``slant +/- 45 deg``.
    """

    rows: int = 1
    cols: int = 1
    spacing_h: float = 0.0
    spacing_v: float = 0.0
    polarizations: int = 1
    reference_point: np.ndarray = field(default_factory=lambda: np.zeros(3))
    bearing: float = 0.0
    downtilt: float = 0.0
    slant: float = 0.0
    centered: bool = False
    pattern: FieldPattern = field(default_factory=FieldPattern)
    offsets: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be >= 1")
        if self.polarizations not in (1, 2):
            raise ValueError("polarizations must be 1 or 2")
        object.__setattr__(self, "reference_point", np.asarray(self.reference_point, dtype=float))
        if self.offsets is not None:
            offsets = np.atleast_2d(np.asarray(self.offsets, dtype=float))
            if offsets.shape[1] != 3:
                raise ValueError("offsets must have shape (n, 3)")
            object.__setattr__(self, "offsets", offsets)
            object.__setattr__(self, "rows", 1)
            object.__setattr__(self, "cols", offsets.shape[0])

    @property
    def width(self) -> float:
        if self.offsets is not None:
            return float(np.ptp(self.offsets[:, 1]))
        return (self.cols - 1) * self.spacing_h

    @property
    def height(self) -> float:
        if self.offsets is not None:
            return float(np.ptp(self.offsets[:, 2]))
        return (self.rows - 1) * self.spacing_v

    @property
    def n_positions(self) -> int:
        return self.rows * self.cols

    @property
    def n_ports(self) -> int:
        return self.n_positions * self.polarizations

    @property
    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.bearing, self.downtilt, self.slant)

    @property
    def port_slants(self) -> np.ndarray:
        """Polarization slant angle of each port within one position."""
        if self.polarizations == 1:
            return np.array([self.slant])
        return np.array([self.slant + np.pi / 4, self.slant - np.pi / 4])

    def local_offsets(self) -> np.ndarray:
        """Element offsets in the unrotated panel frame, shape (n_positions, 3)."""
        if self.offsets is not None:
            return self.offsets.copy()
        row, col = np.meshgrid(np.arange(self.rows), np.arange(self.cols), indexing="ij")
        local = np.stack(
            [np.zeros(row.size), col.ravel() * self.spacing_h, row.ravel() * self.spacing_v],
            axis=-1,
        )
        if self.centered:
            local[:, 1] -= self.width / 2
            local[:, 2] -= self.height / 2
        return local

    def plane_coords(self) -> np.ndarray:
        """Element (x_s, y_s) in the panel plane, measured from the lower-left corner.

        Horizontal coordinate spans [0, width], vertical spans [0, height].
        """
        local = self.local_offsets()
        return np.stack(
            [local[:, 1] - local[:, 1].min(), local[:, 2] - local[:, 2].min()], axis=-1
        )

    def to_local(self, vectors) -> np.ndarray:
        """Express global direction vectors in the panel frame."""
        return np.asarray(vectors) @ self.rotation


def rotation_matrix(bearing: float, downtilt: float, slant: float) -> np.ndarray:
    """Rz(bearing) @ Ry(downtilt) @ Rx(slant); positive downtilt points boresight down."""
    ca, sa = np.cos(bearing), np.sin(bearing)
    cb, sb = np.cos(downtilt), np.sin(downtilt)
    cg, sg = np.cos(slant), np.sin(slant)
    rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cg, -sg], [0.0, sg, cg]])
    return rz @ ry @ rx


def element_positions(geom: ArrayGeometry) -> np.ndarray:
    """Element offsets from the reference point in the global frame, row-major.

    Returns an array of shape (rows * cols, 3). Add ``geom.reference_point``
    for absolute coordinates.
    """
    return geom.local_offsets() @ geom.rotation.T


def spherical_unit_vector(zenith, azimuth) -> np.ndarray:
    zenith, azimuth = np.broadcast_arrays(
        np.asarray(zenith, dtype=float), np.asarray(azimuth, dtype=float)
    )
    st = np.sin(zenith)
    return np.stack([st * np.cos(azimuth), st * np.sin(azimuth), np.cos(zenith)], axis=-1)


def wrap_angle(angle):
    """Wrap to (-pi, pi]."""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2 * np.pi) - np.pi
    return np.where(wrapped <= -np.pi, wrapped + 2 * np.pi, wrapped)


def angles_from_vector(v):
    """Zenith and azimuth of a (batch of) direction vector(s).

    Azimuth is in (-pi, pi] and is defined as 0 on the z axis.
    """
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v, axis=-1)
    if np.any(norm == 0) or not np.all(np.isfinite(norm)):
        raise ValueError("degenerate direction")
    zenith = np.arccos(np.clip(v[..., 2] / norm, -1.0, 1.0))
    x, y = v[..., 0], v[..., 1]
    azimuth = np.arctan2(y, x)
    azimuth = np.where((x == 0) & (y == 0), 0.0, azimuth)
    azimuth = np.where(azimuth <= -np.pi, azimuth + 2 * np.pi, azimuth)
    return zenith, azimuth


def field_pattern(p: FieldPattern, zenith, azimuth, slant):
    """Polarized field components (F_theta, F_phi) for local-frame angles.

    Uses the slant-angle polarization model: the element's power pattern is
    split over the spherical basis according to the slant.
    """
    amp = p.amplitude(zenith, azimuth)
    slant = np.asarray(slant, dtype=float)
    return amp * np.cos(slant), amp * np.sin(slant)


def fraunhofer_distance(aperture: float, wavelength: float) -> float:
    if aperture <= 0 or wavelength <= 0:
        raise ValueError("aperture and wavelength must be positive")
    return 2.0 * aperture**2 / wavelength
