"""Physical blocker-based spatial non-stationarity.

Blockers are rectangular screens. For every (ray, BS element) pair the screen
is turned about its centre so that it faces the ray, and the four-edge
knife-edge model gives the loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BLOCKER_KINDS = ("billboard", "street_lamp", "building_edge", "pillar")
EDGES = ("h1", "h2", "w1", "w2")


@dataclass(frozen=True)
class Blocker:
    """Rectangular screen of width ``w`` and height ``h`` (metres).

    ``edge`` selects the diffracting edge of a ``building_edge`` blocker; the
    building then occupies the half-plane on the inner side of that edge.
    """

    kind: str
    center: np.ndarray
    w: float
    h: float
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    edge: str = "w1"

    def __post_init__(self):
        if self.kind not in BLOCKER_KINDS:
            raise ValueError(f"unknown blocker kind {self.kind!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError("blocker width and height must be positive")
        if self.edge not in EDGES:
            raise ValueError(f"unknown edge {self.edge!r}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "velocity", np.asarray(self.velocity, dtype=float))

    def center_at(self, t: float = 0.0) -> np.ndarray:
        return self.center + self.velocity * t


@dataclass
class EdgeDiffraction:
    f_h1: np.ndarray
    f_h2: np.ndarray
    f_w1: np.ndarray
    f_w2: np.ndarray


def screen_frame(direction):
    """Orthonormal (e_w, e_h, normal) with the normal along ``direction``.

    e_w is horizontal; for vertical directions the global x axis is used.
    Broadcasts over leading dimensions.
    """
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("zero ray direction")
    n = d / norm
    e_w = np.cross(np.array([0.0, 0.0, 1.0]), n)
    w_norm = np.linalg.norm(e_w, axis=-1, keepdims=True)
    vertical = w_norm[..., 0] < 1e-12
    e_w = np.where(vertical[..., None], np.array([1.0, 0.0, 0.0]), e_w / np.where(w_norm == 0, 1.0, w_norm))
    e_h = np.cross(n, e_w)
    return e_w, e_h, n


def rotate_screen(blocker: Blocker, direction, t: float = 0.0) -> np.ndarray:
    """Corner points (4, 3) of the screen turned to face ``direction``.

    Order: (-w/2,-h/2), (+w/2,-h/2), (+w/2,+h/2), (-w/2,+h/2) in screen axes.
    """
    e_w, e_h, _ = screen_frame(direction)
    c = blocker.center_at(t)
    signs = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    return c + signs[:, :1] * e_w * blocker.w / 2 + signs[:, 1:] * e_h * blocker.h / 2


def edge_factor(d1, d2, r, wavelength: float, shadowed) -> np.ndarray:
    """Single-edge knife-edge term ``atan(+-pi/2 sqrt(pi/lambda (D1+D2-r))) / pi``."""
    excess = np.maximum(np.asarray(d1) + np.asarray(d2) - np.asarray(r), 0.0)
    sign = np.where(np.asarray(shadowed, dtype=bool), 1.0, -1.0)
    return np.arctan(sign * np.pi / 2 * np.sqrt(np.pi / wavelength * excess)) / np.pi


def edge_diffraction(tx, rx, blocker: Blocker, wavelength: float, t: float = 0.0):
    """Four edge factors for TX points ``tx`` (..., 3) and receiver ``rx`` (..., 3).

    The screen faces the ``rx - tx`` direction. Returns ``(EdgeDiffraction,
    between)`` where ``between`` flags pairs whose segment crosses the screen
    plane strictly between the end points.
    """
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    ray = rx - tx
    e_w, e_h, n = screen_frame(ray)
    c = blocker.center_at(t)

    r = np.linalg.norm(ray, axis=-1)
    # The screen is normal to the ray, so the crossing parameter is a projection.
    s = np.sum((c - tx) * n, axis=-1) / r
    between = (s > 0) & (s < 1)
    cross = tx + s[..., None] * ray
    pw = np.sum((cross - c) * e_w, axis=-1)
    ph = np.sum((cross - c) * e_h, axis=-1)

    half_w, half_h = blocker.w / 2, blocker.h / 2

    def term(offset_w, offset_h, shadowed):
        edge = c + offset_w[..., None] * e_w + offset_h[..., None] * e_h
        d1 = np.linalg.norm(edge - tx, axis=-1)
        d2 = np.linalg.norm(rx - edge, axis=-1)
        return edge_factor(d1, d2, r, wavelength, shadowed)

    ones = np.ones_like(pw)
    diff = EdgeDiffraction(
        f_h1=term(pw, -half_h * ones, ph > -half_h),
        f_h2=term(pw, half_h * ones, ph < half_h),
        f_w1=term(-half_w * ones, ph, pw > -half_w),
        f_w2=term(half_w * ones, ph, pw < half_w),
    )
    return diff, between


def combine_edges(diff: EdgeDiffraction, kind: str = "billboard", edge: str = "w1"):
    """Loss in dB from edge factors; ``inf`` marks total blockage."""
    if kind == "building_edge":
        arg = 0.5 - getattr(diff, f"f_{edge}")
    else:
        arg = 1.0 - (diff.f_h1 + diff.f_h2) * (diff.f_w1 + diff.f_w2)
    arg = np.asarray(arg, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(arg > 0, -20.0 * np.log10(np.where(arg > 0, arg, 1.0)), np.inf)


def blocker_loss_db(tx, rx, blocker: Blocker, wavelength: float, t: float = 0.0) -> np.ndarray:
    """Knife-edge loss of one blocker for element(s) ``tx`` towards ``rx``.

    Pairs whose segment does not cross the screen plane are unobstructed and
    get exactly 0 dB.
    """
    diff, between = edge_diffraction(tx, rx, blocker, wavelength, t)
    loss = combine_edges(diff, blocker.kind, blocker.edge)
    return np.where(between, loss, 0.0)


def scene_loss_db(scene, tx, rx, wavelength: float, t: float = 0.0) -> np.ndarray:
    """Total loss over all blockers, summed in dB."""
    shape = np.broadcast_shapes(np.shape(tx), np.shape(rx))[:-1]
    total = np.zeros(shape)
    for blocker in scene:
        total = total + blocker_loss_db(tx, rx, blocker, wavelength, t)
    return total


def scene_attenuation(scene, tx, rx, wavelength: float, t: float = 0.0) -> np.ndarray:
    """Linear power factor ``10^(-L/10)`` of the whole scene."""
    return 10.0 ** (-scene_loss_db(scene, tx, rx, wavelength, t) / 10.0)
