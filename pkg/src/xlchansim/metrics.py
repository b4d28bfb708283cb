"""Capacity, coupling loss and empirical CDFs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss ``intercept + 10 * exponent * log10(d_3d)`` with lognormal shadowing."""

    intercept_db: float
    exponent: float
    shadowing_std_db: float = 0.0
    kind: str = "log-distance"

    def __post_init__(self):
        if self.exponent <= 0:
            raise ValueError("path-loss exponent must be positive")

    def path_loss_db(self, d_3d: float) -> float:
        return self.intercept_db + 10.0 * self.exponent * np.log10(d_3d)

    def sample_shadowing_db(self, rng: np.random.Generator) -> float:
        return float(rng.normal(0.0, self.shadowing_std_db))


@dataclass
class MetricSample:
    ue_id: int
    mode: str
    capacity: float
    coupling_loss_db: float


def capacity(h, snr: float) -> float:
    """Equal-power capacity ``log2 det(I + snr/S H H^H)`` in bit/s/Hz."""
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise ValueError("channel matrix has non-finite entries")
    if snr <= 0:
        raise ValueError("snr must be positive")
    s = h.shape[1]
    eig = np.linalg.eigvalsh(h @ h.conj().T)
    return float(np.sum(np.log2(1.0 + snr / s * np.maximum(eig, 0.0))))


def normalize_channel(h) -> np.ndarray:
    """Scale ``h`` to unit mean sublink power, ``||h||_F^2 = U * S``."""
    h = np.asarray(h)
    power = np.sum(np.abs(h) ** 2)
    if power == 0:
        return h
    return h * np.sqrt(h.size / power)


def coupling_loss(coefficients, pl_db: float, sf_db: float = 0.0) -> float:
    """Mean sublink gain in dB including path loss and shadowing.

    ``coefficients`` has shape (taps, U, S) or (U, S). An all-zero channel
    returns ``-inf``.
    """
    c = np.asarray(coefficients)
    if c.ndim == 2:
        c = c[None]
    if c.shape[1] * c.shape[2] == 0:
        raise ValueError("need at least one sublink")
    power = np.mean(np.sum(np.abs(c) ** 2, axis=0))
    with np.errstate(divide="ignore"):
        return float(10.0 * np.log10(power) - pl_db - sf_db)


def aggregate_cdf(samples):
    """Sorted values and their empirical probabilities ``(i - 0.5) / n``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("cannot build a CDF from no samples")
    return x, (np.arange(1, x.size + 1) - 0.5) / x.size
