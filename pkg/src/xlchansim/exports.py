"""File exports: binary tap dumps, frequency responses and CSV rasters."""

from __future__ import annotations

import csv
import io
import struct

import numpy as np

from .synthesis import ChannelRealization

MAGIC = b"XLCH"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


def dump_taps(channel: ChannelRealization) -> bytes:
    """Binary tap dump.

    A 16-byte header (magic, version, U, S as little-endian u32) is followed
    by little-endian float64 triplets (delay s, re, im), link-major in
    (u, s) order and tap order within a link. Every link has the same tap
    count, which follows from the payload size.
    """
    c = channel.coefficients
    t, u, s = c.shape
    body = np.empty((u, s, t, 3), dtype="<f8")
    body[..., 0] = channel.delays[None, None, :]
    links = np.transpose(c, (1, 2, 0))
    body[..., 1] = links.real
    body[..., 2] = links.imag
    return _HEADER.pack(MAGIC, VERSION, u, s) + body.tobytes()


def load_taps(data: bytes) -> ChannelRealization:
    magic, version, u, s = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError("not a tap dump")
    if version != VERSION:
        raise ValueError(f"unsupported tap dump version {version}")
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if u * s == 0 or flat.size % (3 * u * s):
        raise ValueError("truncated tap dump")
    body = flat.reshape(u, s, -1, 3)
    coeffs = np.transpose(body[..., 1] + 1j * body[..., 2], (2, 0, 1))
    return ChannelRealization(delays=body[0, 0, :, 0].copy(), coefficients=coeffs)


def frequency_response(channel: ChannelRealization, frequencies) -> np.ndarray:
    """``H(f) = sum_k c_k exp(-j 2 pi f tau_k)`` at baseband offsets ``frequencies``, shape (F, U, S)."""
    f = np.asarray(frequencies, dtype=float)
    kernel = np.exp(-2j * np.pi * f[:, None] * channel.delays[None, :])
    return np.tensordot(kernel, channel.coefficients, axes=(1, 0))


def rows_to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def raster_csv(coords, values, name: str = "alpha") -> str:
    """Per-element raster with columns (x_m, y_m, <name>)."""
    coords = np.asarray(coords, dtype=float)
    values = np.asarray(values, dtype=float)
    return rows_to_csv(["x_m", "y_m", name], zip(coords[:, 0], coords[:, 1], values))
