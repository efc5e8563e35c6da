"""Scalar fields on a rectangular pixel grid, finite differences and PGM I/O.

Pixel ``(i, j)`` (row ``i``, column ``j``) sits at ``x = j * spacing``,
``y = i * spacing``.  Arrays are stored ``(height, width)``.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass

import numpy as np


class PGMError(ValueError):
    """Malformed or unsupported PGM data."""


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray
    spacing: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("field values must be a 2-D array")
        h, w = v.shape
        if w < 2 or h < 2:
            raise ValueError(f"field must be at least 2x2, got {w}x{h}")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError("spacing must be positive and finite")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape

    @property
    def area(self) -> float:
        """Domain area, counting each pixel as a ``spacing``-sized cell."""
        return self.width * self.height * self.spacing ** 2

    def coords(self):
        """Return ``(X, Y)`` coordinate arrays of the pixel centres."""
        ys = np.arange(self.height) * self.spacing
        xs = np.arange(self.width) * self.spacing
        return np.meshgrid(xs, ys)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(values, self.spacing)

    def metadata(self) -> dict:
        return {"width": self.width, "height": self.height, "spacing": self.spacing}

    @classmethod
    def from_function(cls, func, width, height, spacing=1.0, origin=(0.0, 0.0)):
        """Sample ``func(x, y)`` at pixel centres offset by ``origin``."""
        xs = origin[0] + np.arange(width) * spacing
        ys = origin[1] + np.arange(height) * spacing
        X, Y = np.meshgrid(xs, ys)
        return cls(np.broadcast_to(func(X, Y), X.shape).astype(float), spacing)


@dataclass(frozen=True)
class VectorField:
    """Per-pixel gradient components ``fx`` (along columns) and ``fy`` (along rows)."""

    fx: np.ndarray
    fy: np.ndarray
    spacing: float

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.fx, self.fy)

    def perp(self) -> "VectorField":
        """Rotate every vector by +pi/2, ``(a, b) -> (-b, a)``."""
        return VectorField(-self.fy, self.fx, self.spacing)


@dataclass(frozen=True)
class HessianField:
    fxx: np.ndarray
    fxy: np.ndarray
    fyy: np.ndarray
    spacing: float


def gradient(f: ScalarField) -> VectorField:
    """Central differences inside, one-sided differences on the border."""
    fy, fx = np.gradient(f.values, f.spacing, edge_order=1)
    return VectorField(fx, fy, f.spacing)


def _replicate_border(a: np.ndarray) -> np.ndarray:
    # interior stencil results are copied outwards to the border ring
    a[0, :] = a[1, :]
    a[-1, :] = a[-2, :]
    a[:, 0] = a[:, 1]
    a[:, -1] = a[:, -2]
    return a


def hessian(f: ScalarField) -> HessianField:
    """Second differences on the 5-point stencil (plus the 4-point mixed term).

    Border pixels take the value of their nearest interior neighbour, so any
    quadratic is differentiated exactly everywhere.
    """
    v = f.values
    h2 = f.spacing ** 2
    fxx = np.zeros_like(v)
    fyy = np.zeros_like(v)
    fxy = np.zeros_like(v)
    if v.shape[1] >= 3:
        fxx[:, 1:-1] = (v[:, 2:] - 2.0 * v[:, 1:-1] + v[:, :-2]) / h2
    if v.shape[0] >= 3:
        fyy[1:-1, :] = (v[2:, :] - 2.0 * v[1:-1, :] + v[:-2, :]) / h2
    if v.shape[0] >= 3 and v.shape[1] >= 3:
        fxy[1:-1, 1:-1] = (v[2:, 2:] - v[2:, :-2] - v[:-2, 2:] + v[:-2, :-2]) / (4.0 * h2)
    if v.shape[0] >= 3 and v.shape[1] >= 3:
        for a in (fxx, fyy, fxy):
            _replicate_border(a)
    return HessianField(fxx, fxy, fyy, f.spacing)


# --- PGM ------------------------------------------------------------------

_WS = b" \t\r\n\v\f"


def _read_header(data: bytes):
    """Parse magic, width, height, maxval. Returns (magic, w, h, maxval, offset)."""
    pos = 0
    tokens = []
    while len(tokens) < 4:
        while pos < len(data) and data[pos] in _WS:
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= len(data):
            raise PGMError(f"truncated header at byte offset {pos}")
        start = pos
        while pos < len(data) and data[pos] not in _WS and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append((data[start:pos], start))
    magic, moff = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise PGMError(f"unsupported magic {magic!r} at byte offset {moff}")
    vals = []
    for tok, off in tokens[1:]:
        if not re.fullmatch(rb"\d+", tok):
            raise PGMError(f"expected integer in header at byte offset {off}, got {tok!r}")
        vals.append(int(tok))
    w, h, maxval = vals
    if w == 0 or h == 0:
        raise ValueError(f"PGM has zero dimension ({w}x{h})")
    if not 0 < maxval <= 65535:
        raise PGMError(f"maxval {maxval} out of range at byte offset {tokens[3][1]}")
    return magic, w, h, maxval, pos


def load_pgm(path, spacing: float = 1.0) -> ScalarField:
    """Read a P2 or P5 graymap and normalise intensities to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, w, h, maxval, pos = _read_header(data)
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        need = w * h * dtype.itemsize
        raw = data[pos:pos + need]
        if len(raw) != need:
            raise PGMError(f"raster truncated at byte offset {pos + len(raw)}")
        pixels = np.frombuffer(raw, dtype=dtype).astype(float)
    else:
        body = data[pos:]
        body = re.sub(rb"#[^\r\n]*", b"", body)
        toks = body.split()
        if len(toks) < w * h:
            raise PGMError(f"raster truncated at byte offset {len(data)}")
        try:
            pixels = np.array([int(t) for t in toks[: w * h]], dtype=float)
        except ValueError as exc:
            raise PGMError(f"non-integer raster value after byte offset {pos}") from exc
    if pixels.max(initial=0) > maxval:
        raise PGMError("pixel value exceeds maxval")
    return ScalarField(pixels.reshape(h, w) / maxval, spacing)


def atomic_write_bytes(path, payload: bytes):
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_pgm(path, f: ScalarField, binary: bool = True):
    """Write ``f`` clamped to [0, 1] with maxval 255."""
    px = np.clip(np.rint(np.clip(f.values, 0.0, 1.0) * 255.0), 0, 255).astype(np.uint8)
    h, w = px.shape
    if binary:
        payload = b"P5\n%d %d\n255\n" % (w, h) + px.tobytes()
    else:
        rows = [" ".join(str(int(p)) for p in row) for row in px]
        payload = ("P2\n%d %d\n255\n" % (w, h) + "\n".join(rows) + "\n").encode()
    atomic_write_bytes(path, payload)
