"""Synthetic scenes with exactly known boundary currents and closed-form values."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .currents import Polyline, PolylineCurrent
from .field import ScalarField

KINDS = ("disc_pack", "sawtooth_edge", "semicircle_bumps", "road_intersection", "step_edge")
ARC_SEGMENTS = 64
MIN_DISC_PIXELS = 8


@dataclass(frozen=True)
class SceneSpec:
    """What to draw.

    Sizes are fractions of the unit square.  ``edge_width`` is the width of
    the smooth step in pixels; ``noise`` is the fraction of pixels replaced by
    impulse noise drawn from ``seed``.
    """

    kind: str
    n: int = 2
    theta: float = np.pi / 6
    resolution: int = 256
    contrast: float = 1.0
    background: str = "flat"
    edge_width: float = 2.0
    road_width: float = 0.2
    swap: bool = False
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scene kind {self.kind!r}; valid kinds: {', '.join(KINDS)}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be an integer >= 1")
        if self.kind == "sawtooth_edge" and not (0 < self.theta < np.pi / 2):
            raise ValueError("sawtooth angle must lie in (0, pi/2)")
        if self.resolution < 8:
            raise ValueError("resolution must be at least 8")
        if not (0 < self.contrast <= 1):
            raise ValueError("contrast must lie in (0, 1]")
        if self.background not in ("flat", "ramp"):
            raise ValueError("background must be 'flat' or 'ramp'")
        if not self.edge_width >= 0:
            raise ValueError("edge_width must be non-negative")
        if not (0 < self.road_width < 1):
            raise ValueError("road_width must lie in (0, 1)")
        if not (0 <= self.noise < 1):
            raise ValueError("noise must lie in [0, 1)")


@dataclass(frozen=True)
class AnalyticValues:
    """Published closed forms next to values derived here.

    ``reference`` holds the published formulas evaluated at the scene
    parameters.  Some of them assume a unit-multiplicity fill and do not
    match the curvature current built here.  ``oracle`` holds this
    package's own derivations (and, when requested, LP values).
    """

    kind: str
    reference: dict
    oracle: dict
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"kind": self.kind, "reference": dict(self.reference),
                "oracle": dict(self.oracle), "metadata": dict(self.metadata)}


class Scene(NamedTuple):
    image: ScalarField
    current: PolylineCurrent
    values: AnalyticValues
    clean: ScalarField


def _step(d: np.ndarray, width_units: float) -> np.ndarray:
    """Smooth indicator of ``d < 0``."""
    if width_units <= 0:
        return (d < 0).astype(float)
    return 0.5 * (1.0 - np.tanh(d / width_units))


def _grid(res: int):
    h = 1.0 / (res - 1)
    x, y = np.meshgrid(np.arange(res) * h, np.arange(res) * h)
    return h, x, y


def _background(spec: SceneSpec, x, y) -> np.ndarray:
    if spec.background == "flat":
        return np.zeros_like(x)
    return 0.2 + 0.3 * x + 0.1 * np.sin(np.pi * y)


def circle_polyline(cx: float, cy: float, r: float, segments: int = ARC_SEGMENTS,
                    multiplicity: float = 1.0) -> Polyline:
    t = 2 * np.pi * np.arange(segments) / segments
    return Polyline(np.c_[cx + r * np.cos(t), cy + r * np.sin(t)], True, multiplicity)


def arc_polyline(cx: float, cy: float, r: float, segments: int = ARC_SEGMENTS) -> Polyline:
    """Upper semicircle traversed from the left end to the right end."""
    t = np.linspace(np.pi, 0.0, segments + 1)
    return Polyline(np.c_[cx + r * np.cos(t), cy + r * np.sin(t)], False)


def disc_pack_layout(n: int):
    """Centres and radius of ``n^2`` discs: cell ``1/n``, radius a quarter cell."""
    c = (np.arange(n) + 0.5) / n
    cx, cy = np.meshgrid(c, c)
    return np.c_[cx.ravel(), cy.ravel()], 0.25 / n


def sawtooth_vertices(n: int, theta: float, teeth_width: float = 0.4):
    """Lead-in, ``n`` teeth at slopes ``+-theta/2``, lead-out, centred on y = 1/2.

    Every corner between teeth turns by ``theta``; the first and last turn
    ``theta/2``.  Lead-ins have the tooth length, clipped to the unit square.
    """
    dx = teeth_width / n
    s = dx / np.cos(theta / 2)
    amp = dx * np.tan(theta / 2)
    x0 = 0.5 - teeth_width / 2
    lead = min(s, x0 - 1e-3)
    xs = x0 + dx * np.arange(n + 1)
    ys = 0.5 + amp * (np.arange(n + 1) % 2)
    pts = np.c_[xs, ys]
    pts = np.vstack([[x0 - lead, 0.5], pts, [pts[-1, 0] + lead, pts[-1, 1]]])
    return pts, s, lead


def _sawtooth_height(x: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return np.interp(x, pts[:, 0], pts[:, 1], left=pts[0, 1], right=pts[-1, 1])


def road_segments(width: float = 0.2, swap: bool = False) -> PolylineCurrent:
    """Eight edge segments of a light cross of roads; the road lies to the left."""
    lo, hi = 0.5 - width / 2, 0.5 + width / 2
    horiz = [
        ((0.0, lo), (lo, lo)), ((hi, lo), (1.0, lo)),        # lower edge, heading +x
        ((1.0, hi), (hi, hi)), ((lo, hi), (0.0, hi)),        # upper edge, heading -x
    ]
    vert = [
        ((hi, 0.0), (hi, lo)), ((hi, hi), (hi, 1.0)),        # right edge, heading +y
        ((lo, 1.0), (lo, hi)), ((lo, lo), (lo, 0.0)),        # left edge, heading -y
    ]
    segs = vert + horiz if swap else horiz + vert
    return PolylineCurrent(Polyline(np.array(s), False) for s in segs)


def _impulse(v: np.ndarray, frac: float, rng: np.random.Generator) -> np.ndarray:
    if frac <= 0:
        return v
    out = v.copy()
    hit = rng.random(v.shape) < frac
    out[hit] = rng.integers(0, 2, hit.sum()).astype(float)
    return out


def generate(spec: SceneSpec, oracle: bool = False) -> Scene:
    """Render ``spec`` and return ``(image, analytic current, values, clean background)``.

    With ``oracle`` the flat norms are also solved as LPs on a fine complex.
    """
    res = spec.resolution
    h, x, y = _grid(res)
    w = spec.edge_width * h
    bg = _background(spec, x, y)
    n = int(spec.n)
    rng = np.random.default_rng(spec.seed)
    meta = {"resolution": res, "spacing": h, "edge_width_px": spec.edge_width,
            "background": spec.background, "contrast": spec.contrast}

    if spec.kind == "disc_pack":
        centres, r = disc_pack_layout(n)
        if 2 * r / h < MIN_DISC_PIXELS:
            raise ValueError(f"resolution {res} gives {2 * r / h:.2f} pixels across a disc; "
                             f"need at least {MIN_DISC_PIXELS} (resolution >= {int(np.ceil(MIN_DISC_PIXELS * 2 * n)) + 1})")
        ind = np.zeros_like(x)
        for cx, cy in centres:
            ind = np.maximum(ind, _step(np.hypot(x - cx, y - cy) - r, w))
        cur = PolylineCurrent(circle_polyline(cx, cy, r) for cx, cy in centres)
        ref = {"unsigned_regularity": n * n * 2 * np.pi,
               "flat_norm": n * n * min(2 * np.pi, np.pi / n ** 2)}
        orc = {"unsigned_regularity": n * n * 2 * np.pi * spec.contrast,
               "boundary_flat_norm": n * n * spec.contrast * min(2 * np.pi * r, np.pi * r * r),
               "curvature_flat_norm": n * n * spec.contrast * min(2 * np.pi, np.pi * r)}
        meta.update({"layout": "cell 1/n, radius 1/(4n), centre spacing four radii",
                     "radius": r, "scene_units_per_unit_square": 4.0, "radius_scene_units": 1.0 / n})
    elif spec.kind == "sawtooth_edge":
        th = spec.theta
        pts, s, lead = sawtooth_vertices(n, th)
        ys = _sawtooth_height(x, pts)
        # vertical offset times the tooth cosine approximates the normal distance
        ind = _step((y - ys) * np.cos(th / 2), w)
        # the region below the edge is bright: travel right to left keeps it on the left
        cur = PolylineCurrent([Polyline(pts[::-1], False)])
        ref = {"regularity": n * th, "fidelity": n * min(2 * th, th / (n * np.cos(th)))}
        orc = {"regularity": n * th, "tooth_length": s, "lead_length": lead}
        meta.update({"teeth_width": 0.4, "amplitude": float(pts[2, 1] - 0.5)})
    elif spec.kind == "semicircle_bumps":
        r = 0.25 / n
        centres = (np.arange(n) + 0.5) / n
        if 2 * r / h < MIN_DISC_PIXELS:
            raise ValueError(f"resolution {res} gives {2 * r / h:.2f} pixels across a bump; "
                             f"need at least {MIN_DISC_PIXELS}")
        base = 0.5
        bump = np.zeros_like(x)
        for cx in centres:
            bump = np.maximum(bump, _step(np.hypot(x - cx, y - base) - r, w) * (y >= base))
        ind = np.maximum(_step(y - base, w), bump)
        arcs = [arc_polyline(cx, base, r) for cx in centres]
        cur = PolylineCurrent(arcs)
        ref = {"regularity_per_bump": np.pi,
               "flat_norm_per_bump": np.pi / (2 * n ** 2) + 2.0 / n}
        orc = {"regularity_per_bump": np.pi,
               "arc_flat_norm_per_bump": min(np.pi * r, 2 * r + np.pi * r * r / 2)}
        meta.update({"radius": r, "baseline": base})
    elif spec.kind == "road_intersection":
        lo, hi = 0.5 - spec.road_width / 2, 0.5 + spec.road_width / 2
        dx = np.maximum(lo - x, x - hi)
        dy = np.maximum(lo - y, y - hi)
        # signed distance-ish: inside the cross when either |x - 1/2| or |y - 1/2| is small
        ind = np.maximum(_step(dx, w), _step(dy, w))
        cur = road_segments(spec.road_width, spec.swap)
        ref = {"maximal_lines": 4}
        orc = {"maximal_lines": 4, "segments": 8}
        meta.update({"road_width": spec.road_width, "swap": spec.swap})
    else:  # step_edge
        ind = _step(x - 0.5, w)
        cur = PolylineCurrent([Polyline(np.array([[0.5, 0.0], [0.5, 1.0]]), False)])
        ref = {"maximal_lines": 1}
        orc = {"maximal_lines": 1, "edge_length": 1.0}

    clean = np.clip(bg, 0.0, 1.0)
    img = np.clip(bg + spec.contrast * ind, 0.0, 1.0)
    img = _impulse(img, spec.noise, rng)
    if oracle:
        orc = dict(orc)
        orc.update(_lp_oracle(spec, cur))
    vals = AnalyticValues(spec.kind, {k: float(v) for k, v in ref.items()},
                          {k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                           for k, v in orc.items()}, meta)
    return Scene(ScalarField(img, h), cur, vals, ScalarField(clean, h))


def _lp_oracle(spec: SceneSpec, cur: PolylineCurrent) -> dict:
    """Flat norms of the analytic currents solved on a local fine complex."""
    from .complex import box_complex
    from .currents import rasterize_to_chain
    from .flatnorm import flat_norm_primal
    from .levelsets import curvature_density

    out = {}
    if spec.kind == "disc_pack":
        # every disc is alike: solve one and multiply
        _, r = disc_pack_layout(int(spec.n))
        k = box_complex((-2 * r, -2 * r), (2 * r, 2 * r), r / 16)
        one = PolylineCurrent([circle_polyline(0.0, 0.0, r)])
        ch = rasterize_to_chain(one, k)
        n2 = spec.n ** 2
        out["lp_boundary_flat_norm"] = n2 * spec.contrast * flat_norm_primal(ch, k).value
        cc = curvature_density(one).as_current()
        out["lp_curvature_flat_norm"] = n2 * spec.contrast * flat_norm_primal(
            rasterize_to_chain(cc, k), k).value
    elif spec.kind == "semicircle_bumps":
        r = 0.25 / spec.n
        k = box_complex((-2 * r, -r), (2 * r, 2 * r), r / 16)
        one = PolylineCurrent([arc_polyline(0.0, 0.0, r)])
        out["lp_arc_flat_norm_per_bump"] = flat_norm_primal(rasterize_to_chain(one, k), k).value
    elif spec.kind == "sawtooth_edge":
        pts = cur.polylines[0].vertices
        lo = pts.min(axis=0) - 0.05
        hi = pts.max(axis=0) + 0.05
        dx = 0.4 / spec.n
        k = box_complex(lo, hi, min(dx / 8, 1 / 128))
        cc = curvature_density(cur).as_current()
        out["lp_curvature_flat_norm"] = flat_norm_primal(rasterize_to_chain(cc, k), k).value
    return out
