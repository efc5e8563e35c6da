"""Fidelity terms: pixelwise L1 and the flat norm of curvature currents."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .complex import Chain, SimplicialComplex2, box_complex, chain_mass
from .currents import Polyline, PolylineCurrent, rasterize_to_chain
from .field import ScalarField
from .flatnorm import DualForm, FlatNormDecomposition, flat_norm_dual, flat_norm_primal
from .levelsets import (CORNER_THRESHOLD, JumpSet, _distance_to_polyline, curvature_density,
                        default_levels, extract_level_sets, level_weights)

__all__ = ["FidelityConfig", "CurvatureCurrentField", "f1_l1", "field_complex",
           "curvature_polylines", "build_curvature_current", "f2_flat_fidelity",
           "flat_norm_primal", "flat_norm_dual", "FlatNormDecomposition", "DualForm"]


@dataclass(frozen=True)
class FidelityConfig:
    """Settings shared by every F2 evaluation.

    ``complex_cell`` is the side of a complex cell in pixels.  Coarser cells
    make the LP cheaper; the curvature current is snapped to the cell corners.
    """

    levels: tuple = field(default_factory=lambda: tuple(default_levels(8)))
    scale: float = 1.0
    complex_cell: float = 4.0
    corner_threshold: float = CORNER_THRESHOLD
    jump_margin: float = 1.0
    smoothing: float = 6.0

    def __post_init__(self):
        if len(self.levels) == 0:
            raise ValueError("levels must be nonempty")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError("scale must be positive")
        if not self.complex_cell > 0:
            raise ValueError("complex_cell must be positive")


def _check_grids(f: ScalarField, g: ScalarField):
    if f.shape != g.shape or f.spacing != g.spacing:
        raise ValueError(f"grid mismatch: {f.shape}@{f.spacing} vs {g.shape}@{g.spacing}")


def f1_l1(f: ScalarField, g: ScalarField) -> float:
    """Integral of ``|f - g|`` over the domain."""
    _check_grids(f, g)
    return float(np.sum(np.abs(f.values - g.values)) * f.spacing ** 2)


@lru_cache(maxsize=16)
def _cached_box(shape, spacing, cell):
    H, W = shape
    hi = ((W - 1) * spacing, (H - 1) * spacing)
    return box_complex((0.0, 0.0), hi, cell * spacing)


def field_complex(f: ScalarField, cell: float = 4.0) -> SimplicialComplex2:
    """The crossed grid complex over the pixel-centre rectangle of ``f``."""
    return _cached_box(tuple(f.shape), float(f.spacing), float(cell))


@dataclass(frozen=True)
class CurvatureCurrentField:
    chain: Chain
    polylines: PolylineCurrent
    unsigned_mass: float

    @property
    def complex(self) -> SimplicialComplex2:
        return self.chain.complex


def _far_from_jumps(p: Polyline, jumps: JumpSet | None, radius: float) -> np.ndarray:
    keep = np.ones(p.n_segments, dtype=bool)
    if jumps is None or len(jumps) == 0:
        return keep
    mid = 0.5 * (p.starts + p.ends)
    for q in jumps.current:
        d, _, _ = _distance_to_polyline(mid, q)
        keep &= d > radius
    return keep


def curvature_polylines(f: ScalarField, jumps: JumpSet | None = None, levels=None,
                        corner_threshold: float = CORNER_THRESHOLD,
                        jump_margin: float = 1.0, smoothing: float = 6.0) -> PolylineCurrent:
    """Signed curvature of the level ladder of ``f`` as a polyline current.

    Each level carries its band width as coarea weight.  Level segments
    within ``jump_margin`` pixels of a cut are dropped; the cut itself then
    carries its own curvature weighted by the jump height.  Turns are
    averaged over ``smoothing`` pixels of arclength to damp the vertex
    jitter of marching squares.
    """
    levels = default_levels(8) if levels is None else np.asarray(levels, dtype=float)
    fam = extract_level_sets(f, levels)
    w = level_weights(fam.levels)
    out = []
    radius = jump_margin * f.spacing
    for wl, c in zip(w, fam.currents):
        if wl == 0 or len(c) == 0:
            continue
        cc = curvature_density(c, corner_threshold,
                               atom_weights=[np.full(len(p.vertices), wl) for p in c],
                               smoothing=smoothing * f.spacing)
        mult = cc.segment_multiplicities([wl] * len(c))
        for p, m in zip(c, mult):
            m = np.where(_far_from_jumps(p, jumps, radius), m, 0.0)
            if np.any(m):
                out.append(Polyline(p.vertices, p.closed, m))
    if jumps is not None and len(jumps):
        heights = jumps.heights()
        aw = []
        for p, hgt in zip(jumps.current, heights):
            # vertex weight: mean height of the incident segments
            n = p.n_segments
            vw = np.empty(len(p.vertices))
            for v in range(len(p.vertices)):
                inc = [hgt[s] for s in ((v - 1) % n, v) if 0 <= s < n and (p.closed or s != -1)]
                vw[v] = np.mean(inc)
            aw.append(vw)
        cc = curvature_density(jumps.current, corner_threshold, atom_weights=aw,
                               smoothing=smoothing * f.spacing)
        mult = cc.segment_multiplicities(list(heights))
        for p, m in zip(jumps.current, mult):
            if np.any(m):
                out.append(Polyline(p.vertices, p.closed, m))
    return PolylineCurrent(out)


def build_curvature_current(f: ScalarField, jumps: JumpSet | None, levels,
                            k: SimplicialComplex2,
                            corner_threshold: float = CORNER_THRESHOLD,
                            jump_margin: float = 1.0,
                            smoothing: float = 6.0) -> CurvatureCurrentField:
    """Rasterize the curvature current of ``f`` onto the edges of ``k``."""
    if levels is not None and len(np.atleast_1d(levels)) == 0:
        raise ValueError("levels must be nonempty")
    pc = curvature_polylines(f, jumps, levels, corner_threshold, jump_margin, smoothing)
    ch = rasterize_to_chain(pc, k)
    um = float(sum(np.abs(p.multiplicity) @ p.lengths for p in pc))
    return CurvatureCurrentField(ch, pc, um)


def f2_flat_fidelity(f: ScalarField, g: ScalarField, config: FidelityConfig | None = None,
                     jumps_f: JumpSet | None = None, jumps_g: JumpSet | None = None,
                     k: SimplicialComplex2 | None = None, g_chain: Chain | None = None,
                     return_decomposition: bool = False):
    """Flat norm of the difference between the curvature currents of ``f`` and ``g``.

    ``g_chain`` lets callers reuse the rasterized current of a fixed ``g``.
    """
    _check_grids(f, g)
    cfg = FidelityConfig() if config is None else config
    k = field_complex(f, cfg.complex_cell) if k is None else k
    cf = build_curvature_current(f, jumps_f, cfg.levels, k, cfg.corner_threshold,
                                 cfg.jump_margin, cfg.smoothing).chain
    if g_chain is None:
        g_chain = build_curvature_current(g, jumps_g, cfg.levels, k, cfg.corner_threshold,
                                          cfg.jump_margin, cfg.smoothing).chain
    diff = cf - g_chain
    dec = flat_norm_primal(diff, k, cfg.scale)
    return dec if return_decomposition else dec.value


def chain_difference_mass(a: Chain, b: Chain) -> float:
    return chain_mass(a - b)
