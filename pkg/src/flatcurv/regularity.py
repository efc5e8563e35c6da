"""Regularity functionals R1-R5."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .field import ScalarField, gradient, hessian
from .levelsets import CORNER_THRESHOLD, JumpSet, _bilinear, curvature_density, jump_pixel_mask


@dataclass(frozen=True)
class RegularityReport:
    r1: float
    r2: float
    r3: float
    r4: float
    r5: float

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{k} must be finite and non-negative, got {v}")

    def to_json(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}


def _exclusion(f: ScalarField, jumps, mask) -> np.ndarray:
    """Per-pixel weight in [0, 1]; a float ``mask`` is read as area coverage."""
    keep = np.ones(f.shape)
    if mask is not None:
        m = np.asarray(mask, dtype=float)
        if m.shape != f.shape:
            raise ValueError(f"mask shape {m.shape} does not match field {f.shape}")
        keep *= np.clip(m, 0.0, 1.0)
    if jumps is not None and len(jumps):
        keep[jump_pixel_mask(f.shape, f.spacing, jumps)] = 0.0
    return keep


def total_curvature_density(f: ScalarField, epsilon: float = 1e-3) -> np.ndarray:
    """Pointwise ``|grad f| * |level-set curvature|`` (zero where ``|grad f| < epsilon``)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    g = gradient(f)
    H = hessian(f)
    fx, fy = g.fx, g.fy
    num = H.fxx * fy ** 2 - 2.0 * H.fxy * fx * fy + H.fyy * fx ** 2
    g2 = fx ** 2 + fy ** 2
    reg = g2 + epsilon ** 2
    kappa = num / reg ** 1.5
    dens = np.abs(kappa) * np.sqrt(g2)
    dens[np.sqrt(g2) < epsilon] = 0.0
    return dens


def r1_total_curvature(f: ScalarField, epsilon: float = 1e-3, mask=None,
                       jumps: JumpSet | None = None) -> float:
    """Coarea-weighted total curvature of the level sets of ``f``.

    ``mask`` restricts the integral to selected pixels, either as booleans or
    as fractional coverage; pixels next to the cuts in ``jumps`` are left out.
    """
    dens = total_curvature_density(f, epsilon)
    keep = _exclusion(f, jumps, mask)
    return float(np.sum(dens * keep) * f.spacing ** 2)


def r2_jump_curvature(j: JumpSet, corner_threshold: float = CORNER_THRESHOLD) -> float:
    """Total absolute turning (smooth plus corners) of the jump curves."""
    if j is None or len(j) == 0:
        return 0.0
    return float(curvature_density(j.current, corner_threshold).unsigned_total())


def crease_density(f: ScalarField, crease_threshold: float = 0.5,
                   jump_threshold: float = np.inf, reach: float = 3.0) -> np.ndarray:
    """Per-pixel ``|dihedral angle| * crease length`` (already integrated).

    Across a crease the discrete Laplacian telescopes: its mass over the
    pixel band equals the gradient jump times the crease length, whatever
    the crease orientation.  Each band pixel therefore contributes
    ``|lap f| h^2 * angle / |gR - gL|``, with the side gradients ``gL, gR``
    read ``reach`` pixels away along the dominant Hessian eigenvector.
    """
    if not crease_threshold > 0:
        raise ValueError("crease_threshold must be positive")
    v = f.values
    h = f.spacing
    H, W = v.shape
    out = np.zeros_like(v)
    if min(H, W) < 3:
        return out
    lap = np.zeros_like(v)
    lap[1:-1, 1:-1] = (v[1:-1, 2:] + v[1:-1, :-2] + v[2:, 1:-1] + v[:-2, 1:-1]
                       - 4.0 * v[1:-1, 1:-1]) / h ** 2
    # a crease of jump >= threshold spreads over at most ~3 pixels per row
    cand = np.abs(lap) * h > 0.1 * crease_threshold
    if not np.any(cand):
        return out
    iy, ix = np.nonzero(cand)
    Hs = hessian(f)
    a, b, c = Hs.fxx[iy, ix], Hs.fxy[iy, ix], Hs.fyy[iy, ix]
    # dominant eigenvector of [[a, b], [b, c]]
    theta = 0.5 * np.arctan2(2.0 * b, a - c)
    lam1 = a * np.cos(theta) ** 2 + 2 * b * np.sin(theta) * np.cos(theta) + c * np.sin(theta) ** 2
    lam2 = a + c - lam1
    theta = np.where(np.abs(lam1) >= np.abs(lam2), theta, theta + 0.5 * np.pi)
    nu = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    p = np.stack([ix * h, iy * h], axis=1)
    G = gradient(f)
    off = reach * h * nu
    gL = np.stack([_bilinear(G.fx, h, p - off), _bilinear(G.fy, h, p - off)], axis=1)
    gR = np.stack([_bilinear(G.fx, h, p + off), _bilinear(G.fy, h, p + off)], axis=1)
    J = np.linalg.norm(gR - gL, axis=1)
    nL = np.column_stack([-gL, np.ones(len(gL))])
    nR = np.column_stack([-gR, np.ones(len(gR))])
    ang = np.arctan2(np.linalg.norm(np.cross(nL, nR), axis=1), np.sum(nL * nR, axis=1))
    ok = J > crease_threshold
    if np.isfinite(jump_threshold):
        # a steep pixel step is a jump, not a crease
        d = np.zeros_like(v)
        dx = np.abs(np.diff(v, axis=1)) / h
        dy = np.abs(np.diff(v, axis=0)) / h
        d[:, :-1] = np.maximum(d[:, :-1], dx)
        d[:, 1:] = np.maximum(d[:, 1:], dx)
        d[:-1, :] = np.maximum(d[:-1, :], dy)
        d[1:, :] = np.maximum(d[1:, :], dy)
        ok &= d[iy, ix] < jump_threshold
    contrib = np.where(ok, np.abs(lap[iy, ix]) * h ** 2 * ang / np.where(ok, J, 1.0), 0.0)
    out[iy, ix] = contrib
    return out


def r3_crease_curvature(f: ScalarField, crease_threshold: float = 0.5,
                        jump_threshold: float = np.inf, jumps: JumpSet | None = None,
                        mask=None) -> float:
    """Dihedral turning integrated along creases (continuous, non-C1 curves of ``f``)."""
    dens = crease_density(f, crease_threshold, jump_threshold)
    keep = _exclusion(f, jumps, mask)
    return float(np.sum(dens * keep))


def boundary_trace_length(f: ScalarField) -> float:
    """Length of the graph of ``f`` over the boundary of the pixel-cell domain.

    Side profiles are extended half a pixel to the domain corners by linear
    extrapolation, so affine fields are measured exactly.
    """
    v = f.values
    h = f.spacing
    total = 0.0
    for prof in (v[0, :], v[-1, :], v[:, 0], v[:, -1]):
        ext = np.concatenate([[prof[0] - 0.5 * (prof[1] - prof[0])], prof,
                              [prof[-1] + 0.5 * (prof[-1] - prof[-2])]])
        ds = np.full(len(ext) - 1, h)
        ds[0] = ds[-1] = 0.5 * h
        total += float(np.sum(np.hypot(ds, np.diff(ext))))
    return total


def graph_mass_terms(f: ScalarField, j: JumpSet | None = None, jump_factor: float = 2.0,
                     mask=None) -> tuple:
    """``(M([f]), M(boundary [f]))`` with the gradient zeroed next to cuts."""
    g = gradient(f)
    g2 = g.fx ** 2 + g.fy ** 2
    g2 = np.where(_exclusion(f, j, None) > 0, g2, 0.0)
    integrand = np.sqrt(1.0 + g2)
    if mask is not None:
        integrand = integrand * _exclusion(f, None, mask)
    area = float(np.sum(integrand) * f.spacing ** 2)
    bnd = boundary_trace_length(f)
    if j is not None and len(j):
        bnd += jump_factor * j.length()
    return area, bnd


def r4_graph_mass(f: ScalarField, j: JumpSet | None = None, jump_factor: float = 2.0) -> float:
    """Mass of the graph current plus mass of its boundary."""
    area, bnd = graph_mass_terms(f, j, jump_factor)
    return area + bnd


def hessian_density(f: ScalarField, squared: bool = True) -> np.ndarray:
    H = hessian(f)
    if squared:
        return H.fxx ** 2 + H.fyy ** 2 + (2.0 * H.fxy) ** 2
    return np.abs(H.fxx) + np.abs(H.fyy) + np.abs(2.0 * H.fxy)


def r5_hessian_energy(f: ScalarField, squared: bool = True, jumps: JumpSet | None = None,
                      mask=None) -> float:
    """Integral of ``fxx^2 + fyy^2 + (2 fxy)^2`` (absolute values if not ``squared``)."""
    dens = hessian_density(f, squared)
    keep = _exclusion(f, jumps, mask)
    return float(np.sum(dens * keep) * f.spacing ** 2)
