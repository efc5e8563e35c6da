"""Oriented planar 2-complexes and real chains on them."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.spatial import Delaunay, cKDTree


class SimplicialComplex2:
    """A triangulated planar region with oriented edges and triangles.

    Edges are oriented from the lower to the higher vertex index.  Triangles
    are stored counter-clockwise, and ``tri_signs[t, k]`` is +1 when edge
    ``tri_edges[t, k]`` runs along the counter-clockwise boundary of ``t``.
    """

    def __init__(self, vertices, triangles):
        V = np.asarray(vertices, dtype=float)
        T = np.asarray(triangles, dtype=np.int64).reshape(-1, 3).copy()
        if V.ndim != 2 or V.shape[1] != 2:
            raise ValueError("vertices must be an (n, 2) array")
        # enforce counter-clockwise triangles
        p = V[T]
        cross = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                 - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        if np.any(np.abs(cross) <= 1e-300):
            raise ValueError("degenerate triangle in complex")
        flip = cross < 0
        T[flip] = T[flip][:, [0, 2, 1]]

        sides = np.stack([T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]]], axis=1)  # (t, 3, 2)
        lo = sides.min(axis=2)
        hi = sides.max(axis=2)
        keys = np.stack([lo.ravel(), hi.ravel()], axis=1)
        edges, inverse = np.unique(keys, axis=0, return_inverse=True)
        self.vertices = V
        self.triangles = T
        self.edges = edges
        self.tri_edges = inverse.reshape(-1, 3)
        self.tri_signs = np.where(sides[:, :, 0] == lo, 1, -1).astype(np.int8)
        self.edge_lengths = np.linalg.norm(V[edges[:, 1]] - V[edges[:, 0]], axis=1)
        self.tri_areas = 0.5 * np.abs(cross)
        for arr in (self.vertices, self.triangles, self.edges, self.tri_edges,
                    self.tri_signs, self.edge_lengths, self.tri_areas):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def d1(self) -> sparse.csr_matrix:
        """Vertex-by-edge incidence: boundary of edge (a, b) is b - a."""
        E = self.n_edges
        rows = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        cols = np.concatenate([np.arange(E), np.arange(E)])
        vals = np.concatenate([np.ones(E), -np.ones(E)])
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_vertices, E))

    @cached_property
    def d2(self) -> sparse.csr_matrix:
        """Edge-by-triangle incidence matrix."""
        T = self.n_triangles
        cols = np.repeat(np.arange(T), 3)
        return sparse.csr_matrix(
            (self.tri_signs.ravel().astype(float), (self.tri_edges.ravel(), cols)),
            shape=(self.n_edges, T))

    @cached_property
    def kdtree(self) -> cKDTree:
        return cKDTree(self.vertices)

    @cached_property
    def edge_index(self) -> dict:
        return {(int(a), int(b)): k for k, (a, b) in enumerate(self.edges)}

    @cached_property
    def adjacency(self):
        """CSR-style neighbour lists: ``(indptr, neighbours, edge_ids)``."""
        E = self.n_edges
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        eid = np.concatenate([np.arange(E), np.arange(E)])
        order = np.lexsort((eid, src))
        src, dst, eid = src[order], dst[order], eid[order]
        indptr = np.searchsorted(src, np.arange(self.n_vertices + 1))
        return indptr, dst, eid

    @cached_property
    def bounds(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return lo, hi

    @cached_property
    def max_edge_length(self) -> float:
        return float(self.edge_lengths.max()) if self.n_edges else 0.0

    @cached_property
    def _hull(self):
        return Delaunay(self.vertices)

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        """True for points inside the convex hull of the complex (up to ``tol``)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if len(pts) == 0:
            return np.zeros(0, dtype=bool)
        lo, hi = self.bounds
        span = float(np.max(hi - lo))
        return self._hull.find_simplex(pts, tol=tol / max(span, 1e-300)) >= 0

    def scaled(self, factor: float) -> "SimplicialComplex2":
        """The same combinatorial complex with coordinates multiplied by ``factor``."""
        return SimplicialComplex2(self.vertices * factor, self.triangles)

    def nearest_vertex(self, points) -> np.ndarray:
        _, idx = self.kdtree.query(np.atleast_2d(points))
        return np.asarray(idx, dtype=np.int64)

    def edge_between(self, a: int, b: int):
        """Return ``(edge id, sign)`` for the step a -> b, or None."""
        if a < b:
            k = self.edge_index.get((a, b))
            return None if k is None else (k, 1)
        k = self.edge_index.get((b, a))
        return None if k is None else (k, -1)

    def __repr__(self):
        return (f"SimplicialComplex2(vertices={self.n_vertices}, edges={self.n_edges}, "
                f"triangles={self.n_triangles})")


def grid_complex(xs, ys, pattern: str = "crossed") -> SimplicialComplex2:
    """Triangulate the rectilinear grid ``xs`` x ``ys``.

    ``pattern`` is one of ``"diagonal"`` (each cell split along its
    lower-left to upper-right diagonal), ``"antidiagonal"`` or ``"crossed"``
    (a centre vertex per cell and four triangles).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2 or len(ys) < 2:
        raise ValueError("grid needs at least two coordinates per axis")
    if np.any(np.diff(xs) <= 0) or np.any(np.diff(ys) <= 0):
        raise ValueError("grid coordinates must be strictly increasing")
    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys)
    verts = [np.stack([X.ravel(), Y.ravel()], axis=1)]
    idx = np.arange(nx * ny).reshape(ny, nx)
    v00 = idx[:-1, :-1].ravel()
    v10 = idx[:-1, 1:].ravel()
    v01 = idx[1:, :-1].ravel()
    v11 = idx[1:, 1:].ravel()
    if pattern == "diagonal":
        tris = np.concatenate([np.stack([v00, v10, v11], 1), np.stack([v00, v11, v01], 1)])
    elif pattern == "antidiagonal":
        tris = np.concatenate([np.stack([v00, v10, v01], 1), np.stack([v10, v11, v01], 1)])
    elif pattern == "crossed":
        cx = 0.5 * (xs[:-1] + xs[1:])
        cy = 0.5 * (ys[:-1] + ys[1:])
        CX, CY = np.meshgrid(cx, cy)
        verts.append(np.stack([CX.ravel(), CY.ravel()], axis=1))
        c = nx * ny + np.arange((nx - 1) * (ny - 1))
        tris = np.concatenate([
            np.stack([v00, v10, c], 1), np.stack([v10, v11, c], 1),
            np.stack([v11, v01, c], 1), np.stack([v01, v00, c], 1)])
    else:
        raise ValueError(f"unknown grid pattern {pattern!r}")
    return SimplicialComplex2(np.concatenate(verts), tris)


def box_complex(lo, hi, spacing: float, pattern: str = "crossed") -> SimplicialComplex2:
    """Grid complex covering ``[lo, hi]`` with cells no larger than ``spacing``."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = np.maximum(np.ceil((hi - lo) / spacing - 1e-9).astype(int), 1)
    xs = np.linspace(lo[0], hi[0], n[0] + 1)
    ys = np.linspace(lo[1], hi[1], n[1] + 1)
    return grid_complex(xs, ys, pattern)


def delaunay_complex(points) -> SimplicialComplex2:
    tri = Delaunay(np.asarray(points, dtype=float))
    return SimplicialComplex2(tri.points, tri.simplices)


@dataclass(frozen=True)
class Chain:
    """Real coefficients on the ``dim``-cells of ``complex``."""

    complex: SimplicialComplex2
    dim: int
    coefficients: np.ndarray

    def __post_init__(self):
        if self.dim not in (0, 1, 2):
            raise ValueError("chain dimension must be 0, 1 or 2")
        c = np.asarray(self.coefficients, dtype=float).ravel()
        n = (self.complex.n_vertices, self.complex.n_edges, self.complex.n_triangles)[self.dim]
        if len(c) != n:
            raise ValueError(f"{self.dim}-chain needs {n} coefficients, got {len(c)}")
        if not np.all(np.isfinite(c)):
            raise ValueError("chain coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def zeros(cls, complex, dim):
        n = (complex.n_vertices, complex.n_edges, complex.n_triangles)[dim]
        return cls(complex, dim, np.zeros(n))

    def _check(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        if other.complex is not self.complex or other.dim != self.dim:
            raise ValueError("chains live on different complexes or dimensions")
        return other

    def __add__(self, other):
        self._check(other)
        return Chain(self.complex, self.dim, self.coefficients + other.coefficients)

    def __sub__(self, other):
        self._check(other)
        return Chain(self.complex, self.dim, self.coefficients - other.coefficients)

    def __neg__(self):
        return Chain(self.complex, self.dim, -self.coefficients)

    def __mul__(self, alpha):
        return Chain(self.complex, self.dim, float(alpha) * self.coefficients)

    __rmul__ = __mul__

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients)


def chain_mass(c: Chain) -> float:
    if c.dim == 1:
        w = c.complex.edge_lengths
    elif c.dim == 2:
        w = c.complex.tri_areas
    else:
        w = np.ones(c.complex.n_vertices)
    return float(np.abs(c.coefficients) @ w)


def boundary(c: Chain) -> Chain:
    """Boundary of a 2-chain (an edge chain) or of a 1-chain (a vertex chain)."""
    if c.dim == 2:
        return Chain(c.complex, 1, c.complex.d2 @ c.coefficients)
    if c.dim == 1:
        return Chain(c.complex, 0, c.complex.d1 @ c.coefficients)
    raise ValueError("a 0-chain has no boundary")
