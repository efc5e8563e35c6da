"""Polygonal 1-currents, their (x, y, a, b) tuple form, and rasterization to chains."""

from __future__ import annotations

import csv
import heapq
import io
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .complex import Chain, SimplicialComplex2, chain_mass
from .field import atomic_write_bytes


@dataclass(frozen=True)
class Polyline:
    """An oriented vertex chain with one signed multiplicity per segment."""

    vertices: np.ndarray
    closed: bool = False
    multiplicity: np.ndarray | float = 1.0

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        n = len(v)
        if self.closed and n < 3:
            raise ValueError("closed polylines need at least 3 vertices")
        if not self.closed and n < 2:
            raise ValueError("open polylines need at least 2 vertices")
        nseg = n if self.closed else n - 1
        m = np.broadcast_to(np.asarray(self.multiplicity, dtype=float), (nseg,)).copy()
        seg = np.roll(v, -1, axis=0)[:nseg] - v[:nseg]
        if np.any(np.hypot(seg[:, 0], seg[:, 1]) == 0):
            raise ValueError("polyline has a zero-length segment")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "multiplicity", m)

    @property
    def n_segments(self) -> int:
        return len(self.multiplicity)

    @property
    def starts(self) -> np.ndarray:
        return self.vertices[: self.n_segments]

    @property
    def ends(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0)[: self.n_segments]

    @property
    def lengths(self) -> np.ndarray:
        d = self.ends - self.starts
        return np.hypot(d[:, 0], d[:, 1])


@dataclass(frozen=True)
class PolylineCurrent:
    polylines: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "polylines", tuple(self.polylines))

    def __iter__(self):
        return iter(self.polylines)

    def __len__(self):
        return len(self.polylines)

    def __add__(self, other: "PolylineCurrent") -> "PolylineCurrent":
        return PolylineCurrent(self.polylines + other.polylines)

    def scaled_multiplicity(self, alpha: float) -> "PolylineCurrent":
        return PolylineCurrent(
            Polyline(p.vertices, p.closed, alpha * p.multiplicity) for p in self.polylines)

    def reversed(self) -> "PolylineCurrent":
        """Same carrier, opposite orientation (equivalently, negated multiplicities)."""
        out = []
        for p in self.polylines:
            if p.closed:
                v = np.concatenate([p.vertices[:1], p.vertices[:0:-1]])
                m = p.multiplicity[::-1]
            else:
                v = p.vertices[::-1]
                m = p.multiplicity[::-1]
            out.append(Polyline(v, p.closed, m))
        return PolylineCurrent(out)

    def segments(self):
        """Stacked ``(starts, ends, multiplicities)`` over all polylines."""
        if not self.polylines:
            z = np.zeros((0, 2))
            return z, z.copy(), np.zeros(0)
        return (np.concatenate([p.starts for p in self.polylines]),
                np.concatenate([p.ends for p in self.polylines]),
                np.concatenate([p.multiplicity for p in self.polylines]))

    @classmethod
    def from_segments(cls, starts, ends, multiplicity=1.0) -> "PolylineCurrent":
        starts = np.asarray(starts, dtype=float).reshape(-1, 2)
        ends = np.asarray(ends, dtype=float).reshape(-1, 2)
        m = np.broadcast_to(np.asarray(multiplicity, dtype=float), (len(starts),))
        return cls(Polyline(np.stack([s, e]), False, mm) for s, e, mm in zip(starts, ends, m))


def polyline_mass(c: PolylineCurrent) -> float:
    return float(sum(np.abs(p.multiplicity) @ p.lengths for p in c.polylines))


def mass(c) -> float:
    """Mass of a chain or of a polyline current."""
    if isinstance(c, Chain):
        return chain_mass(c)
    if isinstance(c, PolylineCurrent):
        return polyline_mass(c)
    raise TypeError(f"cannot take the mass of {type(c).__name__}")


def pushforward_homothety(c: PolylineCurrent, factor: float) -> PolylineCurrent:
    """Push ``c`` forward under ``p -> factor * p``; multiplicities are kept."""
    if not (np.isfinite(factor) and factor > 0):
        raise ValueError(f"homothety factor must be positive, got {factor}")
    return PolylineCurrent(
        Polyline(p.vertices * factor, p.closed, p.multiplicity) for p in c.polylines)


class SegmentTuple(NamedTuple):
    """Midpoint ``(x, y)`` and direction coefficients ``(a, b)`` of one segment."""

    x: float
    y: float
    a: float
    b: float

    @property
    def mass(self) -> float:
        return float(np.hypot(self.a, self.b))


def to_segment_tuples(c: PolylineCurrent) -> list[SegmentTuple]:
    s, e, m = c.segments()
    mid = 0.5 * (s + e)
    ab = m[:, None] * (e - s)
    keep = np.any(ab != 0, axis=1)
    return [SegmentTuple(*map(float, (p[0], p[1], q[0], q[1])))
            for p, q in zip(mid[keep], ab[keep])]


def tuples_to_current(tuples) -> PolylineCurrent:
    """Unit-multiplicity segments centred at ``(x, y)`` with vector ``(a, b)``."""
    t = np.asarray([tuple(u) for u in tuples], dtype=float).reshape(-1, 4)
    mid, ab = t[:, :2], t[:, 2:]
    return PolylineCurrent.from_segments(mid - 0.5 * ab, mid + 0.5 * ab, 1.0)


def tuples_array(tuples) -> np.ndarray:
    if isinstance(tuples, np.ndarray):
        return tuples.astype(float, copy=False).reshape(-1, 4)
    return np.asarray([tuple(u) for u in tuples], dtype=float).reshape(-1, 4)


# --- serialization --------------------------------------------------------

class TupleCSVError(ValueError):
    pass


def tuples_to_csv(tuples) -> str:
    buf = io.StringIO()
    buf.write("x,y,a,b\n")
    for t in tuples:
        buf.write(",".join("%.17g" % float(v) for v in t) + "\n")
    return buf.getvalue()


def write_tuples_csv(path, tuples):
    atomic_write_bytes(path, tuples_to_csv(tuples).encode())


def read_tuples_csv(path) -> list[SegmentTuple]:
    with open(path, newline="") as fh:
        text = fh.read()
    return parse_tuples_csv(text)


def parse_tuples_csv(text: str) -> list[SegmentTuple]:
    rows = list(csv.reader(io.StringIO(text)))
    out = []
    if not rows:
        return out
    header = [h.strip() for h in rows[0]]
    if header != ["x", "y", "a", "b"]:
        raise TupleCSVError(f"row 1: expected header x,y,a,b, got {','.join(header)}")
    for k, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise TupleCSVError(f"row {k}: expected 4 fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise TupleCSVError(f"row {k}: non-numeric field") from None
        if not all(np.isfinite(vals)):
            raise TupleCSVError(f"row {k}: non-finite value")
        out.append(SegmentTuple(*vals))
    return out


def tuples_to_json(tuples) -> str:
    return json.dumps([[float(v) for v in t] for t in tuples])


def tuples_from_json(text: str) -> list[SegmentTuple]:
    return [SegmentTuple(*map(float, row)) for row in json.loads(text)]


def current_to_json(c: PolylineCurrent) -> dict:
    return {"polylines": [
        {"vertices": p.vertices.tolist(), "closed": p.closed,
         "multiplicity": p.multiplicity.tolist()} for p in c.polylines]}


def current_from_json(d: dict) -> PolylineCurrent:
    return PolylineCurrent(
        Polyline(np.asarray(p["vertices"]), bool(p["closed"]), np.asarray(p["multiplicity"]))
        for p in d["polylines"])


# --- rasterization ----------------------------------------------------------

class OutsideComplexError(ValueError):
    pass


def _route(k: SimplicialComplex2, u: int, v: int, slack: float, penalty: float):
    """Cheapest edge path u -> v; edge cost grows with distance from segment uv.

    Returns a list of ``(edge id, sign)``.
    """
    step = k.edge_between(u, v)
    if step is not None:
        return [step]
    indptr, nbr, eid = k.adjacency
    V = k.vertices
    pu, pv = V[u], V[v]
    d = pv - pu
    L = float(np.hypot(*d))
    h = k.max_edge_length
    budget = L + slack * h
    dd = d / L

    def dist_to_seg(p):
        t = min(max(float(np.dot(p - pu, dd)), 0.0), L)
        q = pu + t * dd
        return float(np.hypot(p[0] - q[0], p[1] - q[1]))

    best = {u: 0.0}
    prev = {}
    heap = [(0.0, -1, u)]
    while heap:
        cost, _, a = heapq.heappop(heap)
        if a == v:
            break
        if cost > best.get(a, np.inf):
            continue
        for j in range(indptr[a], indptr[a + 1]):
            b = int(nbr[j])
            pb = V[b]
            if np.hypot(*(pb - pu)) + np.hypot(*(pb - pv)) > budget + 1e-12:
                continue
            e = int(eid[j])
            mid = 0.5 * (V[a] + pb)
            c = cost + k.edge_lengths[e] * (1.0 + penalty * dist_to_seg(mid) / h)
            if c < best.get(b, np.inf) - 1e-15:
                best[b] = c
                prev[b] = (a, e)
                heapq.heappush(heap, (c, e, b))
    if v not in prev:
        if slack < 64:
            return _route(k, u, v, slack * 4, penalty)
        raise RuntimeError(f"no edge path between vertices {u} and {v}")
    path = []
    b = v
    while b != u:
        a, e = prev[b]
        path.append((e, 1 if k.edges[e, 0] == a else -1))
        b = a
    return path[::-1]


def _hops(snapped: np.ndarray, mult: np.ndarray, lengths: np.ndarray, closed: bool):
    """Group segments into hops between distinct snapped vertices.

    Segments whose ends snap to the same vertex fold into the following hop.
    Each hop carries the length-weighted mean multiplicity of its segments.
    """
    n = len(mult)
    moving = [i for i in range(n) if snapped[i] != snapped[(i + 1) if (i + 1 < len(snapped)) else 0]]
    if not moving:
        return []
    hops = []
    pend_w = 0.0
    pend_l = 0.0
    if closed:
        # stalls before the first moving segment belong to the last hop's tail; start at the first move
        order = list(range(moving[0], n)) + list(range(0, moving[0]))
    else:
        order = list(range(n))
    for i in order:
        pend_w += mult[i] * lengths[i]
        pend_l += lengths[i]
        j = (i + 1) % len(snapped) if closed else i + 1
        if snapped[i] != snapped[j]:
            hops.append([int(snapped[i]), int(snapped[j]), pend_w, pend_l])
            pend_w = pend_l = 0.0
    if pend_l > 0 and hops:
        # trailing stalls: merge into the last hop
        hops[-1][2] += pend_w
        hops[-1][3] += pend_l
    return [(a, b, w / l) for a, b, w, l in hops]


def rasterize_to_chain(c: PolylineCurrent, k: SimplicialComplex2,
                       penalty: float = 1.0, slack: float = 3.0) -> Chain:
    """Route every segment of ``c`` along complex edges.

    Segment endpoints snap to their nearest vertices; each hop follows the
    cheapest edge path where an edge costs its length times
    ``1 + penalty * (distance from the hop / max edge length)``.
    """
    coeffs = np.zeros(k.n_edges)
    if len(c) == 0:
        return Chain(k, 1, coeffs)
    allv = np.concatenate([p.vertices for p in c.polylines])
    inside = k.contains(allv)
    if not np.all(inside):
        bad = allv[~inside]
        listing = ", ".join(f"({x:.6g}, {y:.6g})" for x, y in bad[:10])
        more = "" if len(bad) <= 10 else f" and {len(bad) - 10} more"
        raise OutsideComplexError(f"current vertices outside the complex: {listing}{more}")
    cache: dict = {}
    for p in c.polylines:
        snapped = k.nearest_vertex(p.vertices)
        for a, b, m in _hops(snapped, p.multiplicity, p.lengths, p.closed):
            if m == 0:
                continue
            key = (a, b)
            path = cache.get(key)
            if path is None:
                path = _route(k, a, b, slack, penalty)
                cache[key] = path
            for e, s in path:
                coeffs[e] += s * m
    return Chain(k, 1, coeffs)


def chain_to_tuples(ch: Chain, tol: float = 0.0) -> list[SegmentTuple]:
    """Express a 1-chain as one tuple per supporting edge."""
    k = ch.complex
    idx = np.flatnonzero(np.abs(ch.coefficients) > tol)
    a = k.vertices[k.edges[idx, 0]]
    b = k.vertices[k.edges[idx, 1]]
    mid = 0.5 * (a + b)
    ab = ch.coefficients[idx, None] * (b - a)
    return [SegmentTuple(*map(float, (m[0], m[1], v[0], v[1]))) for m, v in zip(mid, ab)]
