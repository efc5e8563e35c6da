"""Currents built from image data: level-set contours, curvature densities, jump sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .currents import Polyline, PolylineCurrent
from .field import ScalarField, gradient

CORNER_THRESHOLD = np.pi / 6
MAX_LEVELS = 256


def default_levels(k: int = 8) -> np.ndarray:
    """``k`` equally spaced levels at the centres of ``k`` bands of [0, 1]."""
    if k < 1:
        raise ValueError("need at least one level")
    return (np.arange(k) + 0.5) / k


def level_weights(levels) -> np.ndarray:
    """Width of the band of [0, 1] closest to each level (coarea weights)."""
    lv = np.asarray(levels, dtype=float)
    order = np.argsort(lv)
    s = lv[order]
    cuts = np.concatenate([[0.0], 0.5 * (s[1:] + s[:-1]), [1.0]])
    w = np.empty_like(s)
    w[order] = np.clip(np.diff(cuts), 0.0, None)
    return w


# --- marching squares -------------------------------------------------------

def _pair_table():
    """For each corner mask and centre flag, list of (start slot, end slot) pairs."""
    table = {}
    for mask in range(16):
        above = [(mask >> b) & 1 for b in range(4)]
        starts = [k for k in range(4) if above[k] and not above[(k + 1) % 4]]
        ends = [k for k in range(4) if not above[k] and above[(k + 1) % 4]]
        for centre in (0, 1):
            if len(starts) == 1:
                pairs = [(starts[0], ends[0])]
            elif len(starts) == 2:
                if centre:
                    pairs = [(s, (s + 1) % 4) for s in starts]
                else:
                    pairs = [(s, (s - 1) % 4) for s in starts]
            else:
                pairs = []
            table[mask, centre] = pairs
    return table


_PAIRS = _pair_table()


def _contour_polylines(v: np.ndarray, level: float, spacing: float):
    """Marching squares on ``v`` at ``level``; higher values lie left of travel.

    Returns a list of ``(points, closed)``.
    """
    H, W = v.shape
    above = v > level
    nH = H * (W - 1)
    # crossing points, indexed by global edge id
    a, b = v[:, :-1], v[:, 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        th = (level - a) / (b - a)
        tv = (level - v[:-1, :]) / (v[1:, :] - v[:-1, :])
    jj, ii = np.meshgrid(np.arange(W - 1), np.arange(H))
    px_h = np.stack([(jj + th) * spacing, ii * spacing], axis=-1).reshape(-1, 2)
    jj, ii = np.meshgrid(np.arange(W), np.arange(H - 1))
    px_v = np.stack([jj * spacing, (ii + tv) * spacing], axis=-1).reshape(-1, 2)
    points = np.concatenate([px_h, px_v])

    c0, c1 = above[:-1, :-1], above[:-1, 1:]
    c2, c3 = above[1:, 1:], above[1:, :-1]
    mask = c0.astype(np.int8) | (c1 << 1) | (c2 << 2) | (c3 << 3)
    active = (mask != 0) & (mask != 15)
    ci, cj = np.nonzero(active)
    if len(ci) == 0:
        return []
    centre = (0.25 * (v[ci, cj] + v[ci, cj + 1] + v[ci + 1, cj + 1] + v[ci + 1, cj]) > level)
    slot_ids = np.stack([
        ci * (W - 1) + cj,             # bottom: (i, j) -> (i, j+1)
        nH + ci * W + cj + 1,          # right: (i, j+1) -> (i+1, j+1)
        (ci + 1) * (W - 1) + cj,       # top
        nH + ci * W + cj,              # left
    ], axis=1)
    succ = {}
    for n, (m, cf) in enumerate(zip(mask[ci, cj].tolist(), centre.tolist())):
        for s, e in _PAIRS[m, int(cf)]:
            succ[int(slot_ids[n, s])] = int(slot_ids[n, e])
    ends = set(succ.values())
    out = []
    visited = set()
    for head in sorted(k for k in succ if k not in ends):
        chain = [head]
        visited.add(head)
        cur = head
        while cur in succ:
            cur = succ[cur]
            chain.append(cur)
            visited.add(cur)
        out.append((points[chain], False))
    for start in sorted(succ):
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        cur = succ[start]
        while cur != start:
            chain.append(cur)
            visited.add(cur)
            cur = succ[cur]
        out.append((points[chain], True))
    return out


def _dedupe(points: np.ndarray, closed: bool, tol: float):
    step = np.hypot(*np.diff(points, axis=0).T)
    keep = np.concatenate([[True], step > tol])
    p = points[keep]
    if closed and len(p) > 1 and np.hypot(*(p[0] - p[-1])) <= tol:
        p = p[:-1]
    return p


def _polyline_or_none(points, closed, tol, multiplicity=1.0):
    p = _dedupe(points, closed, tol)
    if closed and len(p) < 3:
        if len(p) == 2:
            return Polyline(p, False, multiplicity)
        return None
    if len(p) < 2:
        return None
    return Polyline(p, closed, multiplicity)


@dataclass(frozen=True)
class LevelSetFamily:
    levels: np.ndarray
    currents: tuple
    weights: np.ndarray

    def __iter__(self):
        return iter(zip(self.levels, self.currents, self.weights))

    def total(self) -> PolylineCurrent:
        out = PolylineCurrent()
        for c in self.currents:
            out = out + c
        return out

    def to_json(self) -> dict:
        from .currents import current_to_json
        return {"levels": [float(x) for x in self.levels],
                "weights": [float(x) for x in self.weights],
                "currents": [current_to_json(c) for c in self.currents]}


def contour_current(f: ScalarField, level: float, values=None) -> PolylineCurrent:
    v = f.values if values is None else values
    tol = 1e-9 * f.spacing
    polys = []
    for pts, closed in _contour_polylines(v, float(level), f.spacing):
        p = _polyline_or_none(pts, closed, tol)
        if p is not None:
            polys.append(p)
    return PolylineCurrent(polys)


def extract_level_sets(f: ScalarField, levels) -> LevelSetFamily:
    """Oriented marching-squares contours of ``f`` for each level."""
    lv = np.atleast_1d(np.asarray(levels, dtype=float))
    if lv.size == 0:
        raise ValueError("level list is empty")
    if lv.size > MAX_LEVELS:
        raise ValueError(f"at most {MAX_LEVELS} levels are supported")
    if not np.all(np.isfinite(lv)):
        raise ValueError("levels must be finite")
    currents = tuple(contour_current(f, L) for L in lv)
    return LevelSetFamily(lv, currents, level_weights(lv))


# --- curvature --------------------------------------------------------------

def turning_angles(p: Polyline) -> np.ndarray:
    """Signed turn at every vertex (zero at the ends of an open polyline)."""
    d = p.ends - p.starts
    ang = np.zeros(len(p.vertices))
    if p.closed:
        din = np.roll(d, 1, axis=0)
        dout = d
        ang[:] = np.arctan2(din[:, 0] * dout[:, 1] - din[:, 1] * dout[:, 0],
                            np.einsum("ij,ij->i", din, dout))
    elif len(d) >= 2:
        din, dout = d[:-1], d[1:]
        ang[1:-1] = np.arctan2(din[:, 0] * dout[:, 1] - din[:, 1] * dout[:, 0],
                               np.einsum("ij,ij->i", din, dout))
    return ang


@dataclass(frozen=True)
class Atom:
    polyline: int
    vertex: int
    point: tuple
    turn: float
    weight: float


@dataclass(frozen=True)
class CurvatureCurrent:
    """Smooth curvature density per segment plus atomic corner turns."""

    carrier: PolylineCurrent
    smooth_density: tuple
    atoms: tuple = field(default_factory=tuple)
    vertex_turns: tuple | None = None

    def total_turning(self) -> np.ndarray:
        """Signed total turning of each polyline (smooth part plus atoms)."""
        tot = np.array([float(d @ p.lengths) for d, p in zip(self.smooth_density, self.carrier)])
        for a in self.atoms:
            tot[a.polyline] += a.turn
        return tot

    def unsigned_total(self) -> float:
        """Sum of absolute vertex turns (falls back to the density when unknown)."""
        if self.vertex_turns is not None:
            s = sum(float(np.abs(t).sum()) for t in self.vertex_turns)
        else:
            s = sum(float(np.abs(d) @ p.lengths) for d, p in zip(self.smooth_density, self.carrier))
        return s + sum(abs(a.turn) for a in self.atoms)

    def segment_multiplicities(self, weights=None) -> list:
        """Per-segment signed multiplicity of the curvature 1-current.

        ``weights`` (one scalar or one array per polyline) scales the smooth
        density; each atom adds ``turn * atom.weight / (l_prev + l_next)`` to
        its two incident segments.
        """
        out = []
        for k, (d, p) in enumerate(zip(self.smooth_density, self.carrier)):
            w = 1.0 if weights is None else weights[k]
            out.append(np.asarray(d * w, dtype=float).copy())
        for a in self.atoms:
            p = self.carrier.polylines[a.polyline]
            n = p.n_segments
            nxt = a.vertex % n
            prv = (a.vertex - 1) % n
            L = p.lengths[prv] + p.lengths[nxt]
            out[a.polyline][prv] += a.turn * a.weight / L
            out[a.polyline][nxt] += a.turn * a.weight / L
        return out

    def as_current(self, weights=None) -> PolylineCurrent:
        mult = self.segment_multiplicities(weights)
        return PolylineCurrent(Polyline(p.vertices, p.closed, m) for p, m in zip(self.carrier, mult))

    def to_json(self) -> dict:
        from .currents import current_to_json
        return {"carrier": current_to_json(self.carrier),
                "smooth_density": [d.tolist() for d in self.smooth_density],
                "atoms": [{"polyline": a.polyline, "vertex": a.vertex, "point": list(a.point),
                           "turn": a.turn, "weight": a.weight} for a in self.atoms]}


def _spread_turns(s_v: np.ndarray, turn: np.ndarray, seg_start: np.ndarray,
                  seg_end: np.ndarray, width: float, total: float, closed: bool) -> np.ndarray:
    """Spread point turns at arclengths ``s_v`` uniformly over ``[s_v - w, s_v + w]``.

    Returns the turning carried by each segment ``[seg_start, seg_end]``.
    Intervals wrap around on closed curves and are clipped to ``[0, total]``
    on open ones, so the total turning is conserved in both cases.
    """
    a = s_v - width
    b = s_v + width
    t = turn
    if closed:
        a = np.concatenate([a, a - total, a + total])
        b = np.concatenate([b, b - total, b + total])
        t = np.concatenate([t, t, t])
    else:
        a = np.clip(a, 0.0, total)
        b = np.clip(b, 0.0, total)
        zero = b - a <= 0
        a = np.where(zero, s_v, a)
        b = np.where(zero, s_v, b)
    point = b - a <= 0
    c = np.where(point, 0.0, t / np.where(point, 1.0, b - a))
    oa = np.argsort(a)
    ob = np.argsort(b)
    A, B = a[oa], b[ob]
    ca, cb = np.cumsum(c[oa]), np.cumsum(c[ob])
    caa, cba = np.cumsum(c[oa] * a[oa]), np.cumsum(c[ob] * a[ob])
    tb = np.cumsum(np.where(point, t, t)[ob])

    def F(s):
        ia = np.searchsorted(A, s, side="left")
        ib = np.searchsorted(B, s, side="right")
        pick = lambda arr, i: np.where(i > 0, arr[np.maximum(i - 1, 0)], 0.0)
        done = pick(tb, ib)
        ramp = (s * pick(ca, ia) - pick(caa, ia)) - (s * pick(cb, ib) - pick(cba, ib))
        return done + ramp

    return F(seg_end) - F(seg_start)


def curvature_density(c: PolylineCurrent, corner_threshold: float = CORNER_THRESHOLD,
                      atom_weights=None, smoothing: float = 0.0) -> CurvatureCurrent:
    """Turning-angle curvature of every polyline in ``c``.

    A turn with ``|angle| > corner_threshold`` becomes an atom.  Every other
    turn is split half and half between its two segments, or, with
    ``smoothing > 0``, spread evenly over an arclength window of half-width
    ``smoothing``; the result is divided by the segment length.  Atom weights
    default to the mean ``|multiplicity|`` of the two incident segments.
    """
    dens = []
    atoms = []
    turns = []
    for k, p in enumerate(c.polylines):
        L = p.lengths
        if np.any(L <= 0):
            raise ValueError("degenerate zero-length segment")
        ang = turning_angles(p)
        corner = np.abs(ang) > corner_threshold
        smooth = np.where(corner, 0.0, ang)
        turns.append(smooth)
        n = p.n_segments
        if smoothing > 0:
            cum = np.concatenate([[0.0], np.cumsum(L)])
            s_v = cum[:len(p.vertices)]
            per_seg = _spread_turns(s_v, smooth, cum[:-1], cum[1:], smoothing,
                                    float(cum[-1]), p.closed)
        elif p.closed:
            per_seg = 0.5 * smooth[:n] + 0.5 * np.roll(smooth, -1)[:n]
        else:
            per_seg = 0.5 * smooth[:-1] + 0.5 * smooth[1:]
        dens.append(per_seg / L)
        absm = np.abs(p.multiplicity)
        for v in np.flatnonzero(corner):
            if atom_weights is not None:
                w = float(atom_weights[k][v])
            else:
                w = 0.5 * float(absm[(v - 1) % n] + absm[v % n])
            atoms.append(Atom(k, int(v), tuple(map(float, p.vertices[v])), float(ang[v]), w))
    return CurvatureCurrent(c, tuple(dens), tuple(atoms), tuple(turns))


# --- jump sets ----------------------------------------------------------------

def _bilinear(v: np.ndarray, spacing: float, pts: np.ndarray) -> np.ndarray:
    coords = np.stack([pts[:, 1] / spacing, pts[:, 0] / spacing])
    return ndimage.map_coordinates(v, coords, order=1, mode="nearest")


@dataclass(frozen=True)
class JumpSet:
    """Discontinuity curves with one-sided traces (``f1`` left/high, ``f2`` right/low)."""

    current: PolylineCurrent
    f1: tuple
    f2: tuple

    @classmethod
    def empty(cls) -> "JumpSet":
        return cls(PolylineCurrent(), (), ())

    def __len__(self):
        return len(self.current)

    def heights(self) -> list:
        return [np.abs(a - b) for a, b in zip(self.f1, self.f2)]

    def length(self) -> float:
        return float(sum(p.lengths.sum() for p in self.current))

    def __add__(self, other: "JumpSet") -> "JumpSet":
        return JumpSet(self.current + other.current, self.f1 + other.f1, self.f2 + other.f2)

    def select(self, idx) -> "JumpSet":
        idx = list(idx)
        return JumpSet(PolylineCurrent(self.current.polylines[i] for i in idx),
                       tuple(self.f1[i] for i in idx), tuple(self.f2[i] for i in idx))


def _segment_normals(p: Polyline) -> np.ndarray:
    d = p.ends - p.starts
    d = d / np.hypot(d[:, 0], d[:, 1])[:, None]
    return np.stack([-d[:, 1], d[:, 0]], axis=1)  # left normal


def _sample_traces(f: ScalarField, gmag: np.ndarray, p: Polyline, threshold: float,
                   reach: int):
    """One-sided values: step outwards one pixel at a time until the gradient
    drops below ``threshold`` (at most ``reach`` pixels)."""
    mid = 0.5 * (p.starts + p.ends)
    nrm = _segment_normals(p)
    h = f.spacing
    out = []
    for sgn in (1.0, -1.0):
        val = np.full(len(mid), np.nan)
        dist = np.full(len(mid), float(reach))
        for s in range(1, reach + 1):
            q = mid + sgn * s * h * nrm
            g = _bilinear(gmag, h, q)
            fv = _bilinear(f.values, h, q)
            take = np.isnan(val) & ((g < threshold) | (s == reach))
            val[take] = fv[take]
            dist[take] = s
        out.append((val, dist))
    return out


def extract_jump_set(f: ScalarField, grad_threshold: float, min_length: float = 0.0,
                     reach: int = 4, return_band: bool = False):
    """Curves across which ``f`` changes faster than ``grad_threshold``.

    Each connected band of steep pixels contributes the contour of ``f`` at
    the band's mid value, cut to the band.  Traces are sampled just outside
    the band on either side (at most ``reach`` pixels away).
    """
    if not grad_threshold > 0:
        raise ValueError("grad_threshold must be positive")
    gm = gradient(f).magnitude()
    band = gm >= grad_threshold
    labels, nlab = ndimage.label(band, structure=np.ones((3, 3)))
    polys, f1s, f2s = [], [], []
    h = f.spacing
    tol = 1e-9 * h
    for lab in range(1, nlab + 1):
        comp = labels == lab
        grown = ndimage.binary_dilation(comp, iterations=1)
        vals = f.values[grown]
        mid_level = 0.5 * (vals.min() + vals.max())
        if vals.max() - vals.min() <= 0:
            continue
        for pts, closed in _contour_polylines(f.values, mid_level, h):
            # keep runs of points lying inside the grown band
            ij = np.clip(np.rint(pts[:, ::-1] / h).astype(int), 0,
                         np.array(f.shape) - 1)
            inside = grown[ij[:, 0], ij[:, 1]]
            if closed and inside.all():
                runs = [(pts, True)]
            else:
                runs = []
                cur = []
                seq = list(range(len(pts)))
                if closed:
                    # rotate so that the sequence starts outside the band
                    first_out = int(np.flatnonzero(~inside)[0])
                    seq = seq[first_out:] + seq[:first_out] + [seq[first_out]]
                for q in seq:
                    if inside[q]:
                        cur.append(q)
                    else:
                        if len(cur) >= 2:
                            runs.append((pts[cur], False))
                        cur = []
                if len(cur) >= 2:
                    runs.append((pts[cur], False))
            for rp, rc in runs:
                poly = _polyline_or_none(rp, rc, tol)
                if poly is None or poly.lengths.sum() < min_length:
                    continue
                (v1, _), (v2, _) = _sample_traces(f, gm, poly, grad_threshold, reach)
                # split where the left trace is not strictly above the right one
                good = v1 > v2
                for piece in _split_runs(poly, good):
                    pl, sl = piece
                    if pl.lengths.sum() < min_length:
                        continue
                    polys.append(pl)
                    f1s.append(v1[sl])
                    f2s.append(v2[sl])
    js = JumpSet(PolylineCurrent(polys), tuple(f1s), tuple(f2s))
    return (js, band) if return_band else js


def _split_runs(p: Polyline, good: np.ndarray):
    """Split a polyline into maximal runs of ``good`` segments."""
    if good.all():
        return [(p, slice(0, p.n_segments))]
    out = []
    n = p.n_segments
    k = 0
    while k < n:
        if not good[k]:
            k += 1
            continue
        s = k
        while k < n and good[k]:
            k += 1
        verts = np.array([p.vertices[i % len(p.vertices)] for i in range(s, k + 1)])
        out.append((Polyline(verts, False, p.multiplicity[s:k]), slice(s, k)))
    return out


def jump_pixel_mask(shape, spacing: float, jumps: JumpSet | None, radius: float = 1.0) -> np.ndarray:
    """Pixels whose centre lies within ``radius`` pixels of a jump curve."""
    mask = np.zeros(shape, dtype=bool)
    if jumps is None or len(jumps) == 0:
        return mask
    H, W = shape
    r = radius * spacing
    for p in jumps.current:
        lo = np.floor((p.vertices.min(axis=0) - r) / spacing).astype(int)
        hi = np.ceil((p.vertices.max(axis=0) + r) / spacing).astype(int)
        j0, i0 = max(lo[0], 0), max(lo[1], 0)
        j1, i1 = min(hi[0], W - 1), min(hi[1], H - 1)
        if j1 < j0 or i1 < i0:
            continue
        jj, ii = np.meshgrid(np.arange(j0, j1 + 1), np.arange(i0, i1 + 1))
        pts = np.stack([jj.ravel() * spacing, ii.ravel() * spacing], axis=1)
        d, _, _ = _distance_to_polyline(pts, p)
        mask[ii.ravel()[d < r], jj.ravel()[d < r]] = True
    return mask


def _distance_to_polyline(pts: np.ndarray, p: Polyline):
    """Distance, nearest segment index and signed side (+1 left) for each point."""
    a = p.starts
    d = p.ends - a
    L2 = np.einsum("ij,ij->i", d, d)
    best = np.full(len(pts), np.inf)
    seg = np.zeros(len(pts), dtype=int)
    side = np.zeros(len(pts))
    for k0 in range(0, len(a), 64):
        sl = slice(k0, k0 + 64)
        rel = pts[:, None, :] - a[None, sl, :]
        t = np.clip(np.einsum("psj,sj->ps", rel, d[sl]) / L2[None, sl], 0.0, 1.0)
        q = rel - t[..., None] * d[None, sl, :]
        dist = np.hypot(q[..., 0], q[..., 1])
        k = np.argmin(dist, axis=1)
        dk = dist[np.arange(len(pts)), k]
        upd = dk < best
        best[upd] = dk[upd]
        seg[upd] = k[upd] + k0
        cr = d[sl][k, 0] * rel[np.arange(len(pts)), k, 1] - d[sl][k, 1] * rel[np.arange(len(pts)), k, 0]
        side[upd] = np.sign(cr[upd])
    return best, seg, side


def sharpen_across(f: ScalarField, jumps: JumpSet, reach: float = 3.0) -> ScalarField:
    """Replace pixels near each jump curve by the trace of their side."""
    v = f.values.copy()
    H, W = v.shape
    h = f.spacing
    r = reach * h
    for p, t1, t2 in zip(jumps.current, jumps.f1, jumps.f2):
        lo = np.floor((p.vertices.min(axis=0) - r) / h).astype(int)
        hi = np.ceil((p.vertices.max(axis=0) + r) / h).astype(int)
        j0, i0 = max(lo[0], 0), max(lo[1], 0)
        j1, i1 = min(hi[0], W - 1), min(hi[1], H - 1)
        if j1 < j0 or i1 < i0:
            continue
        jj, ii = np.meshgrid(np.arange(j0, j1 + 1), np.arange(i0, i1 + 1))
        pts = np.stack([jj.ravel() * h, ii.ravel() * h], axis=1)
        d, seg, side = _distance_to_polyline(pts, p)
        # only pixels that project onto the interior of the curve
        a = p.starts[seg]
        dd = p.ends[seg] - a
        t = np.einsum("ij,ij->i", pts - a, dd) / np.einsum("ij,ij->i", dd, dd)
        interior = (t > 0) & (t < 1) | ((seg > 0) & (seg < p.n_segments - 1))
        sel = (d < r) & interior & (side != 0)
        newv = np.where(side > 0, t1[seg], t2[seg])
        v[ii.ravel()[sel], jj.ravel()[sel]] = newv[sel]
    return f.with_values(v)


def introduce_discontinuity(f: ScalarField, grad_threshold: float, min_length: float,
                            min_height: float, energy, accepted: JumpSet | None = None,
                            reach: int = 4):
    """Try to cut ``f`` along its steep curves.

    ``energy(field, jumps) -> float`` evaluates the total energy with a given
    set of cuts.  A candidate is kept only when sharpening ``f`` across it
    strictly lowers that energy.  Returns ``(field, accepted cuts)``.
    """
    if not (grad_threshold > 0 and min_length > 0 and min_height > 0):
        raise ValueError("thresholds must be positive")
    acc = JumpSet.empty() if accepted is None else accepted
    cand = extract_jump_set(f, grad_threshold, min_length, reach=reach)
    current = f
    e0 = energy(current, acc)
    for k in range(len(cand)):
        heights = np.abs(cand.f1[k] - cand.f2[k])
        if heights.mean() < min_height:
            continue
        one = cand.select([k])
        trial = sharpen_across(current, one, reach=reach - 1)
        e1 = energy(trial, acc + one)
        if e1 < e0:
            current, acc, e0 = trial, acc + one, e1
    return current, acc
