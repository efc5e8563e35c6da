"""Straight-line analysis of 1-currents lifted to position x direction space."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy import sparse

from .currents import Polyline, PolylineCurrent, SegmentTuple, to_segment_tuples
from .field import ScalarField, atomic_write_bytes
from .levelsets import contour_current, turning_angles

TWO_PI = 2.0 * np.pi
DIRECTION_BINS = 36


def angle_distance(a, b):
    """Distance on the circle: ``min(|a - b|, 2 pi - |a - b|)``."""
    d = np.mod(np.abs(np.asarray(a) - np.asarray(b)), TWO_PI)
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class FiberArc:
    """A turn in place: position fixed, direction sweeping ``sweep`` from ``theta``."""

    x: float
    y: float
    theta: float
    sweep: float
    mass: float


@dataclass(frozen=True)
class LiftedCurrent:
    """Segments with their direction angle; corners become fiber arcs."""

    starts: np.ndarray
    ends: np.ndarray
    theta: np.ndarray
    mass: np.ndarray
    density: np.ndarray
    arcs: tuple = ()

    def __len__(self):
        return len(self.theta)

    @property
    def positions(self) -> np.ndarray:
        return 0.5 * (self.starts + self.ends)

    @property
    def lengths(self) -> np.ndarray:
        d = self.ends - self.starts
        return np.hypot(d[:, 0], d[:, 1])

    def total_mass(self) -> float:
        return float(self.mass.sum())

    def total_sweep(self) -> float:
        return float(sum(abs(a.sweep) for a in self.arcs))

    @classmethod
    def empty(cls) -> "LiftedCurrent":
        z = np.zeros((0, 2))
        return cls(z, z.copy(), np.zeros(0), np.zeros(0), np.zeros(0), ())

    def to_current(self) -> PolylineCurrent:
        return PolylineCurrent(Polyline(np.array([a, b]), False, m)
                               for a, b, m in zip(self.starts, self.ends, self.density))

    def to_tuples(self) -> list[SegmentTuple]:
        return to_segment_tuples(self.to_current())


def _direction(d: np.ndarray) -> np.ndarray:
    return np.mod(np.arctan2(d[:, 1], d[:, 0]), TWO_PI)


def lift(c: PolylineCurrent, turn_cost: float = 1.0) -> LiftedCurrent:
    """One lifted segment per polyline segment, plus a fiber arc per corner.

    A negative multiplicity flips the segment so that every lifted segment
    carries a non-negative density along its own direction.
    """
    S, E, M = [], [], []
    arcs = []
    for p in c:
        m = p.multiplicity
        s = np.where(m[:, None] >= 0, p.starts, p.ends)
        e = np.where(m[:, None] >= 0, p.ends, p.starts)
        S.append(s)
        E.append(e)
        M.append(np.abs(m))
        th = _direction(p.ends - p.starts)
        turns = turning_angles(p)
        n = p.n_segments
        for v in range(len(p.vertices)):
            if turns[v] == 0:
                continue
            prev = (v - 1) % n
            x, y = p.vertices[v]
            dens = 0.5 * (abs(m[prev]) + abs(m[v % n]))
            arcs.append(FiberArc(float(x), float(y), float(th[prev]), float(turns[v]),
                                 float(abs(turns[v]) * turn_cost * dens)))
    if not S:
        return LiftedCurrent.empty()
    s = np.concatenate(S)
    e = np.concatenate(E)
    dens = np.concatenate(M)
    keep = dens > 0
    s, e, dens = s[keep], e[keep], dens[keep]
    L = np.hypot(*(e - s).T)
    return LiftedCurrent(s, e, _direction(e - s), dens * L, dens, tuple(arcs))


# --- projection -------------------------------------------------------------------

@dataclass(frozen=True)
class DirectionHistogram:
    """Lifted mass pushed onto ``L`` x S^1.

    ``axis_angle`` is the normal direction of ``L``; positions are measured
    along ``L``'s own direction ``axis_angle - pi/2``.
    """

    axis_angle: float
    origin: float
    bin_width: float
    direction_bins: int
    mass: np.ndarray  # (position bins, direction bins)

    def total(self) -> float:
        return float(self.mass.sum())

    def position_centres(self) -> np.ndarray:
        return self.origin + (np.arange(self.mass.shape[0]) + 0.5) * self.bin_width

    def direction_bin(self, theta: float) -> int:
        return int(np.floor(np.mod(theta, TWO_PI) / (TWO_PI / self.direction_bins))) % self.direction_bins

    def perpendicular_mass(self, both: bool = True) -> np.ndarray:
        """Mass per position bin carried by directions perpendicular to ``L``.

        With ``both`` the two orientations are added; otherwise only the
        ``axis_angle`` orientation is returned.
        """
        out = self.mass[:, self.direction_bin(self.axis_angle)].copy()
        if both:
            out += self.mass[:, self.direction_bin(self.axis_angle + np.pi)]
        return out

    def spikes(self, fraction: float = 0.5) -> list:
        """Cells at the two perpendicular orientations holding at least
        ``fraction`` of the largest perpendicular cell mass."""
        cols = [self.direction_bin(self.axis_angle), self.direction_bin(self.axis_angle + np.pi)]
        sub = self.mass[:, cols]
        if sub.size == 0 or sub.max() <= 0:
            return []
        thr = fraction * sub.max()
        return [(int(i), cols[j], float(sub[i, j])) for i, j in zip(*np.nonzero(sub >= thr))]

    def frequency_profile(self):
        """Spectrum of the perpendicular-mass profile along ``L``.

        Returns ``(frequencies per unit length, amplitudes)`` with the mean removed.
        """
        prof = self.perpendicular_mass()
        if len(prof) < 2:
            return np.zeros(0), np.zeros(0)
        amp = np.abs(np.fft.rfft(prof - prof.mean()))
        freq = np.fft.rfftfreq(len(prof), d=self.bin_width)
        return freq, amp

    def dominant_frequency(self) -> float:
        freq, amp = self.frequency_profile()
        if len(amp) < 2 or amp[1:].max() <= 0:
            return 0.0
        return float(freq[1 + np.argmax(amp[1:])])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("position_bin,direction_bin,mass\n")
        for i, j in zip(*np.nonzero(self.mass)):
            buf.write(f"{i},{j},{self.mass[i, j]:.17g}\n")
        return buf.getvalue()

    def write_csv(self, path):
        atomic_write_bytes(path, self.to_csv().encode())


def project_direction_mass(l: LiftedCurrent, axis_angle: float, bin_width: float,
                           direction_bins: int = DIRECTION_BINS, extent=None) -> DirectionHistogram:
    """Deposit each lifted segment's mass at (projection of its midpoint, direction bin).

    ``extent`` fixes the ``(lo, hi)`` range of positions along ``L``;
    by default it spans the data.
    """
    if not bin_width > 0:
        raise ValueError("bin_width must be positive")
    if direction_bins < 1:
        raise ValueError("direction_bins must be positive")
    along = np.array([np.sin(axis_angle), -np.cos(axis_angle)])
    pos = l.positions @ along if len(l) else np.zeros(0)
    if extent is None:
        lo = float(np.floor(pos.min() / bin_width) * bin_width) if len(pos) else 0.0
        hi = float(pos.max()) if len(pos) else bin_width
    else:
        lo, hi = map(float, extent)
    nb = max(int(np.floor((hi - lo) / bin_width)) + 1, 1)
    pb = np.clip(np.floor((pos - lo) / bin_width).astype(int), 0, nb - 1)
    db = np.floor(l.theta / (TWO_PI / direction_bins)).astype(int) % direction_bins
    H = np.zeros((nb, direction_bins))
    np.add.at(H, (pb, db), l.mass)
    return DirectionHistogram(float(axis_angle), lo, float(bin_width), int(direction_bins), H)


# --- completion -------------------------------------------------------------------

@dataclass(frozen=True)
class CompletionPenalty:
    boundary_cost: float = 1.0
    turn_cost: float = 1.0

    def __post_init__(self):
        if not (self.boundary_cost > 0 and self.turn_cost > 0):
            raise ValueError("completion penalties must be positive")


def _collinear_groups(l: LiftedCurrent, angle_tol: float, offset_tol: float) -> np.ndarray:
    """Label segments joined by a chain of pairwise (same direction, same line) relations."""
    n = len(l)
    if n == 0:
        return np.zeros(0, dtype=int)
    th = l.theta
    u = np.stack([np.cos(th), np.sin(th)], axis=1)
    nrm = np.stack([-u[:, 1], u[:, 0]], axis=1)
    mid = l.positions
    rows, cols = [], []
    for i in range(n):
        close = angle_distance(th[i], th) < angle_tol
        # offsets of every midpoint from line i, and of midpoint i from every line
        off1 = np.abs((mid - mid[i]) @ nrm[i])
        off2 = np.abs(np.einsum("ij,ij->i", mid[i] - mid, nrm))
        ok = close & (off1 <= offset_tol) & (off2 <= offset_tol)
        ok[i] = False
        j = np.flatnonzero(ok)
        rows.extend([i] * len(j))
        cols.extend(j.tolist())
    A = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(A, directed=False)
    return labels


@dataclass(frozen=True)
class CompletionResult:
    lifted: LiftedCurrent
    added: int
    lines: list  # one list of segment indices per maximal line

    @property
    def n_lines(self) -> int:
        return len(self.lines)


def complete_lines(l: LiftedCurrent, p: CompletionPenalty, gap_max: float,
                   direction_bins: int = DIRECTION_BINS, position_bin: float | None = None,
                   return_result: bool = False):
    """Fill gaps between collinear, equally oriented segments when cheaper than ends.

    Segments within one direction bin and one position bin of each other are
    grouped and projected onto their common line.  Between consecutive
    covered intervals a connector is inserted when
    ``density * gap + turn_cost * density * |turn| < boundary_cost * (m_a + m_b)``,
    with ``m_a, m_b`` the densities of the two facing ends.
    """
    if not gap_max > 0:
        raise ValueError("gap_max must be positive")
    n = len(l)
    angle_tol = TWO_PI / direction_bins
    if position_bin is None:
        span = float(np.ptp(np.concatenate([l.starts, l.ends]), axis=0).max()) if n else 1.0
        position_bin = 0.02 * max(span, 1e-12)
    labels = _collinear_groups(l, angle_tol, position_bin)
    new_s, new_e, new_m = [], [], []
    lines = []
    tol = 1e-9 * max(gap_max, 1.0)
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        # common direction: mass-weighted mean of unit vectors
        u = np.array([np.cos(l.theta[idx]), np.sin(l.theta[idx])]).T
        ud = (u * l.mass[idx, None]).sum(axis=0)
        ud /= np.hypot(*ud)
        s0 = l.starts[idx] @ ud
        s1 = l.ends[idx] @ ud
        order = np.argsort(s0, kind="stable")
        cur = [idx[order[0]]]
        hi_end = s1[order[0]]
        hi_idx = idx[order[0]]
        for k in order[1:]:
            i = idx[k]
            gap = s0[k] - hi_end
            if gap <= tol:
                cur.append(i)
            else:
                a, b = l.ends[hi_idx], l.starts[i]
                ma, mb = l.density[hi_idx], l.density[i]
                dens = 0.5 * (ma + mb)
                link = b - a
                glen = float(np.hypot(*link))
                tg = float(np.mod(np.arctan2(link[1], link[0]), TWO_PI))
                turn = float(angle_distance(l.theta[hi_idx], tg) + angle_distance(tg, l.theta[i]))
                cost = dens * glen + p.turn_cost * dens * turn
                if glen <= gap_max and cost < p.boundary_cost * (ma + mb):
                    new_s.append(a)
                    new_e.append(b)
                    new_m.append(dens)
                    cur.append(-len(new_s))  # placeholder for the connector
                    cur.append(i)
                else:
                    lines.append(cur)
                    cur = [i]
            if s1[k] > hi_end:
                hi_end, hi_idx = s1[k], i
        lines.append(cur)
    if not new_s:
        out = l
    else:
        s = np.concatenate([l.starts, np.array(new_s)])
        e = np.concatenate([l.ends, np.array(new_e)])
        d = np.concatenate([l.density, np.array(new_m)])
        L = np.hypot(*(e - s).T)
        out = LiftedCurrent(s, e, _direction(e - s), d * L, d, l.arcs)
    fixed = [[i if i >= 0 else n - 1 - i for i in ln] for ln in lines]
    res = CompletionResult(out, len(new_s), fixed)
    return res if return_result else out


def maximal_lines(l: LiftedCurrent, p: CompletionPenalty | None = None, gap_max: float = np.inf,
                  direction_bins: int = DIRECTION_BINS, position_bin: float | None = None) -> int:
    """Number of maximal straight lines after completion."""
    if len(l) == 0:
        return 0
    p = CompletionPenalty() if p is None else p
    return complete_lines(l, p, gap_max, direction_bins, position_bin, return_result=True).n_lines


# --- from images --------------------------------------------------------------------

def straight_runs(c: PolylineCurrent, tolerance: float, min_length: float = 0.0) -> PolylineCurrent:
    """Split every polyline into straight pieces (Douglas-Peucker simplification)."""
    from skimage.measure import approximate_polygon

    out = []
    for p in c:
        v = p.vertices
        if p.closed:
            v = np.vstack([v, v[:1]])
        simp = approximate_polygon(v, tolerance)
        m = float(np.mean(p.multiplicity))
        for a, b in zip(simp[:-1], simp[1:]):
            if np.hypot(*(b - a)) > max(min_length, 0.0) and np.any(a != b):
                out.append(Polyline(np.array([a, b]), False, m))
    return PolylineCurrent(out)


def image_edges(f: ScalarField, level: float | None = None, tolerance: float = 1.0,
                min_length: float = 4.0) -> PolylineCurrent:
    """Straight pieces of the contour of ``f`` at ``level`` (default: mid range).

    ``tolerance`` and ``min_length`` are in pixels.
    """
    v = f.values
    if np.ptp(v) <= 0:
        return PolylineCurrent()
    lev = 0.5 * (v.min() + v.max()) if level is None else level
    c = contour_current(f, lev)
    return straight_runs(c, tolerance * f.spacing, min_length * f.spacing)
