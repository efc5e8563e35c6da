"""The seven-term energy, region costs, and a greedy proposal-and-accept descent."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from .currents import tuples_array
from .fidelity import (FidelityConfig, build_curvature_current, f1_l1, f2_flat_fidelity,
                       field_complex)
from .field import ScalarField, atomic_write_bytes, gradient, hessian
from .levelsets import (JumpSet, extract_level_sets, introduce_discontinuity, level_weights)
from .regularity import (crease_density, hessian_density, r1_total_curvature,
                         r2_jump_curvature, r3_crease_curvature, r4_graph_mass,
                         r5_hessian_energy, total_curvature_density)

TERMS = ("r1", "r2", "r3", "r4", "r5", "f1", "f2")


@dataclass(frozen=True)
class EnergyWeights:
    gamma1: float = 1.0
    gamma2: float = 1.0
    gamma3: float = 1.0
    gamma4: float = 1.0
    gamma5: float = 1.0
    gamma6: float = 1.0
    gamma7: float = 1.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{k} must be finite and non-negative, got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, f"gamma{i}") for i in range(1, 8)], dtype=float)

    @classmethod
    def only(cls, **kw) -> "EnergyWeights":
        """All weights zero except the ones given."""
        base = {f"gamma{i}": 0.0 for i in range(1, 8)}
        base.update(kw)
        return cls(**base)


@dataclass(frozen=True)
class EnergyConfig(FidelityConfig):
    """Numerical settings for every term of the energy."""

    epsilon: float = 1e-3
    crease_threshold: float = 0.5
    jump_threshold: float = np.inf
    jump_factor: float = 2.0
    squared_hessian: bool = True

    def __post_init__(self):
        super().__post_init__()
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.crease_threshold > 0:
            raise ValueError("crease_threshold must be positive")
        if not self.jump_threshold > 0:
            raise ValueError("jump_threshold must be positive")
        if not self.jump_factor >= 0:
            raise ValueError("jump_factor must be non-negative")

    def to_json(self) -> dict:
        d = asdict(self)
        d["levels"] = [float(x) for x in self.levels]
        d["jump_threshold"] = None if not np.isfinite(self.jump_threshold) else self.jump_threshold
        return d


@dataclass(frozen=True)
class EnergyBreakdown:
    r1: float
    r2: float
    r3: float
    r4: float
    r5: float
    f1: float
    f2: float
    weights: EnergyWeights
    total: float

    def terms(self) -> np.ndarray:
        return np.array([getattr(self, t) for t in TERMS])

    def to_json(self) -> dict:
        d = {t: float(getattr(self, t)) for t in TERMS}
        d["weights"] = asdict(self.weights)
        d["weighted"] = {t: float(w * getattr(self, t))
                         for t, w in zip(TERMS, self.weights.as_array())}
        d["total"] = float(self.total)
        d["regularity"] = {t: d[t] for t in TERMS[:5]}
        d["fidelity"] = {t: d[t] for t in TERMS[5:]}
        return d


def _check_grids(f: ScalarField, g: ScalarField):
    if f.shape != g.shape or f.spacing != g.spacing:
        raise ValueError(f"grid mismatch: {f.shape}@{f.spacing} vs {g.shape}@{g.spacing}")


def energy(f: ScalarField, g: ScalarField, w: EnergyWeights, config: EnergyConfig | None = None,
           jumps: JumpSet | None = None, evaluate_all: bool = False,
           g_chain=None) -> EnergyBreakdown:
    """All seven terms and their weighted sum.

    Terms with zero weight are reported as 0 unless ``evaluate_all``.
    """
    _check_grids(f, g)
    cfg = EnergyConfig() if config is None else config
    gam = w.as_array()
    need = (gam > 0) | evaluate_all
    vals = dict.fromkeys(TERMS, 0.0)
    if need[0]:
        vals["r1"] = r1_total_curvature(f, cfg.epsilon, jumps=jumps)
    if need[1]:
        vals["r2"] = r2_jump_curvature(jumps, cfg.corner_threshold)
    if need[2]:
        vals["r3"] = r3_crease_curvature(f, cfg.crease_threshold, cfg.jump_threshold, jumps=jumps)
    if need[3]:
        vals["r4"] = r4_graph_mass(f, jumps, cfg.jump_factor)
    if need[4]:
        vals["r5"] = r5_hessian_energy(f, cfg.squared_hessian, jumps=jumps)
    if need[5]:
        vals["f1"] = f1_l1(f, g)
    if need[6]:
        vals["f2"] = f2_flat_fidelity(f, g, cfg, jumps_f=jumps, g_chain=g_chain)
    total = float(sum(gi * vals[t] for gi, t in zip(gam, TERMS)))
    return EnergyBreakdown(**vals, weights=w, total=total)


# --- region costs -------------------------------------------------------------

def region_regularity_cost(tuples) -> float:
    """Unsigned size of a set of ``(x, y, a, b)`` tuples: sum of ``|(a, b)|``."""
    arr = tuples_array(tuples)
    if len(arr) == 0:
        return 0.0
    return float(np.sum(np.hypot(arr[:, 2], arr[:, 3])))


def region_flatnorm_penalty(tuples) -> float:
    """``max over theta of cos(theta) sum a + sin(theta) sum b``, i.e. ``|sum (a, b)|``."""
    arr = tuples_array(tuples)
    if len(arr) == 0:
        return 0.0
    return float(np.hypot(arr[:, 2].sum(), arr[:, 3].sum()))


def level_tuples(f: ScalarField, levels) -> np.ndarray:
    """Coarea-weighted level-set segments of ``f`` as an ``(n, 4)`` tuple array."""
    fam = extract_level_sets(f, levels)
    w = level_weights(fam.levels)
    rows = []
    for wl, c in zip(w, fam.currents):
        for p in c:
            mid = 0.5 * (p.starts + p.ends)
            ab = wl * (p.ends - p.starts)
            rows.append(np.column_stack([mid, ab]))
    return np.concatenate(rows) if rows else np.zeros((0, 4))


# --- descent --------------------------------------------------------------------

@dataclass(frozen=True)
class DescentParams:
    max_iters: int = 20
    step: float = 0.2
    region_size: int = 9
    seed: int = 0
    trigger_ratio: float = 2.0
    flow_steps: int = 1
    discontinuities: bool = False
    grad_threshold: float = 0.25
    min_cut_length: float = 5.0
    min_cut_height: float = 0.2
    max_batch_evals: int = 24
    threads: int = 1

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not (0 < self.step <= 0.25):
            raise ValueError("step must lie in (0, 0.25] for a stable explicit flow")
        if self.region_size < 3:
            raise ValueError("region_size must be at least 3 pixels")
        if not self.trigger_ratio >= 1:
            raise ValueError("trigger_ratio must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class DescentTrace:
    records: list = field(default_factory=list)
    jumps: JumpSet = field(default_factory=JumpSet.empty)

    def add(self, iteration: int, total: float, step: str, accepted: bool):
        if accepted:
            prev = self.accepted_energies()
            if prev and not total < prev[-1]:
                raise AssertionError("accepted step did not lower the energy")
        self.records.append({"iteration": int(iteration), "total": float(total),
                             "step": step, "accepted": bool(accepted)})

    def accepted_energies(self) -> list:
        return [r["total"] for r in self.records if r["accepted"]]

    @property
    def n_accepted(self) -> int:
        return sum(r["accepted"] for r in self.records) - (1 if self.records else 0)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)

    def write(self, path):
        atomic_write_bytes(path, self.to_jsonl().encode())


def curvature_flow_step(f: ScalarField, step: float, epsilon: float = 1e-3) -> ScalarField:
    """One explicit step of ``f_t = |grad f| div(grad f / |grad f|)``."""
    g = gradient(f)
    H = hessian(f)
    num = H.fxx * g.fy ** 2 - 2.0 * H.fxy * g.fx * g.fy + H.fyy * g.fx ** 2
    g2 = g.fx ** 2 + g.fy ** 2 + epsilon ** 2
    return f.with_values(f.values + step * f.spacing ** 2 * num / g2)


def _local_density(f: ScalarField, w: EnergyWeights, cfg: EnergyConfig, g: ScalarField) -> np.ndarray:
    """Per-pixel weighted energy density of the local terms (everything but R2, F2)."""
    h2 = f.spacing ** 2
    d = np.zeros(f.shape)
    if w.gamma1:
        d += w.gamma1 * total_curvature_density(f, cfg.epsilon) * h2
    if w.gamma3:
        d += w.gamma3 * crease_density(f, cfg.crease_threshold, cfg.jump_threshold)
    if w.gamma4:
        gr = gradient(f)
        d += w.gamma4 * np.sqrt(1.0 + gr.fx ** 2 + gr.fy ** 2) * h2
    if w.gamma5:
        d += w.gamma5 * hessian_density(f, cfg.squared_hessian) * h2
    if w.gamma6:
        d += w.gamma6 * np.abs(f.values - g.values) * h2
    return d


def _windows(shape, size: int, offset):
    H, W = shape
    oy, ox = offset
    ys = list(range(-oy, H, size))
    xs = list(range(-ox, W, size))
    for y0 in ys:
        for x0 in xs:
            a, b = max(y0, 0), min(y0 + size, H)
            c, d = max(x0, 0), min(x0 + size, W)
            if b - a >= 2 and d - c >= 2:
                yield a, b, c, d


def _flatten_candidates(f: ScalarField, g: ScalarField, w: EnergyWeights, cfg: EnergyConfig,
                        params: DescentParams, offset):
    """Windows whose level sets cost much more than they would pay in fidelity,
    with a negative local energy change when set to their median."""
    size = params.region_size
    tup = level_tuples(f, cfg.levels)
    h = f.spacing
    if len(tup):
        ij = np.floor(tup[:, 1::-1] / h + 0.5).astype(int)
    margin = 5
    out = []
    for a, b, c, d in _windows(f.shape, size, offset):
        if len(tup) == 0:
            break
        sel = (ij[:, 0] >= a) & (ij[:, 0] < b) & (ij[:, 1] >= c) & (ij[:, 1] < d)
        if not np.any(sel):
            continue
        t = tup[sel]
        cost = region_regularity_cost(t)
        pen = region_flatnorm_penalty(t)
        if cost <= params.trigger_ratio * pen or cost == 0:
            continue
        med = float(np.median(f.values[a:b, c:d]))
        A, B = max(a - margin, 0), min(b + margin, f.shape[0])
        C, D = max(c - margin, 0), min(d + margin, f.shape[1])
        if B - A < 3 or D - C < 3:
            continue
        crop = f.values[A:B, C:D]
        trial = crop.copy()
        trial[a - A:b - A, c - C:d - C] = med
        gcrop = ScalarField(g.values[A:B, C:D], h)
        # interior of the crop (away from the crop's own artificial border)
        ia, ib = a - A - (2 if a > A else 0), b - A + (2 if b < B else 0)
        ic, id_ = c - C - (2 if c > C else 0), d - C + (2 if d < D else 0)
        e0 = _local_density(ScalarField(crop, h), w, cfg, gcrop)[ia:ib, ic:id_].sum()
        e1 = _local_density(ScalarField(trial, h), w, cfg, gcrop)[ia:ib, ic:id_].sum()
        if e1 < e0:
            out.append(((a, b, c, d), med, e1 - e0))
    out.sort(key=lambda x: x[2])
    return out


def descend(f0: ScalarField, g: ScalarField, w: EnergyWeights, params: DescentParams | None = None,
            config: EnergyConfig | None = None, log=None):
    """Greedy descent of the energy from ``f0``.

    Each sweep tries, in order: curvature-flow steps on the whole field,
    window-median flattening of regions whose level sets cost far more than
    their signed fidelity penalty, and cuts along steep curves.  Every change
    is kept only if the full energy strictly drops.  Flattening candidates
    are screened with the local energy change and accepted in batches; a
    rejected batch is split in halves.  Returns ``(f, trace)``.
    """
    _check_grids(f0, g)
    params = DescentParams() if params is None else params
    cfg = EnergyConfig() if config is None else config
    rng = np.random.default_rng(params.seed)
    g_chain = None
    if w.gamma7 > 0:
        k = field_complex(g, cfg.complex_cell)
        g_chain = build_curvature_current(g, None, cfg.levels, k, cfg.corner_threshold,
                                          cfg.jump_margin, cfg.smoothing).chain

    jumps = JumpSet.empty()

    def E(field_, jumps_=None):
        return energy(field_, g, w, cfg, jumps if jumps_ is None else jumps_, g_chain=g_chain).total

    trace = DescentTrace()
    f = f0
    e = E(f)
    trace.add(0, e, "start", True)
    if log:
        log(f"iteration 0: energy {e:.6g}")
    for it in range(1, params.max_iters + 1):
        any_acc = False
        # (a) curvature flow
        for _ in range(params.flow_steps):
            trial = curvature_flow_step(f, params.step, cfg.epsilon)
            et = E(trial)
            ok = et < e
            trace.add(it, et, "curvature_flow", ok)
            if ok:
                f, e, any_acc = trial, et, True
            else:
                break
        # (b) window-median flattening over four half-shifted tilings, so that
        # any feature up to half a window wide fits inside some window
        budget = [params.max_batch_evals]
        base = rng.integers(0, params.region_size, 2)
        half = params.region_size // 2

        def try_batch(batch):
            nonlocal f, e, any_acc
            if not batch or budget[0] <= 0:
                return
            v = f.values.copy()
            for (a, b, c, d), med, _ in batch:
                v[a:b, c:d] = med
            trial = f.with_values(v)
            budget[0] -= 1
            et = E(trial)
            ok = et < e
            trace.add(it, et, f"flatten x{len(batch)}", ok)
            if ok:
                f, e, any_acc = trial, et, True
            elif len(batch) > 1:
                half = len(batch) // 2
                try_batch(batch[:half])
                try_batch(batch[half:])

        for sy, sx in ((0, 0), (half, half), (0, half), (half, 0)):
            offset = (int((base[0] + sy) % params.region_size), int((base[1] + sx) % params.region_size))
            try_batch(_flatten_candidates(f, g, w, cfg, params, offset))
        # (c) discontinuities
        if params.discontinuities:
            before = len(jumps)
            f_new, j_new = introduce_discontinuity(
                f, params.grad_threshold, params.min_cut_length * f.spacing,
                params.min_cut_height, lambda fld, js: E(fld, js), accepted=jumps)
            if len(j_new) > before:
                et = E(f_new, j_new)
                trace.add(it, et, f"cut x{len(j_new) - before}", et < e)
                if et < e:
                    f, jumps, e, any_acc = f_new, j_new, et, True
        if log:
            log(f"iteration {it}: energy {e:.6g}")
        if not any_acc:
            break
    trace.jumps = jumps
    return f, trace

