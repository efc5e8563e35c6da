"""Command-line entry points: denoise, energy, flatnorm, lines, synth."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .complex import boundary, box_complex
from .currents import (TupleCSVError, chain_to_tuples, rasterize_to_chain,
                       read_tuples_csv, to_segment_tuples, tuples_array, tuples_to_current,
                       write_tuples_csv)
from .field import PGMError, ScalarField, atomic_write_bytes, load_pgm, save_pgm
from .flatnorm import flat_norm_dual, flat_norm_primal
from .levelsets import default_levels
from .lines import (CompletionPenalty, complete_lines, image_edges, lift, project_direction_mass)
from .optimize import DescentParams, EnergyConfig, EnergyWeights, descend, energy
from .scenes import KINDS, SceneSpec, generate

SCHEMA_VERSION = 1


class ValidationError(Exception):
    pass


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n").encode()


def _report(kind: str, body: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": kind, **body}


def _common(p: argparse.ArgumentParser):
    for i in range(1, 8):
        p.add_argument(f"--gamma{i}", type=float, default=1.0, help=f"weight of term {i}")
    p.add_argument("--scale", type=float, default=1.0, help="flat-norm unit length")
    p.add_argument("--levels", type=int, default=8, help="number of level sets")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--complex-cell", type=float, default=8.0, help="complex cell size in pixels")
    p.add_argument("--spacing", type=float, default=None,
                   help="domain length per pixel (default: unit square)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)


def _weights(a) -> EnergyWeights:
    try:
        return EnergyWeights(*(getattr(a, f"gamma{i}") for i in range(1, 8)))
    except ValueError as e:
        raise ValidationError(str(e)) from e


def _config(a) -> EnergyConfig:
    if not 1 <= a.levels <= 256:
        raise ValidationError("--levels must lie in [1, 256]")
    if a.threads < 1:
        raise ValidationError("--threads must be >= 1")
    try:
        return EnergyConfig(levels=tuple(default_levels(a.levels)), scale=a.scale,
                            complex_cell=a.complex_cell, epsilon=a.epsilon)
    except ValueError as e:
        raise ValidationError(str(e)) from e


def _meta(f: ScalarField) -> dict:
    return {"width": f.width, "height": f.height, "spacing": f.spacing}


def _load(path, spacing) -> ScalarField:
    f = load_pgm(path)
    h = spacing if spacing is not None else 1.0 / (max(f.shape) - 1)
    if not h > 0:
        raise ValidationError("--spacing must be positive")
    return ScalarField(f.values, h)


# --- commands -------------------------------------------------------------------

def cmd_denoise(a) -> int:
    w = _weights(a)
    cfg = _config(a)
    try:
        params = DescentParams(max_iters=a.max_iters, step=a.step, region_size=a.region_size,
                               seed=a.seed, threads=a.threads,
                               discontinuities=a.discontinuities)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    g = _load(a.inp, a.spacing)
    log = (lambda m: print(m, file=sys.stderr)) if a.verbose else None
    f, trace = descend(g, g, w, params, cfg, log=log)
    e0 = energy(g, g, w, cfg)
    e1 = energy(f, g, w, cfg, jumps=trace.jumps)
    body = {"input": str(a.inp), "output": str(a.out), "config": cfg.to_json(),
            "field": _meta(g),
            "params": {"max_iters": params.max_iters, "step": params.step,
                       "region_size": params.region_size, "seed": params.seed,
                       "threads": params.threads},
            "initial": e0.to_json(), "final": e1.to_json(),
            "accepted_steps": trace.n_accepted}
    trace_path = a.trace if a.trace else Path(str(a.report) + ".trace.jsonl")
    save_pgm(a.out, f)
    atomic_write_bytes(a.report, _json_bytes(_report("denoise", body)))
    trace.write(trace_path)
    print(f"energy {e0.total:.6g} -> {e1.total:.6g} in {trace.n_accepted} accepted steps")
    return 0


def cmd_energy(a) -> int:
    w = _weights(a)
    cfg = _config(a)
    f = _load(a.inp, a.spacing)
    g = _load(a.ref, a.spacing) if a.ref else f
    if f.shape != g.shape:
        raise ValidationError(f"image sizes differ: {f.shape} vs {g.shape}")
    e = energy(f, g, w, cfg, evaluate_all=a.all)
    out = _json_bytes(_report("energy", {"input": str(a.inp), "reference": str(a.ref or a.inp),
                                         "config": cfg.to_json(), "field": _meta(f),
                                         "energy": e.to_json()}))
    if a.report:
        atomic_write_bytes(a.report, out)
    sys.stdout.write(out.decode())
    return 0


def _tuples_complex(arrs, resolution: int):
    pts = np.concatenate([np.concatenate([t[:, :2] - t[:, 2:] / 2, t[:, :2] + t[:, 2:] / 2])
                          for t in arrs if len(t)])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(np.max(hi - lo))
    pad = 0.25 * span + 1e-9
    return box_complex(lo - pad, hi + pad, (span + 2 * pad) / resolution)


def cmd_flatnorm(a) -> int:
    if not (np.isfinite(a.scale) and a.scale > 0):
        raise ValidationError("--scale must be positive")
    if a.resolution < 2:
        raise ValidationError("--resolution must be >= 2")
    try:
        t1 = read_tuples_csv(a.csv)
        t2 = read_tuples_csv(a.csv2) if a.csv2 else []
    except TupleCSVError as e:
        raise ValidationError(str(e)) from e
    arrs = [tuples_array(t1), tuples_array(t2)]
    if sum(len(x) for x in arrs) == 0:
        body = {"primal": 0.0, "dual": 0.0, "gap": 0.0, "mass_r": 0.0, "mass_t": 0.0}
    else:
        k = _tuples_complex(arrs, a.resolution)
        x = rasterize_to_chain(tuples_to_current(t1), k)
        if t2:
            x = x - rasterize_to_chain(tuples_to_current(t2), k)
        dec = flat_norm_primal(x, k, a.scale)
        dual = flat_norm_dual(x, k, a.scale)
        gap = (dec.value - dual) / dec.value if dec.value > 0 else 0.0
        body = {"primal": dec.value, "dual": dual, "gap": gap,
                "mass_r": dec.mass_r, "mass_t": dec.mass_t}
        if a.witness:
            write_tuples_csv(f"{a.witness}_r.csv", chain_to_tuples(dec.r_chain, 1e-12))
            write_tuples_csv(f"{a.witness}_dt.csv", chain_to_tuples(boundary(dec.t_chain), 1e-12))
    print(f"primal {body['primal']:.10g}")
    print(f"dual {body['dual']:.10g}")
    print(f"gap {body['gap']:.3%}")
    if a.report:
        body.update({"inputs": [str(a.csv)] + ([str(a.csv2)] if a.csv2 else []),
                     "scale": a.scale, "resolution": a.resolution})
        atomic_write_bytes(a.report, _json_bytes(_report("flatnorm", body)))
    return 0


def cmd_lines(a) -> int:
    if not a.gap_max > 0:
        raise ValidationError("--gap-max must be positive")
    try:
        pen = CompletionPenalty(a.boundary_cost, a.turn_cost)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    src = Path(a.inp)
    if src.suffix.lower() == ".csv":
        try:
            cur = tuples_to_current(read_tuples_csv(src))
        except TupleCSVError as e:
            raise ValidationError(str(e)) from e
        extent = None
    else:
        img = _load(src, a.spacing)
        cur = image_edges(img)
        extent = (0.0, max(img.width, img.height) * img.spacing)
    lifted = lift(cur, pen.turn_cost)
    if len(lifted):
        span = float(np.ptp(np.concatenate([lifted.starts, lifted.ends]), axis=0).max())
    else:
        span = 1.0
    pos_bin = a.position_bin if a.position_bin else 0.02 * max(span, 1e-12)
    res = complete_lines(lifted, pen, a.gap_max, a.direction_bins, pos_bin, return_result=True) \
        if len(lifted) else None
    n = res.n_lines if res else 0
    if a.histogram:
        hist = project_direction_mass(lifted, a.axis, pos_bin, a.direction_bins, extent)
        hist.write_csv(a.histogram)
    if a.lines_out:
        write_tuples_csv(a.lines_out, res.lifted.to_tuples() if res else [])
    print(f"{n} maximal lines")
    return 0


def cmd_synth(a) -> int:
    if a.kind not in KINDS:
        raise ValidationError(f"unknown kind {a.kind!r}; valid kinds: {', '.join(KINDS)}")
    try:
        spec = SceneSpec(kind=a.kind, n=a.n, theta=a.theta, resolution=a.res,
                         contrast=a.contrast, background=a.background, noise=a.noise,
                         seed=a.seed, swap=a.swap)
        scene = generate(spec, oracle=a.oracle)
    except ValueError as e:
        raise ValidationError(str(e)) from e
    prefix = a.out if a.out else a.kind
    save_pgm(f"{prefix}.pgm", scene.image)
    write_tuples_csv(f"{prefix}.csv", to_segment_tuples(scene.current))
    body = {"spec": {"kind": spec.kind, "n": spec.n, "theta": spec.theta,
                     "resolution": spec.resolution, "contrast": spec.contrast,
                     "background": spec.background, "noise": spec.noise, "seed": spec.seed},
            "values": scene.values.to_json()}
    atomic_write_bytes(f"{prefix}.json", _json_bytes(_report("synth", body)))
    print(f"wrote {prefix}.pgm, {prefix}.csv, {prefix}.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flatcurv", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("denoise", help="minimise the energy starting from the input image")
    _common(d)
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--report", required=True)
    d.add_argument("--trace", default=None, help="descent trace (JSON lines)")
    d.add_argument("--max-iters", type=int, default=20)
    d.add_argument("--step", type=float, default=0.2)
    d.add_argument("--region-size", type=int, default=9)
    d.add_argument("--discontinuities", action="store_true")
    d.add_argument("--verbose", action="store_true")
    d.set_defaults(func=cmd_denoise)

    e = sub.add_parser("energy", help="evaluate the seven energy terms")
    _common(e)
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("--ref", default=None, help="the data image g (default: the input)")
    e.add_argument("--report", default=None)
    e.add_argument("--all", action="store_true", help="also evaluate zero-weight terms")
    e.set_defaults(func=cmd_energy)

    f = sub.add_parser("flatnorm", help="flat norm of a segment-tuple current")
    f.add_argument("csv")
    f.add_argument("csv2", nargs="?", default=None, help="subtracted from the first")
    f.add_argument("--scale", type=float, default=1.0)
    f.add_argument("--resolution", type=int, default=64, help="complex cells across")
    f.add_argument("--witness", default=None, help="prefix for witness CSVs")
    f.add_argument("--report", default=None)
    f.add_argument("--threads", type=int, default=1)
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_flatnorm)

    ln = sub.add_parser("lines", help="detect and complete straight lines")
    ln.add_argument("inp", help="PGM image or segment-tuple CSV")
    ln.add_argument("--spacing", type=float, default=None)
    ln.add_argument("--gap-max", type=float, default=0.5)
    ln.add_argument("--boundary-cost", type=float, default=1.0)
    ln.add_argument("--turn-cost", type=float, default=1.0)
    ln.add_argument("--direction-bins", type=int, default=36)
    ln.add_argument("--position-bin", type=float, default=None)
    ln.add_argument("--axis", type=float, default=np.pi / 2, help="normal angle of L")
    ln.add_argument("--histogram", default=None)
    ln.add_argument("--lines-out", default=None)
    ln.add_argument("--threads", type=int, default=1)
    ln.add_argument("--seed", type=int, default=0)
    ln.set_defaults(func=cmd_lines)

    s = sub.add_parser("synth", help="generate a synthetic scene")
    s.add_argument("kind", help=f"one of: {', '.join(KINDS)}")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--theta", type=float, default=np.pi / 6)
    s.add_argument("--res", type=int, default=256)
    s.add_argument("--contrast", type=float, default=1.0)
    s.add_argument("--background", default="flat")
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--swap", action="store_true")
    s.add_argument("--oracle", action="store_true", help="also solve flat-norm LPs")
    s.add_argument("--out", default=None, help="output prefix (default: the kind)")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits with 2 on usage errors; those are validation errors here
        return 0 if e.code == 0 else 1
    if getattr(a, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 1
    try:
        return a.func(a)
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except PGMError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
