"""Curvature regularity and curvature fidelity on the synthetic scenes.

Run with ``python3 notebooks/02_curvature_scenes.py`` (about half a minute).

Three scenes with closed-form answers:

* a pack of n x n discs: total curvature grows like n^2 * 2 pi, while the
  flat norm of the curvature current grows only like n because each small
  disc is cheap to fill;
* a sawtooth edge with n teeth at angle theta: total turning n * theta grows
  without bound, but the flat norm of its curvature stays put because
  neighbouring corners of opposite sign cancel;
* a row of n semicircular bumps on a line: each bump carries turning pi
  regardless of size, yet its flat norm shrinks as the bumps get smaller.
"""

import numpy as np

from flatcurv import PolylineCurrent, SceneSpec, generate
from flatcurv.fidelity import FidelityConfig, f2_flat_fidelity
from flatcurv.levelsets import curvature_density
from flatcurv.regularity import r1_total_curvature

print("disc pack")
for n in (2, 4, 8):
    sc = generate(SceneSpec("disc_pack", n=n, resolution=256))
    r1 = r1_total_curvature(sc.image)
    f2 = f2_flat_fidelity(sc.clean, sc.image, FidelityConfig(complex_cell=4))
    print(f"  n={n}: R1={r1:8.3f} (n^2 2pi = {n * n * 2 * np.pi:8.3f})  F2 vs background={f2:.3f}")

print("sawtooth edge, theta = pi/6")
for n in (4, 8, 16):
    sc = generate(SceneSpec("sawtooth_edge", n=n, resolution=128), oracle=True)
    turn = curvature_density(sc.current).unsigned_total()
    print(f"  n={n:2d}: turning={turn:.4f}  flat norm={sc.values.oracle['lp_curvature_flat_norm']:.4f}")

print("semicircle bumps")
for n in (2, 4, 8, 16):
    sc = generate(SceneSpec("semicircle_bumps", n=n, resolution=max(256, 32 * n + 1)),
                  oracle=True)
    turn = curvature_density(PolylineCurrent([sc.current.polylines[0]])).unsigned_total()
    fn = sc.values.oracle["lp_arc_flat_norm_per_bump"]
    print(f"  n={n:2d}: turning per bump={turn:.4f}  flat norm per bump={fn:.4f}")
