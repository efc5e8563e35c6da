"""Lifting edges to (position, direction) and completing broken lines.

Run with ``python3 notebooks/04_line_completion.py`` (a second or two).

A crossing of two roads leaves eight edge segments: each road edge is cut
in two by the other road.  Lifted to position plus direction, the two halves
of an edge share a direction and sit on one line, so filling the gap costs
less than keeping two extra endpoints.  Perpendicular pieces live at
different directions and are never joined.
"""

import numpy as np

from flatcurv import SceneSpec, generate
from flatcurv.lines import (CompletionPenalty, complete_lines, image_edges, lift,
                            project_direction_mass)

sc = generate(SceneSpec("road_intersection", resolution=128))
for name, cur in (("analytic segments", sc.current), ("edges traced from the image",
                                                       image_edges(sc.image))):
    l = lift(cur)
    res = complete_lines(l, CompletionPenalty(), 0.5, return_result=True)
    print(f"{name}: {len(l)} pieces, {res.added} gaps filled, {res.n_lines} maximal lines")

# Projecting the lifted mass onto a line gives a position x direction
# histogram.  Each road edge shows up as one spike.
l = lift(sc.current)
for axis, label in ((0.0, "horizontal axis"), (np.pi / 2, "vertical axis")):
    h = project_direction_mass(l, axis, 0.02, extent=(-1, 1))
    print(f"{label}: spikes at positions",
          [round(float(h.position_centres()[i]), 3) for i, _, _ in h.spikes(0.5)])

# Swapping the order in which the roads are listed changes nothing.
swapped = generate(SceneSpec("road_intersection", resolution=128, swap=True)).current
print("swapped order:", complete_lines(lift(swapped), CompletionPenalty(), 0.5,
                                       return_result=True).n_lines, "maximal lines")
