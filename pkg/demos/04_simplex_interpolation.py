"""
Linear interpolation on a Delaunay triangulation
================================================

Every query is expressed as a convex combination of the corners of the
simplex that contains it; the same weights then blend the node spectra.
"""

import numpy as np

from lutbench.rtm import Geometry, SpectralGrid, generate_lut, toa_radiance
from lutbench.sampling import DEFAULT_SPECS, latin_hypercube, merge, vertices
from lutbench.simplex import build, interpolate_batch, locate

design = merge(latin_hypercube(150, DEFAULT_SPECS, seed=3), vertices(DEFAULT_SPECS))
lut = generate_lut(design)

c = build(lut.points)
print(f"{c.n_nodes} nodes -> {len(c.simplices)} simplices "
      f"({c.n_dropped} flat cells dropped)")

q = np.array([0.3, 2.0, 0.1, 0.8, 1.4, 0.9])
hit = locate(c, q)
print("containing simplex", hit.simplex, "weights", np.round(hit.weights, 3))

# a handful of random queries against the exact model
rng = np.random.default_rng(0)
queries = design.lower + rng.random((200, 6)) * (design.upper - design.lower)
res = interpolate_batch(c, lut.spectra, queries)
truth = np.array([toa_radiance(x, SpectralGrid.default(), Geometry()) for x in queries])
rel = np.abs(res.values - truth) / truth
print(f"200 queries in {res.elapsed:.2f} s, median relative error "
      f"{100 * np.median(rel):.2f} %")
