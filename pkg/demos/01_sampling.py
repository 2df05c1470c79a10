"""
Latin hypercube designs and box vertices
========================================

A training LUT is a Latin hypercube over the six atmospheric variables,
topped up with the 64 corners of the box so that every query in range
falls inside the convex hull of the nodes.
"""

import numpy as np

from lutbench.sampling import DEFAULT_SPECS, latin_hypercube, merge, vertices

for s in DEFAULT_SPECS:
    print(f"{s.name:9s} {s.min:5.2f} .. {s.max:5.2f} {s.units}")

# one sample per stratum and per variable
design = latin_hypercube(500, DEFAULT_SPECS, seed=2517)
strata = np.floor((design.points - design.lower) / (design.upper - design.lower) * 500)
print("\nevery stratum hit once:",
      all(len(np.unique(col)) == 500 for col in strata.T))

# the same seed gives the same design, bit for bit
again = latin_hypercube(500, DEFAULT_SPECS, seed=2517)
print("reproducible:", design.points.tobytes() == again.points.tobytes())

corners = vertices(DEFAULT_SPECS)
full = merge(design, corners)
print(f"\n{design.n} LHS rows + {corners.n} vertices -> {full.n} nodes")
