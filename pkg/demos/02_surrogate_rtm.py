"""
The analytic TOA radiance model
===============================

The benchmark needs a ground truth that can be evaluated exactly at any
input. A closed-form atmosphere is coupled to a vegetation surface under
the Lambertian assumption; here we look at one spectrum and at how it
reacts to aerosol load.
"""

import numpy as np

from lutbench.rtm import (Geometry, SpectralGrid, atm_functions, surface_reflectance,
                          toa_radiance)

grid = SpectralGrid.default()
geom = Geometry(sza=55.0)
mid = np.array([0.325, 2.5, 0.225, 0.82, 1.5, 0.875])  # centre of the box

rho = surface_reflectance(grid)
L = toa_radiance(mid, grid, geom)
for wl in (450, 550, 680, 800, 940, 1380, 1650, 2200):
    k = int(np.searchsorted(grid.wavelengths, wl))
    print(f"{wl:5d} nm  rho={rho[k]:.3f}  L_toa={L[k]:.5f} W m-2 sr-1 nm-1")

# path radiance grows with aerosol, the direct beam shrinks
print("\nAOT   L0(550)   Tdir(550)")
g550 = SpectralGrid(np.array([550.0]))
for aot in (0.05, 0.2, 0.4):
    x = mid.copy()
    x[2] = aot
    atm = atm_functions(x, g550, geom)
    print(f"{aot:4.2f}  {atm.L0[0]:.5f}  {atm.Tdir[0]:.4f}")
