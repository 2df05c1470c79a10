"""LUT interpolation vs. Gaussian-process emulation of TOA radiance spectra.

Modules
-------
numerics
    Cholesky, LU and symmetric eigen kernels with explicit error types.
sampling
    Latin hypercube designs, bound-box vertices, design merging.
rtm
    Analytic surrogate atmosphere and Lambertian TOA radiance.
store
    Binary LUT/model container and CSV export.
simplex
    Delaunay triangulation, walking point location, barycentric interpolation.
emulator
    PCA compression plus one ARD squared-exponential GP per component.
metrics
    RMSE, NRMSE, relative-residual percentiles, evaluation reports.
experiment
    The benchmark driver behind the ``lutbench`` command.
"""

__version__ = "0.1.0"
