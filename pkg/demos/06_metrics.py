"""
Scoring reconstructed spectra
=============================

RMSE and range-normalised RMSE per wavelength, plus percentiles of the
relative residuals, all gathered in one report.
"""

import numpy as np

from lutbench.metrics import compare

rng = np.random.default_rng(1)
ref = 1.0 + rng.random((500, 5))
good = ref * (1 + 0.001 * rng.standard_normal(ref.shape))
poor = ref * (1 + 0.02 * rng.standard_normal(ref.shape))

for name, pred in (("good", good), ("poor", poor)):
    rep = compare(ref, pred, wavelengths=[450.0, 550.0, 650.0, 850.0, 1650.0],
                  method=name)
    print(f"{name}: RMSE {rep.rmse_mean:.2e}  NRMSE {rep.nrmse_mean:.3f} %")
    for q, curve in rep.percentiles.items():
        print(f"   p{q:<5g} of |relative residual| at 550 nm: {curve[1]:.3f} %")

print("self-comparison NRMSE:", compare(ref, ref.copy()).nrmse_mean)
