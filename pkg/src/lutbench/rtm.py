"""Analytic surrogate radiative transfer model.

Maps the six atmospheric variables (O3C, CWV, AOT, G, Angstrom exponent,
SSA) to top-of-atmosphere radiance over a Lambertian vegetation surface:

    L_toa = L0 + (Edir*mu_s + Edif) * (Tdif + Tdir) * rho / (pi * (1 - S*rho))

The atmospheric functions are closed-form single-scattering style
expressions. They are smooth in all six inputs but make no attempt at
physical fidelity; they only provide an exact ground truth for measuring
interpolation and emulation error.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sampling import DEFAULT_SPECS, Design
from .store import Lut


class NonFiniteInput(ValueError):
    pass


H_PLANCK = 6.62607015e-34
C_LIGHT = 2.99792458e8
K_BOLTZMANN = 1.380649e-23
T_SUN = 5800.0
E0_PEAK = 1.8  # W m-2 nm-1, maximum of E0 over the default grid

# (centre nm, width nm, strength) per unit CWV
WATER_BANDS = (
    (940.0, 25.0, 0.30),
    (1130.0, 30.0, 0.45),
    (1380.0, 40.0, 1.60),
    (1870.0, 45.0, 2.20),
)
S_CAP = 0.9


@dataclass(frozen=True)
class SpectralGrid:
    """Strictly increasing wavelength axis in nm, inside [400, 2400]."""

    wavelengths: np.ndarray

    def __post_init__(self):
        wl = np.asarray(self.wavelengths, dtype=np.float64).ravel()
        if wl.size == 0:
            raise ValueError("empty spectral grid")
        if np.any(np.diff(wl) <= 0):
            raise ValueError("wavelengths must be strictly increasing")
        if wl[0] < 400.0 or wl[-1] > 2400.0:
            raise ValueError("wavelengths must lie in [400, 2400] nm")
        object.__setattr__(self, "wavelengths", wl)

    @classmethod
    def default(cls):
        """400-2400 nm at 5 nm (401 bands)."""
        return cls(np.arange(400.0, 2400.0 + 0.5, 5.0))

    def __len__(self):
        return self.wavelengths.size

    def __eq__(self, other):
        return (isinstance(other, SpectralGrid)
                and np.array_equal(self.wavelengths, other.wavelengths))

    __hash__ = None


@dataclass(frozen=True)
class Geometry:
    """Sun/view geometry in degrees. Held fixed for a whole LUT."""

    sza: float = 55.0
    vza: float = 0.0
    raa: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.sza < 90.0:
            raise ValueError(f"sza out of range: {self.sza}")
        if not 0.0 <= self.vza < 90.0:
            raise ValueError(f"vza out of range: {self.vza}")

    @property
    def mu_s(self) -> float:
        return math.cos(math.radians(self.sza))

    @property
    def mu_v(self) -> float:
        return math.cos(math.radians(self.vza))

    @property
    def cos_scattering(self) -> float:
        ts, tv = math.radians(self.sza), math.radians(self.vza)
        return (-math.cos(ts) * math.cos(tv)
                + math.sin(ts) * math.sin(tv) * math.cos(math.radians(self.raa)))


@dataclass
class AtmFunctions:
    """Per-wavelength atmospheric terms of the Lambertian coupling."""

    L0: np.ndarray
    Edir: np.ndarray
    Edif: np.ndarray
    Tdir: np.ndarray
    Tdif: np.ndarray
    S: np.ndarray
    out_of_bounds: bool = False


def _planck_shape(wl_nm):
    wl_m = wl_nm * 1e-9
    x = H_PLANCK * C_LIGHT / (wl_m * K_BOLTZMANN * T_SUN)
    return 1.9 * (wl_nm / 500.0) ** -5 / np.expm1(x)


_E0_NORM = E0_PEAK / _planck_shape(SpectralGrid.default().wavelengths).max()


def solar_irradiance(grid: SpectralGrid) -> np.ndarray:
    """Extraterrestrial irradiance surrogate (5800 K blackbody shape)."""
    return _planck_shape(grid.wavelengths) * _E0_NORM


def rayleigh_depth(grid: SpectralGrid) -> np.ndarray:
    um = grid.wavelengths / 1000.0
    return 0.008569 * um ** -4 * (1.0 + 0.0113 * um ** -2 + 0.00013 * um ** -4)


def ozone_depth(o3c, grid: SpectralGrid) -> np.ndarray:
    return o3c * 3.0 * np.exp(-((grid.wavelengths - 600.0) / 70.0) ** 2)


def water_depth(cwv, grid: SpectralGrid) -> np.ndarray:
    wl = grid.wavelengths
    shape = np.zeros_like(wl)
    for centre, width, strength in WATER_BANDS:
        shape += strength * np.exp(-((wl - centre) / width) ** 2)
    return cwv * shape


def aerosol_depth(aot, angstrom, grid: SpectralGrid) -> np.ndarray:
    return aot * (grid.wavelengths / 550.0) ** (-angstrom)


def _logistic(t):
    return 1.0 / (1.0 + np.exp(-t))


def surface_reflectance(grid: SpectralGrid) -> np.ndarray:
    """Fixed green-vegetation reflectance: red edge, NIR plateau, water dips."""
    wl = grid.wavelengths
    rho = (0.05
           + 0.43 * _logistic((wl - 715.0) / 30.0)
           + 0.04 * np.exp(-((wl - 550.0) / 30.0) ** 2)
           - 0.03 * np.exp(-((wl - 670.0) / 25.0) ** 2)
           - 0.12 * np.exp(-((wl - 1450.0) / 60.0) ** 2)
           - 0.10 * np.exp(-((wl - 1940.0) / 70.0) ** 2))
    return np.clip(rho, 0.01, 0.55)


def _check_input(x):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.size != len(DEFAULT_SPECS):
        raise ValueError(f"expected {len(DEFAULT_SPECS)} variables, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput(f"non-finite input {x}")
    lo = np.array([s.min for s in DEFAULT_SPECS])
    hi = np.array([s.max for s in DEFAULT_SPECS])
    return x, bool(np.any((x < lo) | (x > hi)))


def atm_functions(x, grid: SpectralGrid, geom: Geometry) -> AtmFunctions:
    """Evaluate the surrogate atmosphere for one input vector.

    ``x`` is ordered (O3C, CWV, AOT, G, Angstrom, SSA). Values outside the
    sampling bounds are accepted and reported through ``out_of_bounds``.
    """
    x, oob = _check_input(x)
    o3c, cwv, aot, g, angstrom, ssa = x
    mu_s, mu_v = geom.mu_s, geom.mu_v
    cos_t = geom.cos_scattering

    e0 = solar_irradiance(grid)
    tau_r = rayleigh_depth(grid)
    tau_a = aerosol_depth(aot, angstrom, grid)
    tau = tau_r + tau_a + ozone_depth(o3c, grid) + water_depth(cwv, grid)
    tau_abs = ozone_depth(o3c, grid) + water_depth(cwv, grid) + (1.0 - ssa) * tau_a
    tau_sc = tau_r + ssa * tau_a

    t_dir = np.exp(-tau / mu_v)
    e_dir = e0 * np.exp(-tau / mu_s)
    t_dif = np.exp(-tau / mu_v) * (np.exp(0.5 * tau_sc / mu_v) - 1.0)
    e_dif = e0 * mu_s * np.exp(-tau_abs / mu_s) * (1.0 - np.exp(-tau_sc / mu_s)) * 0.5

    p_ray = 0.75 * (1.0 + cos_t ** 2)
    p_hg = (1.0 - g ** 2) / (1.0 + g ** 2 - 2.0 * g * cos_t) ** 1.5
    l0 = (e0 * mu_s / (4.0 * np.pi * (mu_s + mu_v))
          * (tau_r * p_ray + ssa * tau_a * p_hg)
          * np.exp(-tau_abs * (1.0 / mu_s + 1.0 / mu_v)))
    s = np.minimum(1.0 - np.exp(-0.5 * tau_sc), S_CAP)
    return AtmFunctions(L0=l0, Edir=e_dir, Edif=e_dif, Tdir=t_dir, Tdif=t_dif,
                        S=s, out_of_bounds=oob)


def couple(atm: AtmFunctions, rho, mu_s: float) -> np.ndarray:
    """Lambertian TOA coupling of atmospheric terms and surface reflectance."""
    return atm.L0 + ((atm.Edir * mu_s + atm.Edif) * (atm.Tdif + atm.Tdir) * rho
                     / (np.pi * (1.0 - atm.S * rho)))


def toa_radiance(x, grid: SpectralGrid, geom: Geometry) -> np.ndarray:
    """TOA radiance spectrum (W m-2 sr-1 nm-1) for one input vector."""
    atm = atm_functions(x, grid, geom)
    return couple(atm, surface_reflectance(grid), geom.mu_s)


def generate_lut(design: Design, grid: Optional[SpectralGrid] = None,
                 geom: Optional[Geometry] = None, provenance: str = "",
                 created: Optional[str] = None) -> Lut:
    """Run the surrogate over every design row.

    Row ``i`` of the result is exactly ``toa_radiance(design.points[i])``.
    """
    grid = grid or SpectralGrid.default()
    geom = geom or Geometry()
    if design.n == 0:
        raise ValueError("cannot build a LUT from an empty design")
    spectra = np.empty((design.n, len(grid)))
    for i, x in enumerate(design.points):
        spectra[i] = toa_radiance(x, grid, geom)
    return Lut(design=design, grid=grid, geometry=geom, spectra=spectra,
               provenance=provenance or "surrogate-rtm", created=created)
