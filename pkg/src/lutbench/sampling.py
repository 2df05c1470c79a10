"""Experimental designs over the atmospheric input variables.

Random numbers come from numpy's Philox4x64-10 bit generator, a
counter-based generator, so a design is fully determined by its seed.
"""

import csv
import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class InvalidBounds(ValueError):
    pass


class TooManyDimensions(ValueError):
    pass


class SpecMismatch(ValueError):
    pass


MAX_VERTEX_DIMS = 20


@dataclass(frozen=True)
class VariableSpec:
    """One input variable with its physical bounds.

    ``min == max`` marks a frozen variable.
    """

    name: str
    units: str
    min: float
    max: float

    def __post_init__(self):
        if not (np.isfinite(self.min) and np.isfinite(self.max)):
            raise InvalidBounds(f"{self.name}: bounds must be finite")
        if self.min > self.max:
            raise InvalidBounds(
                f"{self.name}: min {self.min} > max {self.max}")

    @property
    def frozen(self) -> bool:
        return self.min == self.max

    @property
    def span(self) -> float:
        return self.max - self.min


# Atmospheric LUT variables and their sampling ranges.
DEFAULT_SPECS = (
    VariableSpec("O3C", "atm-cm", 0.2, 0.45),
    VariableSpec("CWV", "scale-factor", 1.0, 4.0),
    VariableSpec("AOT", "unitless", 0.05, 0.4),
    VariableSpec("G", "unitless", 0.65, 0.99),
    VariableSpec("ANGSTROM", "unitless", 1.0, 2.0),
    VariableSpec("SSA", "unitless", 0.75, 1.0),
)

VARIABLE_NAMES = tuple(s.name for s in DEFAULT_SPECS)


def make_rng(seed: int) -> np.random.Generator:
    """Seeded Philox generator used for every random draw in the package."""
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass
class Design:
    """An ``n x D`` sample matrix in physical units.

    Attributes
    ----------
    specs : tuple of VariableSpec
        Column metadata, in column order.
    points : ndarray, shape (n, D)
    seed : int or None
        Seed of the generating draw; ``None`` for deterministic designs.
    kind : {"lhs", "vertices", "merged"}
    """

    specs: tuple
    points: np.ndarray
    seed: Optional[int] = None
    kind: str = "lhs"

    def __post_init__(self):
        self.specs = tuple(self.specs)
        self.points = np.asarray(self.points, dtype=np.float64).reshape(
            -1, len(self.specs))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return len(self.specs)

    @property
    def names(self) -> tuple:
        return tuple(s.name for s in self.specs)

    @property
    def lower(self) -> np.ndarray:
        return np.array([s.min for s in self.specs])

    @property
    def upper(self) -> np.ndarray:
        return np.array([s.max for s in self.specs])

    def in_bounds(self) -> bool:
        p = self.points
        return bool(np.all((p >= self.lower) & (p <= self.upper)))

    def to_csv(self, path) -> None:
        """Header of variable names, then one row per sample (17 sig. digits)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.names)
            for row in self.points:
                writer.writerow([f"{v:.17g}" for v in row])


def latin_hypercube(n: int, specs: Sequence[VariableSpec], seed: int) -> Design:
    """Plain random Latin hypercube design.

    Each column is split into ``n`` equal strata of ``[min, max]``; every
    stratum receives exactly one sample, placed uniformly within it, and the
    stratum-to-row assignment is an independent permutation per column.

    Draw order per column: one permutation of ``n``, then ``n`` uniforms.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    specs = tuple(specs)
    for s in specs:
        if s.min > s.max:
            raise InvalidBounds(s.name)
    rng = make_rng(seed)
    points = np.empty((n, len(specs)))
    for j, s in enumerate(specs):
        strata = rng.permutation(n)
        u = rng.random(n)
        frac = (strata + u) / n
        col = s.min + frac * s.span
        # rounding can push the top stratum onto max + ulp
        points[:, j] = np.clip(col, s.min, s.max)
    return Design(specs, points, seed=int(seed), kind="lhs")


def vertices(specs: Sequence[VariableSpec]) -> Design:
    """All corners of the bounds box (``2**D_free`` points).

    Frozen variables stay at their single value. Rows are ordered
    lexicographically with ``min`` before ``max``, first column slowest.
    """
    specs = tuple(specs)
    if len(specs) > MAX_VERTEX_DIMS:
        raise TooManyDimensions(f"{len(specs)} > {MAX_VERTEX_DIMS}")
    levels = [(s.min,) if s.frozen else (s.min, s.max) for s in specs]
    points = np.array(list(itertools.product(*levels)), dtype=np.float64)
    return Design(specs, points.reshape(-1, len(specs)), seed=None,
                  kind="vertices")


def merge(a: Design, b: Design) -> Design:
    """Row-concatenate two designs, dropping exact duplicate rows.

    The first occurrence of each row is kept, ``a``'s rows first.
    """
    if a.specs != b.specs:
        raise SpecMismatch("designs have different variable specs")
    stacked = np.vstack([a.points, b.points])
    seen = set()
    keep = []
    for i, row in enumerate(stacked):
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return Design(a.specs, stacked[keep], seed=a.seed, kind="merged")
