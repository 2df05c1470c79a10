import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lutbench import sampling
from lutbench.sampling import (DEFAULT_SPECS, Design, InvalidBounds, SpecMismatch,
                               TooManyDimensions, VariableSpec, latin_hypercube,
                               merge, vertices)

UNIT = VariableSpec("u", "", 0.0, 1.0)


def strata_counts(design):
    counts = []
    for j, s in enumerate(design.specs):
        k = np.floor((design.points[:, j] - s.min) / s.span * design.n).astype(int)
        k = np.minimum(k, design.n - 1)
        counts.append(np.bincount(k, minlength=design.n))
    return np.array(counts)


def test_default_bounds():
    bounds = [(s.min, s.max) for s in DEFAULT_SPECS]
    assert bounds == [(0.2, 0.45), (1, 4), (0.05, 0.4), (0.65, 0.99), (1, 2),
                      (0.75, 1)]


def test_lhs_four_strata():
    for seed in range(5):
        d = latin_hypercube(4, [UNIT], seed)
        assert sorted(np.floor(d.points[:, 0] * 4).astype(int)) == [0, 1, 2, 3]


def test_lhs_frozen_variable():
    d = latin_hypercube(1, [VariableSpec("sza", "deg", 55.0, 55.0)], seed=3)
    np.testing.assert_array_equal(d.points, [[55.0]])


def test_lhs_default_occupancy():
    d = latin_hypercube(500, DEFAULT_SPECS, seed=11)
    assert d.points.shape == (500, 6)
    assert np.all(strata_counts(d) == 1)
    assert d.in_bounds()


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 300), seed=st.integers(0, 2**63 - 1))
def test_lhs_stratification_property(n, seed):
    d = latin_hypercube(n, DEFAULT_SPECS, seed)
    assert np.all(strata_counts(d) == 1)
    assert d.in_bounds()


def test_lhs_deterministic():
    a = latin_hypercube(50, DEFAULT_SPECS, 5)
    b = latin_hypercube(50, DEFAULT_SPECS, 5)
    c = latin_hypercube(50, DEFAULT_SPECS, 6)
    assert a.points.tobytes() == b.points.tobytes()
    assert not np.array_equal(a.points, c.points)


def test_invalid_bounds():
    with pytest.raises(InvalidBounds):
        VariableSpec("x", "", 1.0, 0.0)
    with pytest.raises(ValueError):
        latin_hypercube(0, [UNIT], 0)


def test_vertices():
    assert vertices(DEFAULT_SPECS).n == 64
    np.testing.assert_array_equal(vertices([UNIT]).points, [[0.0], [1.0]])
    two = vertices([UNIT, VariableSpec("v", "", 2.0, 3.0)])
    assert {tuple(r) for r in two.points} == {(0, 2), (0, 3), (1, 2), (1, 3)}
    corners = vertices(DEFAULT_SPECS).points
    lo = np.array([s.min for s in DEFAULT_SPECS])
    hi = np.array([s.max for s in DEFAULT_SPECS])
    assert np.all((corners == lo) | (corners == hi))


def test_vertices_frozen_and_limit():
    d = vertices([UNIT, VariableSpec("sza", "", 55.0, 55.0)])
    np.testing.assert_array_equal(d.points, [[0.0, 55.0], [1.0, 55.0]])
    with pytest.raises(TooManyDimensions):
        vertices([UNIT] * 21)


def test_merge_lhs_and_vertices():
    m = merge(latin_hypercube(500, DEFAULT_SPECS, 1), vertices(DEFAULT_SPECS))
    assert m.n == 564 and m.kind == "merged"


def test_merge_identities():
    a = latin_hypercube(30, DEFAULT_SPECS, 2)
    empty = Design(DEFAULT_SPECS, np.empty((0, 6)))
    np.testing.assert_array_equal(merge(a, empty).points, a.points)
    np.testing.assert_array_equal(merge(a, a).points, a.points)
    with pytest.raises(SpecMismatch):
        merge(a, vertices([UNIT]))


def test_merge_keeps_first_occurrence_order():
    a = Design([UNIT], [[0.5], [0.1]])
    b = Design([UNIT], [[0.1], [0.9], [0.5]])
    np.testing.assert_array_equal(merge(a, b).points[:, 0], [0.5, 0.1, 0.9])


def test_design_csv(tmp_path):
    d = latin_hypercube(3, DEFAULT_SPECS, 4)
    path = tmp_path / "d.csv"
    d.to_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == list(sampling.VARIABLE_NAMES)
    np.testing.assert_array_equal(np.array(rows[1:], dtype=float), d.points)
