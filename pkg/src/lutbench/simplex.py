"""Piecewise-linear interpolation of scattered nodes over a Delaunay complex.

The triangulation is the lower convex hull of the nodes lifted onto the
paraboloid ``(x, |x|^2)``; the hull itself is computed with Qhull
(Quickhull). Point location walks from the last simplex hit towards the
query, stepping across the facet with the most negative barycentric
weight, and falls back to an exhaustive scan when the walk stalls.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .numerics import Singular, solve_linear

BOUNDARY = -1
HOLE = -2
WEIGHT_TOL = 1e-10
DEGENERATE_DET = 1e-10
_SCAN_CHUNK = 65536


class DegenerateInput(ValueError):
    pass


class TooFewPoints(ValueError):
    pass


class OutsideHull(LookupError):
    """The query is not inside any simplex (extrapolation request)."""


@dataclass
class SimplicialComplex:
    """Delaunay triangulation in coordinates normalised to the unit box.

    Attributes
    ----------
    points : ndarray, shape (n, D)
        Node coordinates after ``(x - offset) / scale``.
    simplices : ndarray, shape (m, D + 1)
        Node indices of each simplex.
    neighbors : ndarray, shape (m, D + 1)
        ``neighbors[s, j]`` is the simplex across the facet opposite vertex
        ``j`` of simplex ``s``; ``-1`` on the hull boundary, ``-2`` where the
        Qhull neighbour was a discarded flat cell. Such holes are resolved
        geometrically on first use (see :func:`neighbor`).
    offset, scale : ndarray, shape (D,)
    """

    points: np.ndarray
    simplices: np.ndarray
    neighbors: np.ndarray
    offset: np.ndarray
    scale: np.ndarray
    n_dropped: int = 0
    _star_ptr: Optional[np.ndarray] = field(default=None, repr=False)
    _star_idx: Optional[np.ndarray] = field(default=None, repr=False)
    _holes: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self._star_ptr is None:
            flat = self.simplices.ravel()
            order = np.argsort(flat, kind="stable")
            counts = np.bincount(flat, minlength=self.n_nodes)
            self._star_ptr = np.concatenate([[0], np.cumsum(counts)])
            self._star_idx = order // (self.dim + 1)

    def star(self, nodes) -> np.ndarray:
        """Sorted ids of all simplices incident to any of ``nodes``."""
        parts = [self._star_idx[self._star_ptr[v]:self._star_ptr[v + 1]]
                 for v in nodes]
        return np.unique(np.concatenate(parts))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def n_nodes(self) -> int:
        return self.points.shape[0]

    def normalize(self, x):
        return (np.asarray(x, dtype=np.float64) - self.offset) / self.scale


@dataclass
class BarycentricResult:
    simplex: int
    weights: np.ndarray


@dataclass
class BatchResult:
    """Outputs of a batched query.

    ``values`` rows for failed queries are NaN; their indices are in
    ``failures``.
    """

    values: np.ndarray
    elapsed: float
    failures: list = field(default_factory=list)
    scans: int = 0


def _edge_dets(points, simplices):
    edges = points[simplices[:, 1:]] - points[simplices[:, :1]]
    return np.linalg.det(edges)


def build(points, qhull_options: str = "QJ Pp") -> SimplicialComplex:
    """Delaunay triangulation of ``points`` (n x D) via the lifted hull.

    Coordinates are rescaled per dimension to ``[0, 1]`` first. Simplices
    whose edge-matrix determinant is at most ``1e-10`` in those coordinates
    are discarded; they arise when cospherical nodes (box corners) form
    flat cells and carry no volume.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError("points must be an n x D array")
    n, dim = pts.shape
    if dim < 1:
        raise ValueError("need at least one dimension")
    if n < dim + 1:
        raise TooFewPoints(f"{n} points cannot span {dim} dimensions")
    if not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")
    offset = pts.min(axis=0)
    scale = pts.max(axis=0) - offset
    if np.any(scale == 0):
        raise DegenerateInput("points are flat along some axis")
    unit = (pts - offset) / scale
    if np.linalg.matrix_rank(unit - unit[0], tol=1e-12) < dim:
        raise DegenerateInput("points are affinely dependent")

    if dim == 1:
        order = np.argsort(unit[:, 0], kind="stable")
        simplices = np.column_stack([order[:-1], order[1:]])
        keep = np.diff(unit[order, 0]) > DEGENERATE_DET
        simplices = simplices[keep]
        m = len(simplices)
        neighbors = np.full((m, 2), BOUNDARY, dtype=np.int64)
        # vertex 0 is the left node, so the facet opposite it is the right end
        neighbors[:-1, 0] = np.arange(1, m)
        neighbors[1:, 1] = np.arange(0, m - 1)
        return SimplicialComplex(unit, simplices.astype(np.int64), neighbors,
                                 offset, scale)

    if n == dim + 1:
        # the lifted hull needs D + 2 points; one simplex is the whole answer
        return SimplicialComplex(unit, np.arange(n, dtype=np.int64)[None, :],
                                 np.full((1, n), BOUNDARY, dtype=np.int64),
                                 offset, scale)

    lifted = np.column_stack([unit, np.einsum("ij,ij->i", unit, unit)])
    try:
        hull = ConvexHull(lifted, qhull_options=qhull_options)
    except QhullError as exc:
        raise DegenerateInput(str(exc)) from None

    lower = hull.equations[:, dim] < 0
    cand = np.flatnonzero(lower)
    dets = _edge_dets(unit, hull.simplices[cand])
    keep_ids = cand[np.abs(dets) > DEGENERATE_DET]

    remap = np.full(len(hull.simplices), BOUNDARY, dtype=np.int64)
    remap[cand] = HOLE
    remap[keep_ids] = np.arange(len(keep_ids))
    simplices = hull.simplices[keep_ids].astype(np.int64)
    neighbors = remap[hull.neighbors[keep_ids]]
    return SimplicialComplex(unit, simplices, neighbors, offset, scale,
                             n_dropped=int(len(cand) - len(keep_ids)))


def barycentric(c: SimplicialComplex, s: int, qn) -> np.ndarray:
    """Barycentric weights of normalised point ``qn`` in simplex ``s``."""
    verts = c.points[c.simplices[s]]
    hit = np.flatnonzero(np.all(verts == qn, axis=1))
    if hit.size:
        # a query on a node reproduces it exactly, free of solve rounding
        w = np.zeros(c.dim + 1)
        w[hit[0]] = 1.0
        return w
    a = np.vstack([verts.T, np.ones(c.dim + 1)])
    b = np.append(qn, 1.0)
    return solve_linear(a, b)


def _batch_weights(c: SimplicialComplex, ids, qn):
    dim = c.dim
    simp = c.simplices[ids]
    last = c.points[simp[:, dim]]
    mat = np.transpose(c.points[simp[:, :dim]] - last[:, None, :], (0, 2, 1))
    lam = np.linalg.solve(mat, (qn - last)[:, :, None])[:, :, 0]
    return np.column_stack([lam, 1.0 - lam.sum(axis=1)])


def _first_containing(c: SimplicialComplex, ids, qn):
    w = _batch_weights(c, ids, qn)
    for h in np.flatnonzero(w.min(axis=1) >= -WEIGHT_TOL):
        s = int(ids[h])
        try:
            weights = barycentric(c, s, qn)
        except Singular:
            continue
        if weights.min() >= -WEIGHT_TOL:
            return BarycentricResult(s, weights)
    return None


def _scan(c: SimplicialComplex, qn):
    """Exhaustive search; first simplex containing ``qn`` in index order."""
    for lo in range(0, len(c.simplices), _SCAN_CHUNK):
        ids = np.arange(lo, min(lo + _SCAN_CHUNK, len(c.simplices)))
        res = _first_containing(c, ids, qn)
        if res is not None:
            return res
    raise OutsideHull(f"no simplex contains {qn}")


def neighbor(c: SimplicialComplex, s: int, j: int) -> int:
    """Simplex across the facet of ``s`` opposite its ``j``-th vertex.

    For facets that bordered a discarded flat cell, the neighbour is the
    simplex containing a probe point just outside the facet centroid,
    searched among simplices incident to the facet's nodes. The answer is
    cached on the complex.
    """
    nxt = int(c.neighbors[s, j])
    if nxt != HOLE:
        return nxt
    key = (s, j)
    if key in c._holes:
        return c._holes[key]
    verts = c.simplices[s]
    facet = np.delete(verts, j)
    centroid = c.points[facet].mean(axis=0)
    probe = centroid + 1e-7 * (centroid - c.points[verts[j]])
    found = _first_containing(c, c.star(facet), probe)
    if found is None:
        try:
            found = _scan(c, probe)
        except OutsideHull:
            found = None
    nxt = BOUNDARY if found is None or found.simplex == s else found.simplex
    c._holes[key] = nxt
    return nxt


def _walk(c: SimplicialComplex, qn, start: int):
    s = start
    visited = set()
    while True:
        visited.add(s)
        try:
            w = barycentric(c, s, qn)
        except Singular:
            return None
        j = int(np.argmin(w))
        if w[j] >= -WEIGHT_TOL:
            return BarycentricResult(s, w)
        nxt = neighbor(c, s, j)
        if nxt == BOUNDARY or nxt in visited:
            return None
        s = nxt


def locate(c: SimplicialComplex, q, start: Optional[int] = None,
           method: str = "walk", normalized: bool = False) -> BarycentricResult:
    """Find a simplex containing ``q`` and its barycentric weights.

    Parameters
    ----------
    q : array_like, shape (D,)
        Query in original coordinates (or normalised if ``normalized``).
    start : int, optional
        Simplex to start the walk from (warm start).
    method : {"walk", "scan"}

    Raises
    ------
    OutsideHull
    """
    qn = np.asarray(q, dtype=np.float64) if normalized else c.normalize(q)
    if qn.shape != (c.dim,):
        raise ValueError(f"query must have shape ({c.dim},)")
    if method == "walk":
        res = _walk(c, qn, 0 if start is None else int(start))
        if res is not None:
            return res
    elif method != "scan":
        raise ValueError(f"unknown method {method!r}")
    return _scan(c, qn)


def interpolate(c: SimplicialComplex, values, q, start: Optional[int] = None):
    """Barycentric blend of the node values of the simplex containing ``q``.

    ``values`` has one row per node; the same weights apply to every column.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != c.n_nodes:
        raise ValueError(f"{values.shape[0]} value rows for {c.n_nodes} nodes")
    res = locate(c, q, start=start)
    return res.weights @ values[c.simplices[res.simplex]]


def interpolate_batch(c: SimplicialComplex, values, queries) -> BatchResult:
    """Interpolate every row of ``queries``, warm-starting each walk.

    Queries outside the hull are recorded in ``failures`` (NaN output)
    instead of raising. ``elapsed`` is wall time for the whole batch.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape[0] != c.n_nodes:
        raise ValueError(f"{values.shape[0]} value rows for {c.n_nodes} nodes")
    queries = np.asarray(queries, dtype=np.float64).reshape(-1, c.dim)
    out = np.full((len(queries), values.shape[1]), np.nan)
    failures = []
    scans = 0
    cursor = 0
    t0 = time.perf_counter()
    qns = c.normalize(queries)
    for i, qn in enumerate(qns):
        res = _walk(c, qn, cursor)
        if res is None:
            scans += 1
            try:
                res = _scan(c, qn)
            except OutsideHull:
                failures.append(i)
                continue
        cursor = res.simplex
        out[i] = res.weights @ values[c.simplices[res.simplex]]
    elapsed = time.perf_counter() - t0 if len(queries) else 0.0
    return BatchResult(out, elapsed, failures, scans)
