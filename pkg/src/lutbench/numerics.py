"""Dense linear-algebra kernels used by the PCA, GP and barycentric code.

The contracts (error types, tolerances, eigenvalue ordering) are defined
here; the heavy lifting is delegated to LAPACK through numpy/scipy.
All arrays are float64.
"""

import warnings

import numpy as np
import scipy.linalg


class LinAlgError(ArithmeticError):
    """Base class for numerical failures in this module."""


class NotPositiveDefinite(LinAlgError):
    """Raised when a Cholesky pivot is not strictly positive."""


class Singular(LinAlgError):
    """Raised when an LU pivot is negligible relative to the matrix scale."""


class NoConvergence(LinAlgError):
    """Raised when the symmetric eigensolver fails to converge."""


class DimensionMismatch(ValueError):
    """Raised when operand shapes are incompatible."""


SINGULAR_RTOL = 1e-13


def _square(a, name="A"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    return a


def cholesky(a):
    """Lower-triangular factor ``L`` with ``L @ L.T == a``.

    Raises
    ------
    NotPositiveDefinite
        If ``a`` is not numerically positive definite; callers are expected
        to add diagonal jitter and retry.
    """
    a = _square(a)
    if a.shape[0] == 0:
        return a.copy()
    try:
        low = scipy.linalg.cholesky(a, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if not np.all(np.diag(low) > 0):
        raise NotPositiveDefinite("non-positive pivot")
    return low


def solve_cholesky(low, b):
    """Solve ``(L L^T) x = b`` given the lower factor from :func:`cholesky`.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    low = _square(low, "L")
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != low.shape[0]:
        raise DimensionMismatch(
            f"rhs has {b.shape[0]} rows, factor has {low.shape[0]}")
    return scipy.linalg.cho_solve((low, True), b, check_finite=False)


def sym_eigen(a):
    """Eigen-decomposition of a symmetric matrix, eigenvalues descending.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
    eigenvectors : ndarray, shape (n, n)
        Orthonormal columns; column ``i`` pairs with ``eigenvalues[i]``.
    """
    a = _square(a)
    sym = 0.5 * (a + a.T)
    try:
        w, v = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from None
    order = np.argsort(w, kind="stable")[::-1]
    return w[order], v[:, order]


def solve_linear(a, b):
    """Solve ``a x = b`` by LU with partial pivoting.

    Raises
    ------
    Singular
        If some pivot magnitude is below ``1e-13 * max|a|``.
    """
    a = _square(a)
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != a.shape[0]:
        raise DimensionMismatch(
            f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    scale = np.abs(a).max() if a.size else 0.0
    if scale == 0.0:
        raise Singular("zero matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    if np.abs(np.diag(lu)).min() < SINGULAR_RTOL * scale:
        raise Singular("negligible pivot")
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
