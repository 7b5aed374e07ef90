"""Dense complex matrix substrate used by every other module.

Matrices are plain ``numpy.ndarray`` objects; this module fixes the package's
conventions (column-stacking vectorization, partial transposition of the
second tensor factor) and wraps the eigensolvers and the matrix exponential
with the package's error types.

All functions are pure and never mutate their arguments.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from . import tolerances
from .errors import (
    DimensionMismatchError,
    NoConvergenceError,
    NotHermitianError,
)

__all__ = [
    "as_matrix",
    "dagger",
    "is_hermitian",
    "herm_eig",
    "min_herm_eig",
    "expm",
    "kron",
    "partial_transpose_second",
    "partial_trace_first",
    "vec",
    "unvec",
    "matrix_unit",
    "matrix_units",
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "PAULIS",
]


def as_matrix(m, square=False):
    """Return ``m`` as a 2-d complex array, validating its shape."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got shape {a.shape}")
    if square and a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {a.shape}")
    return a


def dagger(m):
    """Conjugate transpose."""
    return as_matrix(m).conj().T


def is_hermitian(m, tol=None) -> bool:
    """Whether ``m`` equals its conjugate transpose within ``tol``."""
    a = as_matrix(m, square=True)
    if tol is None:
        tol = tolerances.herm_tol(a)
    return float(np.abs(a - a.conj().T).max()) <= tol


def herm_eig(m, tol=None):
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    m : array_like
        Square matrix, Hermitian within ``tol``.
    tol : float, optional
        Allowed deviation from Hermiticity; defaults to a scale-aware value.

    Returns
    -------
    w : ndarray
        Real eigenvalues in ascending order.
    u : ndarray
        Unitary matrix whose columns are the matching eigenvectors.

    Raises
    ------
    NotHermitianError
        If ``m`` deviates from Hermiticity beyond ``tol``.
    NoConvergenceError
        If the underlying solver fails.
    """
    a = as_matrix(m, square=True)
    if tol is None:
        tol = tolerances.herm_tol(a)
    dev = float(np.abs(a - a.conj().T).max()) if a.size else 0.0
    if dev > tol:
        raise NotHermitianError(f"deviation from Hermiticity {dev:.3e} exceeds {tol:.3e}")
    try:
        w, u = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergenceError(f"eigh failed: {exc}") from exc
    return w, u


def min_herm_eig(m, tol=None) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    w, _ = herm_eig(m, tol=tol)
    return float(w[0])


def expm(m):
    """Matrix exponential.

    Diagonalizable input goes through its eigenbasis; when the eigenvector
    matrix is ill-conditioned the computation falls back to
    scaling-and-squaring.
    """
    a = as_matrix(m, square=True)
    try:
        w, v = np.linalg.eig(a)
        cond = np.linalg.cond(v)
    except np.linalg.LinAlgError:
        cond = np.inf
    if np.isfinite(cond) and cond < tolerances.EXPM_EIG_COND_LIMIT:
        try:
            return (v * np.exp(w)) @ np.linalg.inv(v)
        except np.linalg.LinAlgError:
            pass
    try:
        return scipy.linalg.expm(a)
    except Exception as exc:  # scipy raises assorted types here
        raise NoConvergenceError(f"expm failed: {exc}") from exc


def kron(a, b):
    """Kronecker product with shape validation."""
    return np.kron(as_matrix(a), as_matrix(b))


def partial_transpose_second(m, d1, d2):
    """Transpose the second tensor factor of a matrix on C^d1 (x) C^d2.

    Satisfies ``partial_transpose_second(kron(A, B), d1, d2) == kron(A, B.T)``
    and is an involution.
    """
    a = as_matrix(m, square=True)
    if a.shape[0] != d1 * d2:
        raise DimensionMismatchError(
            f"matrix of shape {a.shape} does not factor as {d1}*{d2}"
        )
    return (
        a.reshape(d1, d2, d1, d2)
        .transpose(0, 3, 2, 1)
        .reshape(d1 * d2, d1 * d2)
    )


def partial_trace_first(m, d1, d2):
    """Trace out the first tensor factor of a matrix on C^d1 (x) C^d2."""
    a = as_matrix(m, square=True)
    if a.shape[0] != d1 * d2:
        raise DimensionMismatchError(
            f"matrix of shape {a.shape} does not factor as {d1}*{d2}"
        )
    return a.reshape(d1, d2, d1, d2).trace(axis1=0, axis2=2)


def vec(m):
    """Column-stacking vectorization: vec(X)[i + d*j] = X[i, j]."""
    return as_matrix(m).ravel(order="F")


def unvec(v, d=None):
    """Inverse of :func:`vec` for a square matrix."""
    a = np.asarray(v, dtype=complex).ravel()
    if d is None:
        d = int(round(np.sqrt(a.size)))
    if d * d != a.size:
        raise DimensionMismatchError(f"vector of length {a.size} is not d*d")
    return a.reshape((d, d), order="F")


def matrix_unit(d, i, j):
    """The matrix unit E_ij of size d x d."""
    e = np.zeros((d, d), dtype=complex)
    e[i, j] = 1.0
    return e


def matrix_units(d):
    """Yield (i, j, E_ij) over the standard basis of d x d matrices."""
    for j in range(d):
        for i in range(d):
            yield i, j, matrix_unit(d, i, j)


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

#: (sigma_1, sigma_2, sigma_3, identity)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z, np.eye(2, dtype=complex))

for _p in PAULIS:
    _p.setflags(write=False)
del _p
