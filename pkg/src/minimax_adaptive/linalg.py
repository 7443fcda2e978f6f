"""Small dense linear algebra helpers and the quadratic-form notation.

All matrices are plain ``numpy`` arrays.  Constructors return read-only
copies so values can be shared freely between threads.
"""

import math

import numpy as np

from .errors import InvalidArgumentError, NumericalError, SingularMatrixError

# relative eigenvalue threshold below which a symmetric matrix is treated as singular
SINGULAR_RTOL = 1e-12


def _frozen(a):
    a.flags.writeable = False
    return a


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite, read-only 2-D float array.

    Scalars become 1x1 matrices and 1-D input becomes a column.
    """
    arr = np.array(a, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise InvalidArgumentError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return _frozen(arr)


def as_symmetric(a, name="matrix"):
    """Return the symmetric part ``(a + a.T) / 2`` as a read-only array."""
    arr = np.array(as_matrix(a, name))
    if arr.shape[0] != arr.shape[1]:
        raise InvalidArgumentError(f"{name} must be square, got shape {arr.shape}")
    return _frozen(0.5 * (arr + arr.T))


def as_vector(x, name="x"):
    arr = np.array(x, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} has non-finite entries")
    return arr


def identity(n):
    return _frozen(np.eye(n))


def quad_form(x, A):
    """``x^T A x``."""
    x = as_vector(x)
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape != (x.size, x.size):
        raise InvalidArgumentError(
            f"quad_form: vector of length {x.size} against matrix {A.shape}")
    return float(x @ A @ x)


def weighted_norm_sq(B, A):
    """``trace(B^T A B)``, written ``||B||^2_A``."""
    B = as_matrix(B, "B")
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape != (B.shape[0], B.shape[0]):
        raise InvalidArgumentError(
            f"weighted_norm_sq: B has {B.shape[0]} rows but A is {A.shape}")
    return float(np.trace(B.T @ A @ B))


def trace_inner(A, B):
    """``<A, B> = trace(A^T B)``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise InvalidArgumentError(f"trace_inner: shapes {A.shape} and {B.shape} differ")
    return float(np.sum(A * B))


def sat(y):
    """Clip ``y`` to ``[-1, 1]``."""
    y = float(y)
    if not math.isfinite(y):
        raise InvalidArgumentError(f"sat: non-finite argument {y}")
    if y > 1.0:
        return 1.0
    if y < -1.0:
        return -1.0
    return y


def psd_margin(A):
    """Smallest eigenvalue of the symmetric matrix ``A``.

    The sign, not a boolean, is returned so callers can judge marginal cases
    against their own tolerance (see :func:`default_psd_tol`).
    """
    A = np.asarray(A, dtype=float)
    try:
        return float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue solver failed: {exc}") from exc


def default_psd_tol(A):
    A = np.asarray(A, dtype=float)
    scale = float(np.max(np.abs(A))) if A.size else 0.0
    return 1e-9 * A.shape[0] * max(scale, 1.0)


def sym_inverse(A):
    """Inverse of a symmetric matrix, symmetrised.

    Raises :class:`SingularMatrixError` when the smallest eigenvalue magnitude
    is below ``SINGULAR_RTOL`` times the largest.
    """
    A = as_symmetric(A)
    eigs = np.abs(np.linalg.eigvalsh(A))
    smallest = float(eigs.min())
    if smallest <= SINGULAR_RTOL * max(float(eigs.max()), 1e-300):
        raise SingularMatrixError(
            f"matrix is numerically singular (smallest |eigenvalue| = {smallest:.3e})",
            smallest_abs_eig=smallest)
    inv = np.linalg.solve(A, np.eye(A.shape[0]))
    return _frozen(0.5 * (inv + inv.T))


def sym_sqrt(A, inverse=False):
    """Symmetric square root (or inverse square root) of a positive definite matrix."""
    A = as_symmetric(A)
    w, V = np.linalg.eigh(A)
    if w[0] <= 0.0:
        raise InvalidArgumentError(
            f"square root requires a positive definite matrix (min eigenvalue {w[0]:.3e})")
    d = w ** (-0.5 if inverse else 0.5)
    root = (V * d) @ V.T
    return _frozen(0.5 * (root + root.T))
