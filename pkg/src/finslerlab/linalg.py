"""Dense linear algebra over scalars that may be floats or jets.

The matrices here are tiny (n <= 4), so plain Gaussian elimination with
partial pivoting on the value parts is adequate.  Object-dtype numpy arrays
hold the entries.
"""

from __future__ import annotations

import numpy as np

from .errors import NotPositiveDefinite
from .jets import Jet


def _mag(a) -> float:
    return abs(a.value) if isinstance(a, Jet) else abs(float(a))


def solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve A X = B by Gaussian elimination; entries may be jets or floats."""
    n = A.shape[0]
    A = np.array(A, dtype=object)
    B = np.array(B, dtype=object)
    if B.ndim == 1:
        B = B.reshape(n, 1)
        squeeze = True
    else:
        squeeze = False
    for col in range(n):
        piv = max(range(col, n), key=lambda r: _mag(A[r, col]))
        if _mag(A[piv, col]) == 0.0:
            raise ZeroDivisionError("singular matrix in solve()")
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            B[[col, piv]] = B[[piv, col]]
        inv_p = 1.0 / A[col, col] if not isinstance(A[col, col], Jet) else A[col, col].reciprocal()
        for r in range(col + 1, n):
            factor = A[r, col] * inv_p
            for c in range(col + 1, n):
                A[r, c] = A[r, c] - factor * A[col, c]
            for c in range(B.shape[1]):
                B[r, c] = B[r, c] - factor * B[col, c]
            A[r, col] = 0.0
    X = np.empty_like(B)
    for c in range(B.shape[1]):
        for r in range(n - 1, -1, -1):
            acc = B[r, c]
            for k in range(r + 1, n):
                acc = acc - A[r, k] * X[k, c]
            X[r, c] = acc / A[r, r]
    return X[:, 0] if squeeze else X


def inverse(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    eye = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            eye[i, j] = 1.0 if i == j else 0.0
    return solve(A, eye)


def matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    out = np.empty((A.shape[0], B.shape[1]), dtype=object)
    for i in range(A.shape[0]):
        for j in range(B.shape[1]):
            acc = A[i, 0] * B[0, j]
            for k in range(1, A.shape[1]):
                acc = acc + A[i, k] * B[k, j]
            out[i, j] = acc
    return out


def values(A: np.ndarray) -> np.ndarray:
    """Value parts of an object array of jets/floats as a float array."""
    flat = [a.value if isinstance(a, Jet) else float(a) for a in np.ravel(A)]
    return np.array(flat, dtype=float).reshape(np.shape(A))


def cholesky_or_raise(g: np.ndarray, context: str = "") -> np.ndarray:
    """Cholesky factor of a float symmetric matrix; raises NotPositiveDefinite on failure."""
    try:
        return np.linalg.cholesky(np.asarray(g, dtype=float))
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(
            f"fundamental tensor is not positive definite{': ' + context if context else ''}"
        ) from None
