"""Dense kernels for the acyclicity constraint.

The matrix exponential uses scaling and squaring around a diagonal Padé
approximant (orders 3, 5, 7, 9, 13), selecting the order and the number of
squarings from the 1-norm of the input as in Higham (2005). Inputs here are
small (p up to a few dozen) and dense, so no sparse path is provided.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError

# Largest 1-norm for which the order-m Padé approximant is accurate to
# double precision without scaling.
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}

_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
         16380.0, 182.0, 1.0),
}


def _as_square(M) -> np.ndarray:
    A = np.asarray(M, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise InvalidInputError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError("matrix has non-finite entries")
    return A


def _pade_low(A: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE_COEFFS[m]
    ident = np.eye(A.shape[0])
    A2 = A @ A
    powers = [ident, A2]
    for _ in range((m - 1) // 2 - 1):
        powers.append(powers[-1] @ A2)
    u = sum(b[2 * i + 1] * P for i, P in enumerate(powers))
    v = sum(b[2 * i] * P for i, P in enumerate(powers))
    return A @ u, v


def _pade13(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE_COEFFS[13]
    ident = np.eye(A.shape[0])
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    u = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    v = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    return u, v


def matrix_exp(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring.

    Raises:
        InvalidInputError: if ``M`` is not square or has non-finite entries.
    """
    A = _as_square(M)
    norm = np.linalg.norm(A, 1)
    squarings = 0
    for m in (3, 5, 7, 9):
        if norm <= _THETA[m]:
            u, v = _pade_low(A, m)
            break
    else:
        if norm > _THETA[13]:
            squarings = int(np.ceil(np.log2(norm / _THETA[13])))
            A = A / 2.0 ** squarings
        u, v = _pade13(A)
    E = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        E = E @ E
    return E


def acyclicity(W) -> tuple[float, np.ndarray]:
    """Return ``h(W) = tr(exp(W*W)) - p`` and its gradient ``exp(W*W)^T * 2W``.

    ``h`` is zero exactly when the support of ``W`` has no directed cycle.
    """
    W = _as_square(W)
    E = matrix_exp(W * W)
    value = float(np.trace(E)) - W.shape[0]
    return value, E.T * (2.0 * W)


def acyclicity_value(W) -> float:
    return acyclicity(W)[0]
