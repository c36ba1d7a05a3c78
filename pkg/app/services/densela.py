"""Dense linear-algebra kernel: Householder least squares, Gram matrices, Jacobi eigenvalues."""
from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np

from ..config import settings
from ..errors import (
    DimensionMismatchError,
    InvalidInputError,
    NoConvergenceError,
    NotSymmetricError,
    RankDeficientError,
)

LOGGER = logging.getLogger(__name__)


def as_matrix(values) -> np.ndarray:
    """Return ``values`` as a finite float64 matrix with at least one row and column."""

    matrix = np.asarray(values, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise DimensionMismatchError(f"Se esperaba una matriz no vacía, se recibió forma {matrix.shape}.")
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputError("La matriz contiene valores no finitos.")
    return matrix


def as_vector(values) -> np.ndarray:
    """Return ``values`` as a finite float64 vector."""

    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim != 1:
        raise DimensionMismatchError(f"Se esperaba un vector, se recibió forma {vector.shape}.")
    if not np.all(np.isfinite(vector)):
        raise InvalidInputError("El vector contiene valores no finitos.")
    return vector


def gram(matrix) -> np.ndarray:
    """Return ``M'M`` with the lower triangle mirrored from the upper one."""

    matrix = as_matrix(matrix)
    upper = np.triu(matrix.T @ matrix)
    return upper + np.triu(upper, 1).T


def _householder_qr(matrix: np.ndarray, rank_tolerance: float) -> tuple[list[np.ndarray], np.ndarray]:
    cols = matrix.shape[1]
    r = matrix.copy()
    reflectors: list[np.ndarray] = []
    scale = float(np.max(np.linalg.norm(matrix, axis=0)))
    for j in range(cols):
        x = r[j:, j]
        norm_x = float(np.linalg.norm(x))
        # alpha takes the sign opposite to x[0] to avoid cancellation in v[0]
        alpha = -math.copysign(norm_x, x[0])
        v = x.copy()
        v[0] -= alpha
        norm_v = float(np.linalg.norm(v))
        if norm_v > 0.0:
            v /= norm_v
            r[j:, j:] -= 2.0 * np.outer(v, v @ r[j:, j:])
        reflectors.append(v)
        if abs(r[j, j]) < rank_tolerance * scale or scale == 0.0:
            raise RankDeficientError(
                f"Subconjunto de columnas numéricamente dependiente (|R[{j},{j}]| = {abs(r[j, j]):.3e})."
            )
    return reflectors, np.triu(r[:cols, :])


def _back_substitution(upper: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    n = upper.shape[0]
    x = np.zeros(n)
    for i in range(n - 1, -1, -1):
        x[i] = (rhs[i] - upper[i, i + 1 :] @ x[i + 1 :]) / upper[i, i]
    return x


def least_squares(matrix, y, *, rank_tolerance: Optional[float] = None) -> np.ndarray:
    """Solve ``min_u ||y - M u||_2`` through a Householder QR factorization.

    Raises :class:`RankDeficientError` when ``M`` has more columns than rows or when a
    diagonal entry of ``R`` is negligible relative to the largest column norm.
    """

    matrix = as_matrix(matrix)
    y = as_vector(y)
    rows, cols = matrix.shape
    if y.shape[0] != rows:
        raise DimensionMismatchError(f"El vector tiene longitud {y.shape[0]} y la matriz {rows} filas.")
    if cols > rows:
        raise RankDeficientError(f"{cols} columnas no pueden ser independientes en dimensión {rows}.")
    tolerance = settings.numerics.rank_tolerance if rank_tolerance is None else rank_tolerance

    reflectors, upper = _householder_qr(matrix, tolerance)
    qty = y.copy()
    for j, v in enumerate(reflectors):
        qty[j:] -= 2.0 * v * (v @ qty[j:])
    return _back_substitution(upper, qty[:cols])


def residual_after_projection(matrix, v, *, rank_tolerance: Optional[float] = None) -> np.ndarray:
    """Return ``P^perp v``, the component of ``v`` orthogonal to the column span of ``M``."""

    matrix = as_matrix(matrix)
    v = as_vector(v)
    return v - matrix @ least_squares(matrix, v, rank_tolerance=rank_tolerance)


def _off_diagonal_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def _rotate(a: np.ndarray, p: int, q: int) -> None:
    apq = a[p, q]
    if apq == 0.0:
        return
    tau = (a[q, q] - a[p, p]) / (2.0 * apq)
    if abs(tau) > 1e150:
        t = 1.0 / (2.0 * tau)
    else:
        t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    c = 1.0 / math.sqrt(1.0 + t * t)
    s = t * c

    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    a[p, q] = a[q, p] = 0.0


def symmetric_eigenvalues(
    matrix,
    *,
    tolerance: Optional[float] = None,
    max_sweeps: Optional[int] = None,
) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted ascending."""

    a = as_matrix(matrix).copy()
    size = a.shape[0]
    if a.shape[1] != size:
        raise DimensionMismatchError(f"La matriz debe ser cuadrada, se recibió forma {a.shape}.")
    largest = float(np.max(np.abs(a)))
    if float(np.max(np.abs(a - a.T))) > 1e-12 * largest:
        raise NotSymmetricError("La matriz no es simétrica.")

    tolerance = settings.numerics.jacobi_tolerance if tolerance is None else tolerance
    max_sweeps = settings.numerics.jacobi_max_sweeps if max_sweeps is None else max_sweeps

    target = tolerance * math.sqrt(float(np.sum(a * a)))
    sweeps = 0
    while _off_diagonal_norm(a) > target:
        if sweeps == max_sweeps:
            raise NoConvergenceError(f"Jacobi no convergió tras {max_sweeps} barridos.")
        for p in range(size - 1):
            for q in range(p + 1, size):
                _rotate(a, p, q)
        sweeps += 1
    return np.sort(np.diag(a))
