"""Construction, normalization and CSV storage of sensing matrices."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..errors import CsvParseError, DimensionMismatchError, InvalidInputError, ZeroColumnError
from .densela import as_matrix, as_vector, gram

LOGGER = logging.getLogger(__name__)

_UNIT_NORM_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class SensingMatrix:
    """The measurement operator ``A`` together with its column norms."""

    mat: np.ndarray
    column_norms: np.ndarray
    normalized: bool = False

    @classmethod
    def from_array(cls, values, *, normalized: bool = False) -> "SensingMatrix":
        mat = as_matrix(values).copy()
        mat.setflags(write=False)
        norms = np.linalg.norm(mat, axis=0)
        norms.setflags(write=False)
        return cls(mat=mat, column_norms=norms, normalized=normalized)

    @property
    def m(self) -> int:
        return self.mat.shape[0]

    @property
    def n(self) -> int:
        return self.mat.shape[1]

    def columns(self, indices: Iterable[int]) -> np.ndarray:
        """Return the submatrix ``A_Gamma`` with the columns listed in ``indices``."""

        return self.mat[:, list(indices)]

    def correlations(self, residual: np.ndarray) -> np.ndarray:
        """Return ``A' r``."""

        return self.mat.T @ residual


def normalize_columns(values) -> SensingMatrix:
    """Scale every column to unit l2 norm."""

    mat = as_matrix(values)
    norms = np.linalg.norm(mat, axis=0)
    for index, norm in enumerate(norms):
        if norm < 1e-12:
            raise ZeroColumnError(index)
    return SensingMatrix.from_array(mat / norms, normalized=True)


def gen_gaussian(m: int, n: int, seed: int) -> SensingMatrix:
    """Draw an i.i.d. standard normal ``m x n`` matrix and normalize its columns."""

    if m < 1 or n < 1:
        raise InvalidInputError(f"Dimensiones inválidas m={m}, n={n}.")
    rng = np.random.default_rng(seed)
    return normalize_columns(rng.standard_normal((m, n)))


def gen_counterexample(K: int, N: int) -> SensingMatrix:
    """Build the ``(NK+1) x (NK+1)`` matrix whose RIC sits exactly on the sharp bound.

    Only the upper-right corner carries the ``1/sqrt(K(K+N))`` block; that is the layout
    whose Gram has a diagonal top-left block. Columns are left unnormalized.
    """

    if K < 1 or N < 1:
        raise InvalidInputError(f"K y N deben ser positivos (K={K}, N={N}).")
    size = N * K + 1
    middle = size - N - K
    a = np.zeros((size, size))
    a[:K, :K] = math.sqrt(K / (K + N)) * np.eye(K)
    a[:K, size - N :] = 1.0 / math.sqrt(K * (K + N))
    a[K : K + middle, K : K + middle] = np.eye(middle)
    a[size - N :, size - N :] = np.eye(N)
    return SensingMatrix.from_array(a, normalized=False)


def counterexample_gram(K: int, N: int) -> np.ndarray:
    """Closed-form Gram of :func:`gen_counterexample`."""

    size = N * K + 1
    g = np.eye(size)
    g[:K, :K] = (K / (K + N)) * np.eye(K)
    g[:K, size - N :] = 1.0 / (K + N)
    g[size - N :, :K] = 1.0 / (K + N)
    g[size - N :, size - N :] = np.eye(N) + 1.0 / (K + N)
    return g


def counterexample_spectrum(K: int, N: int) -> np.ndarray:
    """Roots of ``(1-l)^(NK-K) (K/(K+N)-l)^(K-1) (l^2 - 2l + K/(K+N))``, ascending."""

    radius = 1.0 / math.sqrt(K / N + 1.0)
    values = [K / (K + N)] * (K - 1) + [1.0] * (N * K - K) + [1.0 - radius, 1.0 + radius]
    return np.sort(np.array(values))


def counterexample_signal(K: int, N: int) -> np.ndarray:
    """The K-sparse signal of ones on the first K coordinates."""

    x = np.zeros(N * K + 1)
    x[:K] = 1.0
    return x


def mutual_coherence(sensing: SensingMatrix) -> float:
    """Largest absolute inner product between two distinct columns."""

    if sensing.n < 2:
        return 0.0
    g = np.abs(gram(sensing.mat))
    np.fill_diagonal(g, 0.0)
    return float(np.max(g))


def _format_row(values: Sequence[float]) -> list[str]:
    # repr of a Python float is the shortest string that round-trips
    return [repr(float(value)) for value in values]


def save_csv(sensing: SensingMatrix, path: Path) -> None:
    """Write the matrix as comma separated rows, without header."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for row in sensing.mat:
            writer.writerow(_format_row(row))
    LOGGER.info("Matriz %dx%d guardada en %s", sensing.m, sensing.n, path)


def _read_grid(path: Path) -> list[list[float]]:
    rows: list[list[float]] = []
    with Path(path).open(newline="") as handle:
        for line_number, record in enumerate(csv.reader(handle), start=1):
            if not record:
                continue
            row = []
            for column_number, cell in enumerate(record, start=1):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise CsvParseError(
                        f"Valor no numérico {cell!r}", line=line_number, column=column_number
                    ) from None
            if rows and len(row) != len(rows[0]):
                raise DimensionMismatchError(
                    f"La línea {line_number} tiene {len(row)} columnas, se esperaban {len(rows[0])}."
                )
            rows.append(row)
    if not rows:
        raise CsvParseError("Archivo vacío", line=1)
    return rows


def load_csv(path: Path) -> SensingMatrix:
    """Read a matrix written by :func:`save_csv`."""

    mat = np.array(_read_grid(path))
    norms = np.linalg.norm(mat, axis=0)
    normalized = bool(np.all(np.abs(norms - 1.0) <= _UNIT_NORM_TOLERANCE))
    return SensingMatrix.from_array(mat, normalized=normalized)


def save_vector_csv(vector, path: Path) -> None:
    """Write a vector with one value per line."""

    vector = as_vector(vector)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        for value in vector:
            writer.writerow(_format_row([value]))


def load_vector_csv(path: Path) -> np.ndarray:
    grid = _read_grid(path)
    if len(grid[0]) != 1:
        raise DimensionMismatchError(f"Se esperaba un valor por línea, se encontraron {len(grid[0])}.")
    return as_vector([row[0] for row in grid])
