"""Generalized orthogonal matching pursuit with pluggable tie-breaking and diagnostics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..config import settings
from ..errors import DimensionMismatchError, EmptyCandidateSetError, InvalidInputError
from .densela import as_vector, least_squares
from .sensing import SensingMatrix

LOGGER = logging.getLogger(__name__)


class TieKind(str, Enum):
    LEXICOGRAPHIC = "lex"
    ADVERSARIAL = "adversarial"


class Termination(str, Enum):
    RESIDUAL_BELOW_EPSILON = "residual_below_epsilon"
    ITERATION_CAP = "iteration_cap"


@dataclass(frozen=True)
class TiePolicy:
    """How candidates tied at the selection boundary are resolved."""

    kind: TieKind = TieKind.LEXICOGRAPHIC
    avoid_set: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.kind is TieKind.ADVERSARIAL and not self.avoid_set:
            raise InvalidInputError("La política adversarial requiere un conjunto a evitar no vacío.")
        if any(index < 0 for index in self.avoid_set):
            raise InvalidInputError("Los índices a evitar deben ser no negativos.")

    @classmethod
    def lexicographic(cls) -> "TiePolicy":
        return cls()

    @classmethod
    def adversarial(cls, avoid: Iterable[int]) -> "TiePolicy":
        return cls(kind=TieKind.ADVERSARIAL, avoid_set=frozenset(int(i) for i in avoid))

    @classmethod
    def from_name(cls, name: str, avoid: Iterable[int] = ()) -> "TiePolicy":
        """Build a policy from its CLI name (``lex`` or ``adversarial``)."""

        try:
            kind = TieKind(name)
        except ValueError:
            raise InvalidInputError(f"Política de desempate desconocida: {name!r}.") from None
        if kind is TieKind.ADVERSARIAL:
            return cls.adversarial(avoid)
        return cls.lexicographic()

    def rank_key(self, index: int) -> tuple[int, int]:
        if self.kind is TieKind.ADVERSARIAL:
            return (1 if index in self.avoid_set else 0, index)
        return (0, index)


@dataclass
class IterationRecord:
    selected: tuple[int, ...]
    residual_norm_after: float
    correlations_snapshot: np.ndarray
    beta1: Optional[float] = None
    alphaN: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "selected": list(self.selected),
            "residual_norm_after": float(self.residual_norm_after),
            "correlations": [float(value) for value in self.correlations_snapshot],
            "beta1": self.beta1,
            "alphaN": self.alphaN,
        }


@dataclass
class RecoveryResult:
    estimated_support: tuple[int, ...]
    coefficients: np.ndarray
    iterations: List[IterationRecord] = field(default_factory=list)
    termination: Termination = Termination.ITERATION_CAP
    final_residual_norm: float = 0.0

    def signal(self, n: int) -> np.ndarray:
        """Dense estimate ``x_hat`` of length ``n``."""

        x = np.zeros(n)
        x[list(self.estimated_support)] = self.coefficients
        return x

    def recovers(self, true_support: Iterable[int]) -> bool:
        """Whether every index of ``true_support`` was selected."""

        return set(true_support) <= set(self.estimated_support)

    @property
    def first_selection(self) -> tuple[int, ...]:
        return self.iterations[0].selected if self.iterations else ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimated_support": list(self.estimated_support),
            "coefficients": [float(value) for value in self.coefficients],
            "termination": self.termination.value,
            "final_residual_norm": float(self.final_residual_norm),
            "iterations": [record.to_dict() for record in self.iterations],
        }


def identify(
    correlations,
    N: int,
    policy: Optional[TiePolicy] = None,
    *,
    tie_tolerance: Optional[float] = None,
) -> tuple[int, ...]:
    """Pick the ``N`` indices with the largest correlation magnitudes.

    Candidates within ``tie_tolerance`` of the N-th largest magnitude are ordered by
    ``policy``: smallest index first, or indices outside the avoid set first.
    """

    magnitudes = np.abs(as_vector(correlations))
    size = magnitudes.shape[0]
    if not 1 <= N <= size:
        raise InvalidInputError(f"N={N} debe estar entre 1 y {size}.")
    policy = policy or TiePolicy.lexicographic()
    if any(index >= size for index in policy.avoid_set):
        raise InvalidInputError("El conjunto a evitar contiene índices fuera de rango.")
    tolerance = settings.numerics.tie_tolerance if tie_tolerance is None else tie_tolerance

    order = np.lexsort((np.arange(size), -magnitudes))
    boundary = magnitudes[order[N - 1]]
    above = [int(i) for i in np.flatnonzero(magnitudes > boundary + tolerance)]
    tied = sorted(
        (int(i) for i in np.flatnonzero(np.abs(magnitudes - boundary) <= tolerance)),
        key=policy.rank_key,
    )
    return tuple(sorted(above + tied[: N - len(above)]))


def selection_margins(
    sensing: SensingMatrix,
    residual,
    true_support: Iterable[int],
    current_estimate: Iterable[int],
    N: int,
) -> tuple[float, float]:
    """Return ``(beta1, alphaN)`` for the residual ``r``.

    ``beta1`` is the largest ``|<A_i, r>|`` over the true indices not yet selected and
    ``alphaN`` the N-th largest over the indices outside both the true support and the
    current estimate.
    """

    residual = as_vector(residual)
    magnitudes = np.abs(sensing.correlations(residual))
    truth = set(true_support)
    estimate = set(current_estimate)
    missing = sorted(truth - estimate)
    outside = sorted(set(range(sensing.n)) - truth - estimate)
    if not missing:
        raise EmptyCandidateSetError("Todos los índices verdaderos ya fueron seleccionados.")
    if len(outside) < N:
        raise EmptyCandidateSetError(f"Hay {len(outside)} índices incorrectos disponibles, se requieren {N}.")
    beta1 = float(np.max(magnitudes[missing]))
    alphaN = float(np.sort(magnitudes[outside])[::-1][N - 1])
    return beta1, alphaN


def iteration_cap(K: int, m: int) -> int:
    """Most iterations the loop may run, ``ceil(min(K, m/K))``.

    Below ``K`` the loop can stop before every true index is selected, so a passing
    certificate implies exact recovery only when this equals ``K``.
    """

    return math.ceil(min(K, m / K))


def _check_inputs(sensing: SensingMatrix, y: np.ndarray, K: int, N: int, epsilon: float) -> None:
    if K < 1 or N < 1:
        raise InvalidInputError(f"K y N deben ser positivos (K={K}, N={N}).")
    if N > K or N * K > sensing.m:
        raise InvalidInputError(f"Se requiere N <= K y N <= m/K (K={K}, N={N}, m={sensing.m}).")
    if y.shape[0] != sensing.m:
        raise DimensionMismatchError(f"y tiene longitud {y.shape[0]} y A tiene {sensing.m} filas.")
    if epsilon < 0:
        raise InvalidInputError(f"epsilon debe ser no negativo (epsilon={epsilon}).")


def gomp_recover(
    sensing: SensingMatrix,
    y,
    K: int,
    N: int,
    epsilon: float = 0.0,
    policy: Optional[TiePolicy] = None,
    *,
    true_support: Optional[Sequence[int]] = None,
) -> RecoveryResult:
    """Run gOMP on ``y = A x (+ e)``.

    Each iteration selects the ``N`` largest correlations, merges them into the
    estimated support, re-estimates by least squares and updates the residual. The
    loop runs while ``||r|| > epsilon`` and ``k < min(K, m/K)``. Passing ``true_support``
    records ``beta1``/``alphaN`` on every iteration where they are defined.
    """

    y = as_vector(y)
    _check_inputs(sensing, y, K, N, epsilon)
    policy = policy or TiePolicy.lexicographic()

    y_norm = float(np.linalg.norm(y))
    threshold = epsilon if epsilon > 0 else settings.numerics.zero_residual_tolerance * y_norm
    cap = iteration_cap(K, sensing.m)

    support: List[int] = []
    coefficients = np.zeros(0)
    residual = y
    residual_norm = y_norm
    records: List[IterationRecord] = []
    k = 0
    while residual_norm > threshold and k < cap:
        k += 1
        correlations = sensing.correlations(residual)
        beta1 = alphaN = None
        if true_support is not None:
            try:
                beta1, alphaN = selection_margins(sensing, residual, true_support, support, N)
            except EmptyCandidateSetError:
                pass
        selected = identify(correlations, N, policy)
        support.extend(index for index in selected if index not in support)

        columns = sensing.columns(support)
        coefficients = least_squares(columns, y)
        residual = y - columns @ coefficients
        residual_norm = float(np.linalg.norm(residual))
        records.append(
            IterationRecord(
                selected=selected,
                residual_norm_after=residual_norm,
                correlations_snapshot=np.abs(correlations),
                beta1=beta1,
                alphaN=alphaN,
            )
        )
        LOGGER.debug("Iteración %d: T=%s, ||r||=%.3e", k, selected, residual_norm)

    termination = (
        Termination.RESIDUAL_BELOW_EPSILON if residual_norm <= threshold else Termination.ITERATION_CAP
    )
    estimated = tuple(sorted(support))
    if estimated:
        columns = sensing.columns(estimated)
        coefficients = least_squares(columns, y)
        residual_norm = float(np.linalg.norm(y - columns @ coefficients))
    return RecoveryResult(
        estimated_support=estimated,
        coefficients=coefficients,
        iterations=records,
        termination=termination,
        final_residual_norm=residual_norm,
    )


def omp_recover(
    sensing: SensingMatrix,
    y,
    K: int,
    epsilon: float = 0.0,
    policy: Optional[TiePolicy] = None,
) -> RecoveryResult:
    """Orthogonal matching pursuit: gOMP selecting one index per iteration."""

    return gomp_recover(sensing, y, K, 1, epsilon, policy)
