"""Independent verification machinery: the quadratic-form identity and brute-force l0 recovery."""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Optional

import numpy as np

from ..config import settings
from ..errors import InvalidInputError, RankDeficientError, TooManySubsetsError
from .densela import as_vector, least_squares
from .sensing import SensingMatrix, normalize_columns

LOGGER = logging.getLogger(__name__)

_IDENTITY_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class Lemma2Instance:
    """One instance of the identity

    ``||A(x + sum t_i e_i)||^2 - ||A(t^2 x - sum t_i e_i)||^2
    = (1 - t^4)(<Ax, Ax> - C sum |<Ax, Ae_i>|)``

    with ``t = t_sign (sqrt(S+1) - 1) / sqrt(S)`` and ``t_i = -/+ (C/2)(1 - t^2)``.
    The signs of ``t_i`` follow ``<A sign_source, Ae_i>``; ``sign_source`` defaults to ``x``.
    """

    A: SensingMatrix
    x: np.ndarray
    W: tuple[int, ...]
    S: float
    C: float
    t_sign: int = 1
    sign_source: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", as_vector(self.x))
        object.__setattr__(self, "W", tuple(int(i) for i in self.W))
        if self.x.shape[0] != self.A.n:
            raise InvalidInputError(f"x tiene longitud {self.x.shape[0]} y A tiene {self.A.n} columnas.")
        if not self.W or any(not 0 <= i < self.A.n for i in self.W):
            raise InvalidInputError("W debe ser un conjunto no vacío de índices válidos.")
        if self.S <= 0 or self.C <= 0:
            raise InvalidInputError(f"S y C deben ser positivos (S={self.S}, C={self.C}).")
        if self.t_sign not in (1, -1):
            raise InvalidInputError(f"t_sign debe ser 1 o -1, se recibió {self.t_sign}.")
        if self.sign_source is not None:
            source = as_vector(self.sign_source)
            if source.shape[0] != self.A.n:
                raise InvalidInputError("sign_source debe tener la misma longitud que x.")
            object.__setattr__(self, "sign_source", source)
        if not self.t ** 2 < 1.0:
            raise InvalidInputError(f"t^2 = {self.t ** 2} no es menor que 1.")

    @property
    def t(self) -> float:
        return self.t_sign * (math.sqrt(self.S + 1.0) - 1.0) / math.sqrt(self.S)

    def inner_products(self, vector: np.ndarray) -> np.ndarray:
        """``<A vector, A e_i>`` for every ``i`` in ``W``."""

        ax = self.A.mat @ vector
        return self.A.mat[:, list(self.W)].T @ ax

    def t_coefficients(self) -> Dict[int, float]:
        source = self.x if self.sign_source is None else self.sign_source
        magnitude = 0.5 * self.C * (1.0 - self.t ** 2)
        return {
            i: (-magnitude if value >= 0 else magnitude)
            for i, value in zip(self.W, self.inner_products(source))
        }


def lemma2_sides(inst: Lemma2Instance) -> tuple[float, float]:
    """Evaluate both sides of the identity independently."""

    t2 = inst.t ** 2
    shift = np.zeros(inst.A.n)
    for i, value in inst.t_coefficients().items():
        shift[i] += value
    mat = inst.A.mat
    lhs = float(np.sum((mat @ (inst.x + shift)) ** 2) - np.sum((mat @ (t2 * inst.x - shift)) ** 2))
    ax = mat @ inst.x
    rhs = float((1.0 - t2 ** 2) * (ax @ ax - inst.C * np.sum(np.abs(inst.inner_products(inst.x)))))
    return lhs, rhs


def lemma2_gap(inst: Lemma2Instance) -> float:
    """``LHS - RHS``; the identity holds when ``|gap| <= 1e-9 (1 + |LHS| + |RHS|)``."""

    lhs, rhs = lemma2_sides(inst)
    return lhs - rhs


def lemma2_holds(inst: Lemma2Instance, tolerance: float = _IDENTITY_TOLERANCE) -> bool:
    lhs, rhs = lemma2_sides(inst)
    return abs(lhs - rhs) <= tolerance * (1.0 + abs(lhs) + abs(rhs))


def lemma2_scale_invariance(inst: Lemma2Instance, c: float) -> bool:
    """Whether the identity still holds after replacing ``x`` by ``c x``."""

    if c == 0:
        raise InvalidInputError("El factor de escala debe ser distinto de cero.")
    source = None if inst.sign_source is None else c * inst.sign_source
    return lemma2_holds(replace(inst, x=c * inst.x, sign_source=source))


def random_lemma2_instance(
    rng: np.random.Generator,
    *,
    max_n: int = 10,
    max_w: int = 4,
    degenerate: bool = False,
) -> Lemma2Instance:
    """Draw a random instance; ``degenerate`` forces ``<Ax, Ae_i> = 0`` on part of ``W``.

    Degenerate instances use an identity operator and a signal supported away from
    some of the indices in ``W``, so those inner products vanish exactly.
    """

    n = int(rng.integers(2, max_n + 1))
    w_size = int(rng.integers(1, min(max_w, n) + 1))
    W = tuple(sorted(int(i) for i in rng.choice(n, size=w_size, replace=False)))
    S = float(rng.uniform(1e-3, 10.0))
    C = float(rng.uniform(1e-3, 5.0))
    t_sign = int(rng.choice([-1, 1]))
    if degenerate:
        A = SensingMatrix.from_array(np.eye(n), normalized=True)
        x = rng.standard_normal(n)
        x[list(W[: max(1, w_size // 2 + 1)])] = 0.0
    else:
        m = int(rng.integers(1, n + 1))
        A = normalize_columns(rng.standard_normal((m, n)))
        x = rng.standard_normal(n)
    return Lemma2Instance(A=A, x=x, W=W, S=S, C=C, t_sign=t_sign)


def lemma2_sweep(count: int, seed: int) -> tuple[int, float]:
    """Check ``count`` random instances, a quarter of them degenerate.

    Returns the number of instances and the largest relative gap observed.
    """

    rng = np.random.default_rng(seed)
    worst = 0.0
    for index in range(count):
        inst = random_lemma2_instance(rng, degenerate=index % 4 == 0)
        lhs, rhs = lemma2_sides(inst)
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs) + abs(rhs)))
    LOGGER.info("Identidad verificada en %d instancias, brecha relativa máxima %.3e", count, worst)
    return count, worst


@dataclass
class BruteForceResult:
    support: tuple[int, ...]
    coefficients: np.ndarray
    residual_norm: float
    skipped: list[tuple[int, ...]] = field(default_factory=list)


def brute_force_recover(
    sensing: SensingMatrix,
    y,
    K: int,
    *,
    limit: Optional[int] = None,
) -> BruteForceResult:
    """Sparsest exact fit of ``y`` with at most ``K`` columns, by exhaustive search.

    Supports are visited by size, then lexicographically. The first support whose
    residual is at most ``1e-10 ||y||`` wins; otherwise the smallest residual wins, ties
    going to the earlier support. Rank deficient supports are skipped and reported.
    """

    y = as_vector(y)
    if K < 1 or K > sensing.n:
        raise InvalidInputError(f"K={K} debe estar entre 1 y n={sensing.n}.")
    limit = settings.guards.max_bruteforce_subsets if limit is None else limit
    requested = math.comb(sensing.n, K)
    if requested > limit:
        raise TooManySubsetsError(requested, limit)

    y_norm = float(np.linalg.norm(y))
    accept = 1e-10 * y_norm
    best = BruteForceResult(support=(), coefficients=np.zeros(0), residual_norm=y_norm)
    if y_norm <= accept:
        return best
    skipped: list[tuple[int, ...]] = []
    for size in range(1, K + 1):
        for support in itertools.combinations(range(sensing.n), size):
            columns = sensing.columns(support)
            try:
                coefficients = least_squares(columns, y)
            except RankDeficientError:
                LOGGER.debug("Soporte %s omitido por dependencia lineal", support)
                skipped.append(support)
                continue
            residual_norm = float(np.linalg.norm(y - columns @ coefficients))
            if residual_norm <= accept:
                return BruteForceResult(support, coefficients, residual_norm, skipped)
            if residual_norm < best.residual_norm:
                best = BruteForceResult(support, coefficients, residual_norm)
    best.skipped = skipped
    return best
