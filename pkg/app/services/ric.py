"""Exact restricted isometry constants and the sharp recovery bound."""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from ..config import settings
from ..errors import BoundViolatedError, InvalidInputError, TooManySubsetsError
from ..schemas import RicCertificate
from .densela import gram, symmetric_eigenvalues
from .sensing import SensingMatrix

LOGGER = logging.getLogger(__name__)


def _check_guard(n: int, order: int, limit: Optional[int]) -> int:
    if not 1 <= order <= n:
        raise InvalidInputError(f"El orden {order} debe estar entre 1 y n={n}.")
    limit = settings.guards.max_ric_subsets if limit is None else limit
    count = math.comb(n, order)
    if count > limit:
        raise TooManySubsetsError(count, limit)
    return count


def _max_deviation(g: np.ndarray, order: int, start: int, stop: int) -> float:
    """Largest ``max(l_max - 1, 1 - l_min)`` over subsets ``start..stop-1`` in lexicographic order."""

    worst = 0.0
    subsets = itertools.islice(itertools.combinations(range(g.shape[0]), order), start, stop)
    for subset in subsets:
        index = np.array(subset)
        eigenvalues = symmetric_eigenvalues(g[np.ix_(index, index)])
        worst = max(worst, float(eigenvalues[-1]) - 1.0, 1.0 - float(eigenvalues[0]))
    return worst


def _enumerate(sensing: SensingMatrix, order: int, limit: Optional[int], workers: Optional[int]) -> tuple[float, int]:
    count = _check_guard(sensing.n, order, limit)
    g = gram(sensing.mat)
    workers = settings.experiments.workers if workers is None else workers
    if workers <= 1 or count < 2 * workers:
        return _max_deviation(g, order, 0, count), count

    bounds = np.linspace(0, count, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_max_deviation, g, order, int(start), int(stop))
            for start, stop in zip(bounds[:-1], bounds[1:])
        ]
        return float(max(future.result() for future in futures)), count


def exact_ric(
    sensing: SensingMatrix,
    order: int,
    *,
    limit: Optional[int] = None,
    workers: Optional[int] = None,
) -> float:
    """Exact ``delta_order`` by enumerating every column subset of that size.

    ``delta`` is the largest deviation from 1 of the extreme eigenvalues of the
    Gram submatrices ``A_S' A_S``, ``|S| = order``.
    """

    delta, _ = _enumerate(sensing, order, limit, workers)
    return delta


def sharp_bound(K: int, N: int) -> float:
    """``1 / sqrt(K/N + 1)``."""

    if K < 1 or N < 1:
        raise InvalidInputError(f"K y N deben ser positivos (K={K}, N={N}).")
    return 1.0 / math.sqrt(K / N + 1.0)


def prior_sufficient_bound(K: int, N: int) -> float:
    """``sqrt(N) / (sqrt(K) + sqrt(N))``, the weaker sufficient condition the sharp bound replaces."""

    if K < 1 or N < 1:
        raise InvalidInputError(f"K y N deben ser positivos (K={K}, N={N}).")
    return math.sqrt(N) / (math.sqrt(K) + math.sqrt(N))


def _certificate(
    sensing: SensingMatrix,
    K: int,
    N: int,
    order: int,
    limit: Optional[int],
    workers: Optional[int],
) -> RicCertificate:
    bound = sharp_bound(K, N)
    if order > sensing.n:
        raise InvalidInputError(f"El orden {order} excede el número de columnas n={sensing.n}.")
    delta, count = _enumerate(sensing, order, limit, workers)
    passes = delta < bound - settings.numerics.certification_slack
    LOGGER.info(
        "delta_%d = %.12f frente a la cota %.12f: %s", order, delta, bound, "cumple" if passes else "no cumple"
    )
    return RicCertificate(
        order=order, delta=delta, bound=bound, passes=passes, subsets_examined=count, K=K, N=N
    )


def certify(
    sensing: SensingMatrix,
    K: int,
    N: int,
    *,
    limit: Optional[int] = None,
    workers: Optional[int] = None,
) -> RicCertificate:
    """Check the exact recovery condition ``delta_{NK+1} < 1/sqrt(K/N+1)``.

    A delta that matches the bound within ``certification_slack`` fails, because the
    equality case already admits a failing instance.
    """

    return _certificate(sensing, K, N, N * K + 1, limit, workers)


def first_iteration_certificate(
    sensing: SensingMatrix,
    K: int,
    N: int,
    *,
    limit: Optional[int] = None,
    workers: Optional[int] = None,
) -> RicCertificate:
    """Check ``delta_{K+N} < 1/sqrt(K/N+1)``, which guarantees a correct first selection."""

    return _certificate(sensing, K, N, K + N, limit, workers)


def min_magnitude_threshold(K: int, N: int, delta: float, epsilon: float) -> float:
    """Smallest nonzero magnitude that guarantees support recovery under l2 noise ``epsilon``."""

    bound = sharp_bound(K, N)
    if delta < 0 or epsilon < 0:
        raise InvalidInputError(f"delta y epsilon deben ser no negativos (delta={delta}, epsilon={epsilon}).")
    if delta >= bound:
        raise BoundViolatedError(f"delta={delta} no está por debajo de la cota {bound}; no existe umbral.")
    return (2.0 * math.sqrt(K) * epsilon * bound) / (bound - delta)


def ric_profile(
    sensing: SensingMatrix,
    orders: Sequence[int],
    *,
    limit: Optional[int] = None,
    workers: Optional[int] = None,
) -> List[float]:
    return [exact_ric(sensing, order, limit=limit, workers=workers) for order in orders]


def monotonicity_check(
    sensing: SensingMatrix,
    orders: Sequence[int],
    *,
    slack: float = 1e-12,
    limit: Optional[int] = None,
    workers: Optional[int] = None,
) -> bool:
    """Whether exact RICs are non-decreasing along ascending ``orders``."""

    if list(orders) != sorted(orders):
        raise InvalidInputError("Los órdenes deben estar en orden ascendente.")
    deltas = ric_profile(sensing, orders, limit=limit, workers=workers)
    return all(later >= earlier - slack for earlier, later in zip(deltas, deltas[1:]))
