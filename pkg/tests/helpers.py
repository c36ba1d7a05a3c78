"""Shared constructors and independent oracles for the test suite."""
import itertools

import numpy as np

from app.services.sensing import SensingMatrix, gen_gaussian, normalize_columns


def identity(n: int) -> SensingMatrix:
    return SensingMatrix.from_array(np.eye(n), normalized=True)


def closed_form_ric(A: SensingMatrix, order: int) -> float:
    """Exact RIC for orders 1 and 2 from closed-form eigenvalues of the Gram blocks."""

    g = A.mat.T @ A.mat
    worst = 0.0
    for subset in itertools.combinations(range(A.n), order):
        if order == 1:
            (i,) = subset
            low = high = g[i, i]
        else:
            i, j = subset
            mean = 0.5 * (g[i, i] + g[j, j])
            spread = np.sqrt(0.25 * (g[i, i] - g[j, j]) ** 2 + g[i, j] ** 2)
            low, high = mean - spread, mean + spread
        worst = max(worst, high - 1.0, 1.0 - low)
    return worst


def certified_pool():
    """Identities, identities with perturbed duplicated columns, and 10x12 Gaussians."""

    pool = [identity(n) for n in (6, 8, 10, 12)]
    noise = np.random.default_rng(7)
    for m, extra, scale in ((8, 2, 1.5), (10, 2, 2.0), (9, 3, 3.0)):
        duplicated = np.eye(m)[:, :extra] + scale * noise.standard_normal((m, extra))
        pool.append(normalize_columns(np.hstack([np.eye(m), duplicated])))
    pool.extend(gen_gaussian(10, 12, seed) for seed in range(50))
    return pool


def near_identity(size: int, scale: float, seed: int) -> SensingMatrix:
    noise = np.random.default_rng(seed).standard_normal((size, size))
    return normalize_columns(np.eye(size) + scale * noise)
