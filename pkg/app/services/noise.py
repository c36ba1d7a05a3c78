"""Support recovery under l2-bounded noise."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import BoundViolatedError, HypothesisViolatedError, InvalidInputError
from ..schemas import RicCertificate
from .densela import as_vector
from .gomp import RecoveryResult, TiePolicy, gomp_recover, iteration_cap
from .ric import certify, min_magnitude_threshold
from .sensing import SensingMatrix

LOGGER = logging.getLogger(__name__)


def gen_bounded_noise(m: int, epsilon: float, seed: int) -> np.ndarray:
    """A seeded noise vector drawn uniformly on the sphere of radius ``epsilon``."""

    if m < 1:
        raise InvalidInputError(f"m debe ser positivo (m={m}).")
    if epsilon < 0:
        raise InvalidInputError(f"epsilon debe ser no negativo (epsilon={epsilon}).")
    if epsilon == 0:
        return np.zeros(m)
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(m)
    while not np.linalg.norm(direction) > 0:
        direction = rng.standard_normal(m)
    return epsilon * direction / np.linalg.norm(direction)


@dataclass(frozen=True)
class NoisySetup:
    K: int
    N: int
    epsilon: float
    delta: float
    seed: int
    threshold: float = field(init=False)

    def __post_init__(self) -> None:
        try:
            threshold = min_magnitude_threshold(self.K, self.N, self.delta, self.epsilon)
        except BoundViolatedError as exc:
            raise HypothesisViolatedError(str(exc)) from exc
        object.__setattr__(self, "threshold", threshold)

    @classmethod
    def from_certificate(cls, certificate: RicCertificate, epsilon: float, seed: int) -> "NoisySetup":
        return cls(K=certificate.K, N=certificate.N, epsilon=epsilon, delta=certificate.delta, seed=seed)


@dataclass
class TrialOutcome:
    success: bool
    extra_indices: tuple[int, ...]
    result: RecoveryResult


def _check_hypotheses(
    sensing: SensingMatrix,
    setup: NoisySetup,
    support: Sequence[int],
    magnitudes: np.ndarray,
    certificate: Optional[RicCertificate],
    exploratory: bool,
) -> None:
    if len(set(support)) != len(support) or len(support) > setup.K:
        raise HypothesisViolatedError(f"El soporte debe tener a lo sumo K={setup.K} índices distintos.")
    if any(not 0 <= i < sensing.n for i in support):
        raise HypothesisViolatedError("El soporte contiene índices fuera de rango.")
    if magnitudes.shape[0] != len(support):
        raise HypothesisViolatedError("Se requiere una magnitud por índice del soporte.")
    if iteration_cap(setup.K, sensing.m) < setup.K:
        raise HypothesisViolatedError(f"Con m={sensing.m} y K={setup.K} gOMP se detiene antes de K iteraciones.")
    certificate = certificate or certify(sensing, setup.K, setup.N)
    if not certificate.passes or (certificate.K, certificate.N) != (setup.K, setup.N):
        raise HypothesisViolatedError("La matriz no está certificada para este (K, N).")
    if certificate.delta > setup.delta:
        raise HypothesisViolatedError(
            f"El delta de la configuración ({setup.delta}) es menor que el certificado ({certificate.delta})."
        )
    if not exploratory and not np.all(np.abs(magnitudes) > setup.threshold):
        raise HypothesisViolatedError(
            f"Todas las magnitudes deben superar estrictamente el umbral {setup.threshold:.6g}."
        )


def run_noisy_trial(
    sensing: SensingMatrix,
    setup: NoisySetup,
    support: Sequence[int],
    magnitudes,
    policy: Optional[TiePolicy] = None,
    *,
    certificate: Optional[RicCertificate] = None,
    exploratory: bool = False,
) -> TrialOutcome:
    """Recover the support of ``x`` from ``y = A x + e`` with the stopping rule ``||r|| <= epsilon``.

    ``certificate`` avoids re-enumerating the RIC on every trial. With
    ``exploratory=True`` the magnitude condition is not enforced and the outcome
    carries no guarantee.
    """

    support = [int(i) for i in support]
    magnitudes = as_vector(magnitudes)
    _check_hypotheses(sensing, setup, support, magnitudes, certificate, exploratory)
    if exploratory:
        LOGGER.debug("Ensayo exploratorio: no se verifica la condición de magnitud")

    x = np.zeros(sensing.n)
    x[support] = magnitudes
    y = sensing.mat @ x + gen_bounded_noise(sensing.m, setup.epsilon, setup.seed)
    result = gomp_recover(sensing, y, setup.K, setup.N, setup.epsilon, policy)
    extra = tuple(sorted(set(result.estimated_support) - set(support)))
    return TrialOutcome(success=result.recovers(support), extra_indices=extra, result=result)


def support_recovery_trial(
    sensing: SensingMatrix,
    setup: NoisySetup,
    support: Sequence[int],
    magnitudes,
    policy: Optional[TiePolicy] = None,
    *,
    certificate: Optional[RicCertificate] = None,
    exploratory: bool = False,
) -> bool:
    """Whether the true support is contained in the estimated support."""

    return run_noisy_trial(
        sensing, setup, support, magnitudes, policy, certificate=certificate, exploratory=exploratory
    ).success
