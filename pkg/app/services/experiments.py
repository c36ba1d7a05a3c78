"""Experiment runner tying the services together into deterministic reports."""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar, Union

import numpy as np

from ..config import settings
from ..errors import GuardExceededError, SpectrumMismatchError
from ..schemas import (
    CounterexampleReport,
    ExhaustiveRecoveryReport,
    ExperimentParameters,
    ExperimentSpec,
    MatrixRecoveryRecord,
    NoiseLevelRecord,
    NoiseSweepReport,
    PolicyOutcome,
)
from .densela import gram, symmetric_eigenvalues
from .gomp import TiePolicy, gomp_recover, iteration_cap, selection_margins
from .noise import NoisySetup, run_noisy_trial
from .ric import certify, exact_ric, sharp_bound
from .sensing import (
    SensingMatrix,
    counterexample_signal,
    counterexample_spectrum,
    gen_counterexample,
    gen_gaussian,
)

LOGGER = logging.getLogger(__name__)

PHASE_TRANSITION_HEADER = ["K", "N", "m", "n", "trials", "successes", "success_rate"]
SPECTRUM_TOLERANCE = 1e-10

Report = Union[CounterexampleReport, ExhaustiveRecoveryReport, NoiseSweepReport, str]
T = TypeVar("T")
R = TypeVar("R")


def child_seed(master_seed: int, *key: int) -> int:
    """Derive a per-trial seed from the master seed and a tuple of indices."""

    sequence = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def _map(func: Callable[[T], R], items: Sequence[T], workers: Optional[int]) -> List[R]:
    workers = settings.experiments.workers if workers is None else workers
    if workers <= 1 or len(items) < 2:
        return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _check_trial_budget(total: int) -> None:
    limit = settings.guards.max_total_trials
    if total > limit:
        raise GuardExceededError(f"El experimento requiere {total} ensayos y el límite es {limit}.")


def _build_matrix(ensemble: str, m: int, n: int, seed: int) -> SensingMatrix:
    if ensemble == "identity":
        return SensingMatrix.from_array(np.eye(m, n), normalized=True)
    return gen_gaussian(m, n, seed)


def _random_coefficients(rng: np.random.Generator, size: int) -> np.ndarray:
    magnitudes = rng.uniform(0.5, 2.0, size)
    return magnitudes * rng.choice([-1.0, 1.0], size)


def _policy_for(name: str, support: Iterable[int]) -> TiePolicy:
    return TiePolicy.from_name(name, avoid=support)


def _exact_success(sensing: SensingMatrix, support: Sequence[int], coefficients: np.ndarray, K: int, N: int,
                   epsilon: float, policy_name: str) -> bool:
    x = np.zeros(sensing.n)
    x[list(support)] = coefficients
    result = gomp_recover(sensing, sensing.mat @ x, K, N, epsilon, _policy_for(policy_name, support))
    return result.recovers(support) and result.final_residual_norm <= settings.experiments.recovery_tolerance


def run_counterexample_demo(K: int, N: int) -> CounterexampleReport:
    """Build the sharpness counterexample, check its spectrum and run gOMP under both tie policies."""

    size = N * K + 1
    if size > settings.guards.max_demo_size:
        raise GuardExceededError(f"NK+1 = {size} excede el límite {settings.guards.max_demo_size}.")
    sensing = gen_counterexample(K, N)
    eigenvalues = symmetric_eigenvalues(gram(sensing.mat))
    expected = counterexample_spectrum(K, N)
    if not np.allclose(eigenvalues, expected, rtol=0.0, atol=SPECTRUM_TOLERANCE):
        raise SpectrumMismatchError(f"Espectro {eigenvalues} distinto del esperado {expected}.")

    delta = exact_ric(sensing, size, workers=1)
    bound = sharp_bound(K, N)
    if abs(delta - bound) > SPECTRUM_TOLERANCE:
        raise SpectrumMismatchError(f"delta = {delta} no coincide con la cota {bound}.")

    x = counterexample_signal(K, N)
    y = sensing.mat @ x
    true_support = tuple(range(K))
    beta1, alphaN = selection_margins(sensing, y, true_support, (), N)

    outcomes = []
    policies = (TiePolicy.lexicographic(), TiePolicy.adversarial(true_support))
    if N > K:
        # gOMP itself requires N <= K; the spectrum and the tie are still reported
        LOGGER.warning("N=%d > K=%d: se omiten las ejecuciones de gOMP", N, K)
        policies = ()
    for policy in policies:
        result = gomp_recover(
            sensing, y, K, N, settings.experiments.recovery_tolerance, policy, true_support=true_support
        )
        outcomes.append(
            PolicyOutcome(
                policy=policy.kind.value,
                first_selection=list(result.first_selection),
                estimated_support=list(result.estimated_support),
                recovered=result.recovers(true_support),
                final_residual_norm=result.final_residual_norm,
            )
        )
    LOGGER.info("Contraejemplo K=%d, N=%d: delta=%.12f, beta1=%.12f, alphaN=%.12f", K, N, delta, beta1, alphaN)
    return CounterexampleReport(
        K=K,
        N=N,
        size=size,
        eigenvalues=[float(value) for value in eigenvalues],
        expected_eigenvalues=[float(value) for value in expected],
        delta=delta,
        bound=bound,
        beta1=beta1,
        alphaN=alphaN,
        outcomes=outcomes,
    )


def _recover_on_matrix(task: tuple) -> MatrixRecoveryRecord:
    index, m, n, K, N, draws, master_seed, ensemble, policy_name = task
    seed = child_seed(master_seed, 0, index)
    sensing = _build_matrix(ensemble, m, n, seed)
    certificate = certify(sensing, K, N, workers=1)
    rng = np.random.default_rng(child_seed(master_seed, 1, index))
    trials = successes = 0
    for support in itertools.combinations(range(n), K):
        for _ in range(draws):
            trials += 1
            successes += _exact_success(sensing, support, _random_coefficients(rng, K), K, N, 0.0, policy_name)
    return MatrixRecoveryRecord(
        seed=seed,
        delta=certificate.delta,
        bound=certificate.bound,
        certified=certificate.passes,
        trials=trials,
        successes=successes,
        success_rate=successes / trials if trials else None,
    )


def run_exhaustive_recovery(
    m: int,
    n: int,
    K: int,
    N: int,
    seed_count: int,
    *,
    draws: int = 1,
    master_seed: Optional[int] = None,
    ensemble: str = "gaussian",
    policy: str = "lex",
    workers: Optional[int] = None,
) -> ExhaustiveRecoveryReport:
    """Certify each random matrix and run gOMP over every support of size ``K``.

    Certified matrices must recover every signal; each failure on one is counted as
    a certified failure, unless ``ceil(m/K) < K`` caps the loop before K iterations.
    Uncertified matrices only contribute empirical rates.
    """

    master_seed = settings.experiments.master_seed if master_seed is None else master_seed
    _check_trial_budget(seed_count * math.comb(n, K) * draws)
    tasks = [(index, m, n, K, N, draws, master_seed, ensemble, policy) for index in range(seed_count)]
    records = _map(_recover_on_matrix, tasks, workers)

    violations = 0
    capped = iteration_cap(K, m) < K
    if capped:
        LOGGER.warning("Con m=%d y K=%d gOMP se detiene antes de K iteraciones; no se cuentan violaciones", m, K)
    for record in records:
        if not record.certified:
            LOGGER.warning("Matriz con semilla %d no certificada (delta=%.6f)", record.seed, record.delta)
        elif record.successes < record.trials and not capped:
            violations += record.trials - record.successes
            LOGGER.error(
                "Matriz certificada con semilla %d falló %d de %d recuperaciones",
                record.seed,
                record.trials - record.successes,
                record.trials,
            )
    return ExhaustiveRecoveryReport(
        m=m, n=n, K=K, N=N, matrices=records, certified_failures=violations, iteration_capped=capped
    )


def _phase_cell(task: tuple) -> tuple[int, int]:
    cell, K, N, m, n, trials, epsilon, master_seed, ensemble, policy_name = task
    successes = 0
    for trial in range(trials):
        rng = np.random.default_rng(child_seed(master_seed, cell, trial))
        sensing = _build_matrix(ensemble, m, n, int(rng.integers(2**63)))
        support = tuple(sorted(int(i) for i in rng.choice(n, size=K, replace=False)))
        successes += _exact_success(sensing, support, _random_coefficients(rng, K), K, N, epsilon, policy_name)
    return trials, successes


def _cell_is_valid(K: int, N: int, m: int, n: int) -> bool:
    return N <= K and N * K <= m and K <= n


def run_phase_transition(params: ExperimentParameters, *, workers: Optional[int] = None) -> str:
    """Empirical success rates over a ``(K, N)`` grid, rendered as CSV.

    Cells that violate ``N <= K`` and ``N <= m/K`` produce rows with zero trials.
    """

    master_seed = settings.experiments.master_seed if params.master_seed is None else params.master_seed
    grid = list(itertools.product(params.K_values, params.N_values))
    tasks = []
    for cell, (K, N) in enumerate(grid):
        trials = params.trials if _cell_is_valid(K, N, params.m, params.n) else 0
        tasks.append((cell, K, N, params.m, params.n, trials, params.epsilon, master_seed,
                      params.ensemble, params.policy))
    _check_trial_budget(sum(task[5] for task in tasks))
    counts = _map(_phase_cell, tasks, workers)

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(PHASE_TRANSITION_HEADER)
    for (K, N), (trials, successes) in zip(grid, counts):
        rate = repr(successes / trials) if trials else ""
        writer.writerow([K, N, params.m, params.n, trials, successes, rate])
    LOGGER.info("Transición de fase: %d celdas, %d ensayos", len(grid), sum(count[0] for count in counts))
    return buffer.getvalue()


def _noise_trials(task: tuple) -> List[tuple[int, int, int]]:
    index, params, master_seed = task
    sensing = _build_matrix(params.ensemble, params.m, params.n, child_seed(master_seed, 0, index))
    certificate = certify(sensing, params.K, params.N, workers=1)
    if not certificate.passes:
        return []
    levels = []
    for level, epsilon in enumerate(params.epsilons):
        successes = max_extra = 0
        for trial in range(params.trials):
            seed = child_seed(master_seed, 2, index, level, trial)
            rng = np.random.default_rng(seed)
            setup = NoisySetup.from_certificate(certificate, epsilon, seed)
            support = tuple(sorted(int(i) for i in rng.choice(params.n, size=params.K, replace=False)))
            signs = rng.choice([-1.0, 1.0], params.K)
            if setup.threshold > 0:
                magnitudes = params.magnitude_factor * setup.threshold * signs
            else:
                magnitudes = _random_coefficients(rng, params.K)
            outcome = run_noisy_trial(
                sensing,
                setup,
                support,
                magnitudes,
                _policy_for(params.policy, support),
                certificate=certificate,
                exploratory=params.exploratory,
            )
            successes += outcome.success
            max_extra = max(max_extra, len(outcome.extra_indices))
        levels.append((params.trials, successes, max_extra))
    return levels


def run_noise_sweep(params: ExperimentParameters, *, workers: Optional[int] = None) -> NoiseSweepReport:
    """Support recovery trials with noise on the epsilon-sphere for every certified matrix."""

    master_seed = settings.experiments.master_seed if params.master_seed is None else params.master_seed
    matrices = 1 if params.ensemble == "identity" else params.seeds or 1
    _check_trial_budget(matrices * len(params.epsilons) * params.trials)
    if params.exploratory:
        LOGGER.warning("Modo exploratorio: los ensayos bajo el umbral no verifican ninguna garantía")
    per_matrix = _map(_noise_trials, [(index, params, master_seed) for index in range(matrices)], workers)

    certified = [levels for levels in per_matrix if levels]
    records = []
    for level, epsilon in enumerate(params.epsilons):
        rows = [levels[level] for levels in certified]
        records.append(
            NoiseLevelRecord(
                epsilon=epsilon,
                trials=sum(row[0] for row in rows),
                successes=sum(row[1] for row in rows),
                max_extra_indices=max((row[2] for row in rows), default=0),
            )
        )
    for record in records:
        if not params.exploratory and record.successes < record.trials:
            LOGGER.error("epsilon=%s: %d soportes no recuperados", record.epsilon, record.trials - record.successes)
    return NoiseSweepReport(
        m=params.m,
        n=params.n,
        K=params.K,
        N=params.N,
        certified_matrices=len(certified),
        skipped_matrices=matrices - len(certified),
        exploratory=params.exploratory,
        levels=records,
    )


def run_experiment(spec: ExperimentSpec, *, workers: Optional[int] = None) -> Report:
    """Dispatch a validated experiment specification."""

    params = spec.parameters
    LOGGER.info("Iniciando experimento %s", spec.kind)
    if spec.kind == "counterexample_demo":
        return run_counterexample_demo(params.K, params.N)
    if spec.kind == "exhaustive_recovery":
        return run_exhaustive_recovery(
            params.m,
            params.n,
            params.K,
            params.N,
            params.seeds,
            draws=params.draws,
            master_seed=params.master_seed,
            ensemble=params.ensemble,
            policy=params.policy,
            workers=workers,
        )
    if spec.kind == "phase_transition":
        return run_phase_transition(params, workers=workers)
    return run_noise_sweep(params, workers=workers)


def render_report(report: Report) -> tuple[str, str]:
    """Return ``(machine_readable, summary)`` for a report."""

    if isinstance(report, str):
        return report, report
    return report.model_dump_json(indent=2) + "\n", report.summary()


def write_report(report: Report, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document, _ = render_report(report)
    with path.open("w", newline="") as handle:
        handle.write(document)
    LOGGER.info("Reporte escrito en %s", path)
    return path
