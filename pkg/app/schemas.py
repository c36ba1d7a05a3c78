"""Pydantic schemas for certificates, experiment requests and reports."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field, model_validator


class RicCertificate(BaseModel):
    order: int = Field(..., ge=1, description="Order of the restricted isometry constant, NK+1.")
    delta: float = Field(..., ge=0.0, description="Exact restricted isometry constant of that order.")
    bound: float = Field(..., gt=0.0, le=1.0, description="Sharp bound 1/sqrt(K/N+1).")
    passes: bool = Field(..., description="Whether delta lies strictly below the bound.")
    subsets_examined: int = Field(..., ge=0)
    K: int = Field(..., ge=1)
    N: int = Field(..., ge=1)

    @model_validator(mode="after")
    def _passes_implies_below_bound(self) -> "RicCertificate":
        if self.passes and not self.delta < self.bound:
            raise ValueError("passes requiere delta < bound")
        return self

    def summary(self) -> str:
        verdict = "CUMPLE" if self.passes else "NO CUMPLE"
        return (
            f"delta_{self.order} = {self.delta:.12f}  cota = {self.bound:.12f}  "
            f"(K={self.K}, N={self.N}, subconjuntos={self.subsets_examined})  {verdict}"
        )


ExperimentKind = Literal["exhaustive_recovery", "counterexample_demo", "phase_transition", "noise_sweep"]

_REQUIRED_PARAMETERS: Dict[str, tuple[str, ...]] = {
    "exhaustive_recovery": ("m", "n", "K", "N", "seeds"),
    "counterexample_demo": ("K", "N"),
    "phase_transition": ("m", "n", "K_values", "trials"),
    "noise_sweep": ("m", "n", "K", "N", "epsilons", "trials"),
}


class ExperimentParameters(BaseModel):
    K: Optional[int] = Field(None, ge=1)
    N: Optional[int] = Field(None, ge=1)
    m: Optional[int] = Field(None, ge=1)
    n: Optional[int] = Field(None, ge=1)
    K_values: Optional[List[int]] = Field(None, description="Sparsity levels swept by a phase transition.")
    N_values: List[int] = Field(default_factory=lambda: [1], description="Selection sizes swept.")
    epsilon: float = Field(0.0, ge=0.0)
    epsilons: Optional[List[float]] = Field(None, description="Noise budgets swept by a noise sweep.")
    seeds: Optional[int] = Field(None, ge=1, description="Number of random matrices.")
    trials: Optional[int] = Field(None, ge=0, description="Trials per grid cell or per noise level.")
    draws: int = Field(1, ge=1, description="Coefficient draws per support in exhaustive recovery.")
    master_seed: Optional[int] = Field(None, ge=0)
    ensemble: Literal["gaussian", "identity"] = "gaussian"
    policy: Literal["lex", "adversarial"] = Field(
        "lex", description="Tie policy; adversarial avoids the true support of each trial."
    )
    magnitude_factor: float = Field(1.01, gt=0.0, description="Signal magnitudes as a multiple of the threshold.")
    exploratory: bool = Field(False, description="Run noise trials that violate the magnitude condition.")

    @model_validator(mode="after")
    def _values_are_valid(self) -> "ExperimentParameters":
        if self.K_values is not None and any(value < 1 for value in self.K_values):
            raise ValueError("K_values debe contener enteros positivos")
        if any(value < 1 for value in self.N_values):
            raise ValueError("N_values debe contener enteros positivos")
        if self.epsilons is not None and any(value < 0 for value in self.epsilons):
            raise ValueError("epsilons debe contener valores no negativos")
        if self.ensemble == "identity" and self.m is not None and self.n is not None and self.m != self.n:
            raise ValueError("el ensamble identidad requiere m == n")
        return self


class ExperimentSpec(BaseModel):
    kind: ExperimentKind
    parameters: ExperimentParameters = Field(default_factory=ExperimentParameters)
    output_path: Optional[Path] = None

    @model_validator(mode="after")
    def _required_parameters(self) -> "ExperimentSpec":
        for name in _REQUIRED_PARAMETERS[self.kind]:
            if getattr(self.parameters, name) is None:
                raise ValueError(f"parameters.{name} es obligatorio para {self.kind}")
        if self.kind in ("exhaustive_recovery", "noise_sweep"):
            params = self.parameters
            if params.N > params.K:
                raise ValueError(f"parameters.N debe cumplir N <= K (N={params.N}, K={params.K})")
            if params.N * params.K > params.m:
                raise ValueError(f"parameters.m debe cumplir N*K <= m (N*K={params.N * params.K}, m={params.m})")
            if params.N * params.K + 1 > params.n:
                raise ValueError(
                    f"parameters.n debe cumplir N*K+1 <= n (N*K+1={params.N * params.K + 1}, n={params.n})"
                )
            # ceil(m/K) < K stops gOMP before K iterations and voids the support guarantee
            if self.kind == "noise_sweep" and params.m <= params.K * (params.K - 1):
                raise ValueError(f"parameters.m debe superar K*(K-1) = {params.K * (params.K - 1)} (m={params.m})")
        return self


class PolicyOutcome(BaseModel):
    policy: str
    first_selection: List[int]
    estimated_support: List[int]
    recovered: bool
    final_residual_norm: float


class CounterexampleReport(BaseModel):
    K: int
    N: int
    size: int
    eigenvalues: List[float]
    expected_eigenvalues: List[float]
    delta: float
    bound: float
    beta1: float
    alphaN: float
    outcomes: List[PolicyOutcome]

    def summary(self) -> str:
        lines = [
            f"Contraejemplo K={self.K}, N={self.N} ({self.size}x{self.size})",
            "  autovalores: " + ", ".join(f"{value:.10f}" for value in self.eigenvalues),
            f"  delta = {self.delta:.12f}  cota = {self.bound:.12f}",
            f"  beta1 = {self.beta1:.12f}  alphaN = {self.alphaN:.12f}",
        ]
        for outcome in self.outcomes:
            lines.append(
                f"  [{outcome.policy}] primera selección {outcome.first_selection}, "
                f"soporte {outcome.estimated_support}, recuperado={outcome.recovered}"
            )
        return "\n".join(lines)


class MatrixRecoveryRecord(BaseModel):
    seed: int
    delta: float
    bound: float
    certified: bool
    trials: int
    successes: int
    success_rate: Optional[float]


class ExhaustiveRecoveryReport(BaseModel):
    m: int
    n: int
    K: int
    N: int
    matrices: List[MatrixRecoveryRecord]
    certified_failures: int = 0
    iteration_capped: bool = False

    def summary(self) -> str:
        certified = [record for record in self.matrices if record.certified]
        lines = [
            f"Recuperación exhaustiva m={self.m}, n={self.n}, K={self.K}, N={self.N}: "
            f"{len(certified)}/{len(self.matrices)} matrices certificadas, "
            f"violaciones={self.certified_failures}"
            + (" (tope de iteraciones menor que K)" if self.iteration_capped else "")
        ]
        for record in self.matrices:
            rate = "-" if record.success_rate is None else f"{record.success_rate:.4f}"
            lines.append(
                f"  semilla {record.seed}: delta={record.delta:.6f} certificada={record.certified} "
                f"éxito={record.successes}/{record.trials} ({rate})"
            )
        return "\n".join(lines)


class NoiseLevelRecord(BaseModel):
    epsilon: float
    trials: int
    successes: int
    max_extra_indices: int


class NoiseSweepReport(BaseModel):
    m: int
    n: int
    K: int
    N: int
    certified_matrices: int
    skipped_matrices: int
    exploratory: bool
    levels: List[NoiseLevelRecord]

    def summary(self) -> str:
        lines = [
            f"Barrido de ruido m={self.m}, n={self.n}, K={self.K}, N={self.N}: "
            f"{self.certified_matrices} matrices certificadas, {self.skipped_matrices} omitidas"
        ]
        for level in self.levels:
            lines.append(
                f"  epsilon={level.epsilon}: {level.successes}/{level.trials} soportes recuperados, "
                f"máx. índices extra={level.max_extra_indices}"
            )
        return "\n".join(lines)
