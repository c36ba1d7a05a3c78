"""Application configuration utilities."""
from __future__ import annotations

import os
from pathlib import Path

from pydantic import BaseModel, Field


class NumericsSettings(BaseModel):
    """Tolerances shared by the linear-algebra kernel and the pursuit loop."""

    rank_tolerance: float = Field(
        default=1e-12,
        description="A triangular diagonal below this fraction of the largest column norm marks the "
        "column subset as numerically dependent.",
    )
    tie_tolerance: float = Field(
        default=1e-12,
        description="Absolute gap on correlation magnitudes under which two candidates are tied.",
    )
    jacobi_tolerance: float = Field(
        default=1e-12,
        description="Jacobi sweeps stop once the off-diagonal Frobenius norm falls below this fraction "
        "of the initial Frobenius norm.",
    )
    jacobi_max_sweeps: int = Field(default=100, description="Sweep cap for the Jacobi eigensolver.")
    zero_residual_tolerance: float = Field(
        default=1e-13,
        description="With epsilon = 0, residuals below this fraction of the measurement norm count as zero.",
    )
    certification_slack: float = Field(
        default=1e-10,
        description="A restricted isometry constant this close to the sharp bound is treated as equal to it.",
    )


class GuardSettings(BaseModel):
    """Limits that keep exhaustive enumerations at desk scale."""

    max_ric_subsets: int = Field(
        default=2_000_000, description="Largest number of column subsets an exact RIC may enumerate."
    )
    max_bruteforce_subsets: int = Field(
        default=500_000, description="Largest binomial(n, K) accepted by the brute-force l0 search."
    )
    max_demo_size: int = Field(default=64, description="Largest NK+1 accepted by the counterexample demo.")
    max_total_trials: int = Field(
        default=1_000_000, description="Largest number of trials a single experiment may schedule."
    )


class ExperimentSettings(BaseModel):
    """Experiment runner settings."""

    workers: int = Field(
        default_factory=lambda: int(os.getenv("APP_WORKERS", "1")),
        description="Worker processes used for trials. 1 runs everything in-process.",
    )
    output_dir: Path = Field(
        default_factory=lambda: Path(os.getenv("APP_OUTPUT_DIR", "./reports")),
        description="Directory where reports are written when no explicit path is given.",
    )
    master_seed: int = Field(
        default_factory=lambda: int(os.getenv("APP_MASTER_SEED", "0")),
        description="Seed from which every per-trial seed is derived.",
    )
    recovery_tolerance: float = Field(
        default=1e-8, description="Largest final residual norm accepted as an exact recovery."
    )


class AppSettings(BaseModel):
    """Top level application settings container."""

    numerics: NumericsSettings = Field(default_factory=NumericsSettings)
    guards: GuardSettings = Field(default_factory=GuardSettings)
    experiments: ExperimentSettings = Field(default_factory=ExperimentSettings)

    def ensure_directories(self) -> None:
        """Create the report directory if it does not exist."""

        self.experiments.output_dir.mkdir(parents=True, exist_ok=True)


settings = AppSettings()
