"""Configuration models for evidence-plane."""

import math
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DEFAULT_CANDIDATE_KS = [1, 2, 3, 5, 7, 10, 15, 20, 30]
UINT64_MAX = 2**64 - 1


def _split_list(value):
    """Accept comma-separated strings wherever a list is expected."""
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class TrainingConfig(BaseModel):
    """Adam and mini-batch settings shared by both network families."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    learning_rate: float = Field(default=1e-3, gt=0, description="Adam step size")
    beta1: float = Field(default=0.9, gt=0, lt=1, description="First-moment decay")
    beta2: float = Field(default=0.999, gt=0, lt=1, description="Second-moment decay")
    epsilon: float = Field(default=1e-8, gt=0, description="Adam denominator guard")
    epochs: int = Field(default=50, ge=0, description="Number of passes over the data")
    batch_size: int = Field(default=64, ge=1, description="Mini-batch size")
    seed: int = Field(default=0, ge=0, le=UINT64_MAX, description="Shuffle seed")


class SNNConfig(BaseModel):
    """Leaky integrate-and-fire dynamics plus the embedded training setup."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    leak: float = Field(default=0.95, gt=0, lt=1, description="Membrane leak eta")
    threshold: float = Field(default=1.0, gt=0, description="Firing threshold V_th")
    time_steps: int = Field(default=5, ge=1, description="Simulation length tau")
    surrogate_slope: float = Field(
        default=math.pi, gt=0, description="Slope of the arctan surrogate"
    )
    encode_seed: int = Field(
        default=0, ge=0, le=UINT64_MAX, description="Seed of the Poisson rate encoder"
    )
    training: TrainingConfig = Field(default_factory=TrainingConfig)


class _EstimatorSettings(BaseModel):
    """Fields and checks shared by the estimator config and the config-file block."""

    model_config = ConfigDict(extra="forbid")

    k: Union[int, Literal["auto"]] = Field(
        default="auto", description="Neighbour order, or 'auto' for null-consistency"
    )
    candidate_ks: List[int] = Field(default_factory=lambda: list(DEFAULT_CANDIDATE_KS))
    null_splits: int = Field(default=10, ge=1, description="Random half-splits S")
    noise_sigma: float = Field(default=1e-6, ge=0, description="Input noise sigma")
    workers: int = Field(default=1, ge=1, description="Threads for per-class estimates")

    @field_validator("k", mode="before")
    @classmethod
    def _parse_k(cls, value):
        if isinstance(value, str) and value.strip().isdigit():
            return int(value)
        return value

    @field_validator("k")
    @classmethod
    def _positive_k(cls, value):
        if isinstance(value, int) and value < 1:
            raise ValueError("k must be a positive integer or 'auto'")
        return value

    @field_validator("candidate_ks", mode="before")
    @classmethod
    def _parse_candidates(cls, value):
        return _split_list(value)

    @model_validator(mode="after")
    def _check_candidates(self):
        if self.k == "auto" and not self.candidate_ks:
            raise ValueError("candidate_ks must be non-empty when k = auto")
        if any(k < 1 for k in self.candidate_ks):
            raise ValueError("candidate_ks must be positive")
        return self


class KnnEstimatorConfig(_EstimatorSettings):
    """Settings of the kNN KL divergence estimator."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = Field(default=0, ge=0, le=UINT64_MAX)


# ---------------------------------------------------------------------------
# Experiment configuration blocks
# ---------------------------------------------------------------------------


class DatasetBlock(BaseModel):
    """Which dataset to generate or load, and how much of it."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["gaussian", "binary_image", "yin_yang", "mnist"]
    samples_per_class: int = Field(default=5000, ge=1)
    test_fraction: float = Field(default=0.2, gt=0, lt=1)
    # gaussian
    dimension: int = Field(default=4, ge=1)
    shift: float = Field(default=1.0, ge=0)
    # binary_image
    side: int = Field(default=8, ge=2)
    flip_prob: float = Field(default=0.1, gt=0, lt=1)
    oracle_samples: int = Field(
        default=200_000, ge=1, description="Monte Carlo draws for the KL oracle"
    )
    # yin_yang
    big_radius: float = Field(default=0.5, gt=0)
    dot_radius: float = Field(default=0.125, gt=0)
    # mnist
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    export_csv: bool = Field(default=False, description="Write train.csv and test.csv to the run")

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == "mnist":
            missing = [
                name
                for name in ("train_images", "train_labels", "test_images", "test_labels")
                if getattr(self, name) is None
            ]
            if missing:
                raise ValueError(f"mnist dataset requires {', '.join(missing)}")
        if self.kind == "yin_yang" and self.dot_radius >= self.big_radius:
            raise ValueError("dot_radius must be smaller than big_radius")
        return self


class ModelBlock(BaseModel):
    """Classifier family and architecture."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["dense", "spiking", "linear"]
    hidden_dims: List[int] = Field(default_factory=lambda: [64, 32, 16, 8])
    leak: float = Field(default=0.95, gt=0, lt=1)
    threshold: float = Field(default=1.0, gt=0)
    time_steps: int = Field(default=5, ge=1)
    surrogate_slope: float = Field(default=math.pi, gt=0)

    @field_validator("hidden_dims", mode="before")
    @classmethod
    def _parse_dims(cls, value):
        return _split_list(value)

    @field_validator("hidden_dims")
    @classmethod
    def _positive_dims(cls, value):
        if any(v < 1 for v in value):
            raise ValueError("hidden_dims must be positive")
        return value

    def layer_dims(self, input_dim: int, class_count: int) -> list[int]:
        hidden = [] if self.kind == "linear" else list(self.hidden_dims)
        return [input_dim, *hidden, class_count]


class TrainingBlock(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, gt=0, lt=1)
    beta2: float = Field(default=0.999, gt=0, lt=1)
    epsilon: float = Field(default=1e-8, gt=0)
    epochs: int = Field(default=50, ge=0)
    batch_size: int = Field(default=64, ge=1)

    def to_training_config(self, seed: int) -> TrainingConfig:
        return TrainingConfig(**self.model_dump(), seed=seed)


class EstimationBlock(_EstimatorSettings):
    """kNN estimator settings plus the per-epoch evaluation budget."""

    max_per_class: int = Field(default=5000, ge=2)
    split: Literal["test", "train"] = "test"

    def to_knn_config(self, seed: int) -> KnnEstimatorConfig:
        return KnnEstimatorConfig(
            k=self.k,
            candidate_ks=self.candidate_ks,
            null_splits=self.null_splits,
            noise_sigma=self.noise_sigma,
            seed=seed,
            workers=self.workers,
        )


class AnalysisBlock(BaseModel):
    """Post-training analyses: majority voting, noise sweep, NP envelope grid."""

    model_config = ConfigDict(extra="forbid")

    vote_n_values: List[int] = Field(default_factory=lambda: [1, 3, 5, 9])
    vote_groups_per_class: int = Field(default=1000, ge=1)
    noise_sigmas: List[float] = Field(default_factory=list)
    alpha_points: int = Field(default=99, ge=1)
    region_tol_bits: float = Field(
        default=3.0, ge=0, description="Tolerance band of the achievable-region check"
    )

    @field_validator("vote_n_values", "noise_sigmas", mode="before")
    @classmethod
    def _parse_lists(cls, value):
        return _split_list(value)

    @field_validator("vote_n_values")
    @classmethod
    def _positive_votes(cls, value):
        if any(v < 1 for v in value):
            raise ValueError("vote_n_values must be positive")
        return value

    @field_validator("noise_sigmas")
    @classmethod
    def _non_negative_sigmas(cls, value):
        if any(v < 0 for v in value):
            raise ValueError("noise_sigmas must be non-negative")
        return value

    def alpha_grid(self) -> list[float]:
        n = self.alpha_points
        return [(i + 1) / (n + 1) for i in range(n)]


class ExperimentConfig(BaseModel):
    """A complete, validated experiment description."""

    model_config = ConfigDict(extra="forbid")

    dataset: DatasetBlock
    model: ModelBlock
    training: TrainingBlock = Field(default_factory=TrainingBlock)
    estimation: EstimationBlock = Field(default_factory=EstimationBlock)
    analysis: AnalysisBlock = Field(default_factory=AnalysisBlock)
    output_dir: str = Field(default="runs/experiment")
    seed: int = Field(ge=0, le=UINT64_MAX, description="Master seed")

    def snn_config(self, training: TrainingConfig, encode_seed: int) -> SNNConfig:
        return SNNConfig(
            leak=self.model.leak,
            threshold=self.model.threshold,
            time_steps=self.model.time_steps,
            surrogate_slope=self.model.surrogate_slope,
            encode_seed=encode_seed,
            training=training,
        )
