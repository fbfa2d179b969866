"""evidence-plane - classifiers as hypothesis tests on the evidence-error plane."""

__version__ = "0.1.0"

from evidence_plane.divergence import (
    ClassConditionalBundle,
    class_conditional_divergence,
    knn_kl,
    noise_sweep,
    select_k_null_consistency,
)
from evidence_plane.models import (
    ExperimentConfig,
    KnnEstimatorConfig,
    SNNConfig,
    TrainingConfig,
)
from evidence_plane.plane import (
    AchievableRegion,
    ErrorRates,
    evidence_error_point,
    per_class_error_rates,
    region_check,
)

__all__ = [
    "AchievableRegion",
    "ClassConditionalBundle",
    "ErrorRates",
    "ExperimentConfig",
    "KnnEstimatorConfig",
    "SNNConfig",
    "TrainingConfig",
    "class_conditional_divergence",
    "evidence_error_point",
    "knn_kl",
    "noise_sweep",
    "per_class_error_rates",
    "region_check",
    "select_k_null_consistency",
]
