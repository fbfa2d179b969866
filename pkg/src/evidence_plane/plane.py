"""Error rates, the evidence-error plane and majority voting.

Each class ``c`` defines the test "is the sample of class c, or of any other
class". For that test ``alpha_c`` is the fraction of true-c samples predicted
not-c and ``beta_c`` the fraction of true-not-c samples predicted c. A
network maps to the point ``(P_theta, D_theta)`` where ``P_theta`` is the
average per-class type-II exponent. The achievable region is
``0 <= P <= D <= D_inp``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from .datasets.base import LabeledDataset
from .datasets.gaussian import gaussian_np_envelope
from .errors import DomainError, EvaluationError
from .seeding import derive_seed, make_rng

logger = logging.getLogger(__name__)

ENVELOPE_GRID_POINTS = 20_001


class Classifier(Protocol):
    """Anything that maps an ``(n x d)`` batch to ``n`` predicted labels."""

    def predict(self, features: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class ErrorRates:
    """Per-class one-vs-rest error rates with the counts they came from.

    Attributes:
        confusion: ``(K x K)`` counts, rows are true labels, columns predictions
        alpha: Per-class type-I rates ``#(label=c, pred!=c) / #(label=c)``
        beta: Per-class type-II rates ``#(label!=c, pred=c) / #(label!=c)``
        accuracy: Overall fraction of correct predictions
    """

    confusion: np.ndarray = field(repr=False)
    alpha: np.ndarray
    beta: np.ndarray
    accuracy: float

    @property
    def class_count(self) -> int:
        return int(self.confusion.shape[0])

    @property
    def support(self) -> np.ndarray:
        """Samples per true class."""
        return self.confusion.sum(axis=1)

    @property
    def negatives(self) -> np.ndarray:
        """``N_not_c``: samples whose label is not ``c``."""
        return self.confusion.sum() - self.support

    @property
    def total(self) -> int:
        return int(self.confusion.sum())

    @classmethod
    def from_confusion(cls, confusion: np.ndarray) -> "ErrorRates":
        counts = np.asarray(confusion, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise EvaluationError(f"confusion matrix must be square, got {counts.shape}")
        if counts.shape[0] < 2:
            raise EvaluationError(f"error rates need at least two classes, got {counts.shape[0]}")
        total = counts.sum()
        if total == 0:
            raise EvaluationError("confusion matrix is empty")
        support = counts.sum(axis=1)
        missing = np.flatnonzero(support == 0)
        if missing.size:
            raise EvaluationError(f"classes {missing.tolist()} have no evaluation samples")
        diag = np.diag(counts)
        negatives = total - support
        alpha = (support - diag) / support
        beta = (counts.sum(axis=0) - diag) / negatives
        return cls(
            confusion=counts,
            alpha=alpha.astype(np.float64),
            beta=beta.astype(np.float64),
            accuracy=float(diag.sum() / total),
        )


def per_class_error_rates(predictions: np.ndarray, labels: np.ndarray, class_count: int) -> ErrorRates:
    if class_count < 2:
        raise EvaluationError(f"error rates need at least two classes, got {class_count}")
    pred = np.asarray(predictions).astype(np.int64).ravel()
    true = np.asarray(labels).astype(np.int64).ravel()
    if pred.shape != true.shape:
        raise EvaluationError(f"{pred.size} predictions for {true.size} labels")
    if true.size == 0:
        raise EvaluationError("no samples to evaluate")
    for name, values in (("prediction", pred), ("label", true)):
        if values.min() < 0 or values.max() >= class_count:
            raise EvaluationError(f"{name} outside [0, {class_count})")
    confusion = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(confusion, (true, pred), 1)
    return ErrorRates.from_confusion(confusion)


@dataclass(frozen=True)
class EvidenceErrorPoint:
    p_theta: float
    d_theta: float
    epoch: int
    model: str = ""
    dataset: str = ""


def error_exponent(rates: ErrorRates) -> float:
    """``P_theta = (1/K) sum_c -log2(max(beta_c, 1 / (N_not_c + 1)))``."""
    floor = 1.0 / (rates.negatives + 1.0)
    return float(np.mean(-np.log2(np.maximum(rates.beta, floor))))


def evidence_error_point(
    rates: ErrorRates,
    d_theta: float,
    epoch: int,
    model: str = "",
    dataset: str = "",
) -> EvidenceErrorPoint:
    return EvidenceErrorPoint(error_exponent(rates), float(d_theta), int(epoch), model, dataset)


class RegionStatus(str, Enum):
    INSIDE = "inside"
    ABOVE_STEIN = "above_stein"
    ABOVE_DPI = "above_dpi"
    BELOW_ZERO = "below_zero"


@dataclass(frozen=True)
class AchievableRegion:
    d_inp: float

    def __post_init__(self):
        if not self.d_inp > 0:
            raise DomainError("D_inp must be positive")


def region_check(point: EvidenceErrorPoint, region: AchievableRegion, tol_bits: float = 0.0) -> RegionStatus:
    """Locate a point relative to ``0 <= P <= D <= D_inp`` with a tolerance band."""
    if tol_bits < 0:
        raise DomainError("tolerance must be non-negative")
    if point.p_theta < -tol_bits or point.d_theta < -tol_bits:
        return RegionStatus.BELOW_ZERO
    if point.d_theta > region.d_inp + tol_bits:
        return RegionStatus.ABOVE_DPI
    if point.p_theta > point.d_theta + tol_bits:
        return RegionStatus.ABOVE_STEIN
    return RegionStatus.INSIDE


def stein_beta(d_bits: float, n: int) -> float:
    """Asymptotic optimal type-II error ``2^(-n d)`` after ``n`` samples."""
    if n < 1:
        raise DomainError("n must be at least 1")
    if d_bits < 0:
        raise DomainError("divergence must be non-negative")
    return float(2.0 ** (-n * d_bits))


def stein_line(d_bits: float, n_values: Sequence[int]) -> list[tuple[int, float]]:
    return [(int(n), stein_beta(d_bits, n)) for n in n_values]


# ---------------------------------------------------------------------------
# Gaussian Neyman-Pearson comparison
# ---------------------------------------------------------------------------


def np_plane_data(shift: float, alphas: Sequence[float]) -> list[tuple[float, float, float]]:
    """Rows ``(alpha, beta_star(alpha), alpha)``; the last column is the diagonal."""
    grid = np.asarray(alphas, dtype=np.float64)
    envelope = np.atleast_1d(gaussian_np_envelope(grid, shift))
    return [(float(a), float(b), float(a)) for a, b in zip(np.atleast_1d(grid), envelope)]


def distance_to_envelope(alpha: float, beta: float, shift: float) -> float:
    """Euclidean distance from ``(alpha, beta)`` to the NP envelope curve."""
    grid = np.linspace(0.0, 1.0, ENVELOPE_GRID_POINTS)[1:-1]
    curve = gaussian_np_envelope(grid, shift)
    # Closed endpoints (0, 1) and (1, 0) belong to the curve.
    grid = np.concatenate([[0.0], grid, [1.0]])
    curve = np.concatenate([[1.0], curve, [0.0]])
    return float(np.min(np.hypot(grid - alpha, curve - beta)))


# ---------------------------------------------------------------------------
# Majority voting
# ---------------------------------------------------------------------------


def _vote(predictions: np.ndarray, class_count: int) -> int:
    # argmax returns the first maximum: ties go to the smallest class index.
    return int(np.argmax(np.bincount(predictions, minlength=class_count)))


def majority_vote_classify(model: Classifier, samples: np.ndarray, class_count: int | None = None) -> int:
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] == 0:
        raise EvaluationError("cannot vote over an empty group")
    predictions = np.asarray(model.predict(x)).astype(np.int64)
    k = class_count if class_count is not None else int(predictions.max()) + 1
    return _vote(predictions, k)


@dataclass(frozen=True)
class VoteCurvePoint:
    n: int
    rates: ErrorRates

    @property
    def error(self) -> float:
        return 1.0 - self.rates.accuracy


def majority_vote_error_curve(
    model: Classifier,
    dataset: LabeledDataset,
    n_values: Sequence[int],
    groups_per_class: int,
    seed: int,
) -> list[VoteCurvePoint]:
    """Error rates of n-sample majority votes over bootstrapped same-class groups."""
    if groups_per_class < 1:
        raise EvaluationError("groups_per_class must be at least 1")
    k = dataset.class_count
    # Every sample is classified once; groups index into the cached predictions.
    predictions = np.asarray(model.predict(dataset.features)).astype(np.int64)
    members = [np.flatnonzero(dataset.labels == c) for c in range(k)]
    curve = []
    for n in n_values:
        if n < 1:
            raise EvaluationError("group size must be at least 1")
        voted = []
        truth = []
        for c in range(k):
            rng = make_rng(derive_seed(seed, (int(n) << 16) + c))
            picks = rng.choice(members[c], size=(groups_per_class, int(n)), replace=True)
            votes = predictions[picks]
            counts = (votes[:, :, None] == np.arange(k)).sum(axis=1)
            voted.append(np.argmax(counts, axis=1))
            truth.append(np.full(groups_per_class, c))
        rates = per_class_error_rates(np.concatenate(voted), np.concatenate(truth), k)
        logger.debug("majority vote n=%d: accuracy %.4f", n, rates.accuracy)
        curve.append(VoteCurvePoint(int(n), rates))
    return curve


def binary_majority_analytic(p: float) -> float:
    """Three-vote binary error ``3 p^2 - 2 p^3``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    return 3.0 * p * p - 2.0 * p**3
