"""Two unit-covariance Gaussians shifted along the first coordinate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from ..errors import DomainError
from ..seeding import make_rng
from .base import LabeledDataset

LN2 = math.log(2.0)


@dataclass(frozen=True)
class GaussianSpec:
    """``N(0, I)`` versus ``N(shift * e1, I)`` with equal class counts."""

    dimension: int = 4
    mean_shift: float = 1.0
    samples_per_class: int = 5000

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError("dimension must be at least 1")
        if self.mean_shift < 0:
            raise DomainError("mean_shift must be non-negative")
        if self.samples_per_class < 1:
            raise DomainError("samples_per_class must be at least 1")


def gaussian_kl_bits(shift: float) -> float:
    """KL divergence between unit-variance Gaussians ``shift`` apart, in bits."""
    return shift * shift / 2.0 / LN2


def gen_gaussian_pair(spec: GaussianSpec, seed: int) -> LabeledDataset:
    rng = make_rng(seed)
    n = spec.samples_per_class
    x0 = rng.standard_normal((n, spec.dimension))
    x1 = rng.standard_normal((n, spec.dimension))
    x1[:, 0] += spec.mean_shift
    return LabeledDataset(
        features=np.vstack([x0, x1]),
        labels=np.repeat([0, 1], n),
        class_count=2,
        analytic_divergence=gaussian_kl_bits(spec.mean_shift),
        name="gaussian",
    )


def gaussian_np_envelope(alpha, shift: float):
    """Neyman-Pearson optimal type-II error ``Phi(Phi^-1(1 - alpha) - shift)``.

    Accepts a scalar or an array of ``alpha`` values in ``(0, 1)``.
    """
    a = np.asarray(alpha, dtype=np.float64)
    if np.any((a <= 0) | (a >= 1)):
        raise DomainError("alpha must lie strictly between 0 and 1")
    beta = ndtr(ndtri(1.0 - a) - shift)
    return float(beta) if beta.ndim == 0 else beta


def bayes_point(shift: float) -> float:
    """Equal-error point ``alpha = beta = Phi(-shift / 2)`` of the LLR test."""
    return float(ndtr(-shift / 2.0))
