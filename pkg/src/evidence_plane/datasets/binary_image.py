"""Row-white versus column-white binary images through a binary symmetric channel.

Class 0 images start from a template with one all-ones row, class 1 from a
template with one all-ones column; every pixel is then flipped independently
with probability ``p``. Writing ``lambda = p / (1 - p)``, the log-likelihood
ratio only depends on the row sums ``a_r`` and column sums ``b_c``::

    phi(x) = log sum_r lambda^(-2 a_r) - log sum_c lambda^(-2 b_c)

and ``KL(P_R || P_C) = E_row(d, p) - E_col(d, p)`` where the two expectations
run over the independent count laws ``A_r ~ Bin(d, 1-p)``, ``A_i ~ Bin(d, p)``
and ``B_j ~ Bern(1-p) + Bin(d-1, p)``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from ..errors import DomainError, ResourceError
from ..seeding import derive_seed, make_rng
from .base import LabeledDataset

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
EXACT_MAX_SIDE = 6
BRUTE_FORCE_MAX_SIDE = 4
MC_CHUNK = 100_000


@dataclass(frozen=True)
class BinaryImageSpec:
    side: int = 8
    flip_prob: float = 0.1

    def __post_init__(self):
        if self.side < 2:
            raise DomainError("side must be at least 2")
        if not 0 < self.flip_prob < 1:
            raise DomainError("flip_prob must lie strictly between 0 and 1")

    @property
    def channel_ratio(self) -> float:
        """``lambda = p / (1 - p)``."""
        return self.flip_prob / (1.0 - self.flip_prob)


@dataclass(frozen=True)
class KLOracleResult:
    """Analytic divergence in bits; ``standard_error`` is 0 for exact evaluation."""

    value: float
    standard_error: float
    method: str
    samples: int = 0


def _sample_images(spec: BinaryImageSpec, n: int, row_white: bool, rng: np.random.Generator) -> np.ndarray:
    d = spec.side
    lines = rng.integers(0, d, size=n)
    templates = np.zeros((n, d, d), dtype=np.uint8)
    if row_white:
        templates[np.arange(n), lines, :] = 1
    else:
        templates[np.arange(n), :, lines] = 1
    flips = (rng.random((n, d, d)) < spec.flip_prob).astype(np.uint8)
    return templates ^ flips


def gen_binary_image(spec: BinaryImageSpec, n_per_class: int, seed: int) -> LabeledDataset:
    """``n_per_class`` row-white (label 0) and column-white (label 1) images."""
    if n_per_class < 1:
        raise DomainError("n_per_class must be at least 1")
    rng = make_rng(seed)
    rows = _sample_images(spec, n_per_class, True, rng)
    cols = _sample_images(spec, n_per_class, False, rng)
    d2 = spec.side * spec.side
    analytic = None
    if spec.side <= EXACT_MAX_SIDE:
        analytic = binary_image_analytic_kl(spec, "exact").value
    return LabeledDataset(
        features=np.vstack([rows.reshape(n_per_class, d2), cols.reshape(n_per_class, d2)]).astype(np.float64),
        labels=np.repeat([0, 1], n_per_class),
        class_count=2,
        analytic_divergence=analytic,
        name=f"binary_image_d{spec.side}",
    )


def _as_images(x: np.ndarray, side: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape == (side, side) or arr.shape == (side * side,):
        arr = arr.reshape(1, side, side)
    elif arr.ndim == 2 and arr.shape[1] == side * side:
        arr = arr.reshape(-1, side, side)
    elif not (arr.ndim == 3 and arr.shape[1:] == (side, side)):
        raise DomainError(f"cannot read shape {np.shape(x)} as {side}x{side} images")
    if not np.all((arr == 0) | (arr == 1)):
        raise DomainError("binary image entries must be 0 or 1")
    return arr


def _phi_from_counts(row_sums: np.ndarray, col_sums: np.ndarray, ln_lambda: float) -> np.ndarray:
    """Natural-log LLR from count vectors along the last axis."""
    return logsumexp(-2.0 * ln_lambda * row_sums, axis=-1) - logsumexp(
        -2.0 * ln_lambda * col_sums, axis=-1
    )


def binary_image_llr(x: np.ndarray, spec: BinaryImageSpec):
    """Exact ``log2 P_R(x) / P_C(x)`` for one image or a batch of images."""
    images = _as_images(x, spec.side)
    ln_lambda = math.log(spec.channel_ratio)
    phi = _phi_from_counts(images.sum(axis=2), images.sum(axis=1), ln_lambda) / LN2
    if np.ndim(x) == 1 or np.shape(x) == (spec.side, spec.side):
        return float(phi[0])
    return phi


def _count_grid(side: int) -> np.ndarray:
    """Every tuple in ``{0..side}^side`` as rows of a matrix."""
    return np.indices((side + 1,) * side).reshape(side, -1).T.astype(np.float64)


def _expected_log_sum(pmfs: list[np.ndarray], ln_lambda: float) -> float:
    """``E[log sum_i lambda^(-2 C_i)]`` for independent counts with given pmfs."""
    side = len(pmfs)
    grid = _count_grid(side)
    idx = grid.astype(np.int64)
    log_prob = np.zeros(grid.shape[0])
    for i, pmf in enumerate(pmfs):
        with np.errstate(divide="ignore"):
            log_prob += np.log(pmf[idx[:, i]])
    values = logsumexp(-2.0 * ln_lambda * grid, axis=1)
    return float(np.sum(np.exp(log_prob) * values))


def _column_pmf(side: int, p: float) -> np.ndarray:
    """Law of ``Bern(1-p) + Bin(side-1, p)`` on ``{0..side}``."""
    rest = binom.pmf(np.arange(side), side - 1, p)
    pmf = np.zeros(side + 1)
    pmf[:-1] += p * rest
    pmf[1:] += (1.0 - p) * rest
    return pmf


def _exact_kl(spec: BinaryImageSpec) -> float:
    d, p = spec.side, spec.flip_prob
    if d > EXACT_MAX_SIDE:
        raise ResourceError(
            f"exact enumeration needs (d+1)^d = {(d + 1) ** d} outcomes; limited to d <= {EXACT_MAX_SIDE}"
        )
    ln_lambda = math.log(spec.channel_ratio)
    counts = np.arange(d + 1)
    active = binom.pmf(counts, d, 1.0 - p)
    idle = binom.pmf(counts, d, p)
    e_row = _expected_log_sum([active] + [idle] * (d - 1), ln_lambda)
    e_col = _expected_log_sum([_column_pmf(d, p)] * d, ln_lambda)
    return (e_row - e_col) / LN2


def _mc_chunk(spec: BinaryImageSpec, n: int, seed: int) -> tuple[float, float]:
    rng = make_rng(seed)
    images = _sample_images(spec, n, True, rng).astype(np.float64)
    phi = _phi_from_counts(images.sum(axis=2), images.sum(axis=1), math.log(spec.channel_ratio)) / LN2
    return float(phi.sum()), float(np.square(phi).sum())


def _monte_carlo_kl(spec: BinaryImageSpec, n_samples: int, seed: int, workers: int) -> KLOracleResult:
    if n_samples < 2:
        raise DomainError("Monte Carlo oracle needs at least 2 samples")
    sizes = [MC_CHUNK] * (n_samples // MC_CHUNK)
    if n_samples % MC_CHUNK:
        sizes.append(n_samples % MC_CHUNK)
    # Chunk i always uses derive_seed(seed, i) regardless of worker count.
    jobs = [(size, derive_seed(seed, i)) for i, size in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _mc_chunk(spec, *job), jobs))
    else:
        parts = [_mc_chunk(spec, *job) for job in jobs]
    total = sum(s for s, _ in parts)
    total_sq = sum(q for _, q in parts)
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    return KLOracleResult(mean, math.sqrt(var / n_samples), "monte_carlo", n_samples)


def binary_image_analytic_kl(
    spec: BinaryImageSpec,
    method: Literal["exact", "monte_carlo"] = "exact",
    n_samples: int = 1_000_000,
    seed: int = 0,
    workers: int = 1,
) -> KLOracleResult:
    """``KL(P_R || P_C)`` in bits, by count-law enumeration or Monte Carlo."""
    if spec.flip_prob == 0.5:
        return KLOracleResult(0.0, 0.0, method, 0 if method == "exact" else n_samples)
    if method == "exact":
        return KLOracleResult(_exact_kl(spec), 0.0, "exact")
    if method == "monte_carlo":
        result = _monte_carlo_kl(spec, n_samples, seed, workers)
        logger.debug(
            "binary image MC oracle d=%d p=%g: %.4f +/- %.4f bits",
            spec.side,
            spec.flip_prob,
            result.value,
            result.standard_error,
        )
        return result
    raise DomainError(f"unknown oracle method {method!r}")


def _template_log_likelihood(images: np.ndarray, templates: np.ndarray, p: float) -> np.ndarray:
    """``log P(x | s)`` for every image/template pair."""
    n_pix = images.shape[1]
    hamming = (images[:, None, :] != templates[None, :, :]).sum(axis=2)
    return hamming * math.log(p) + (n_pix - hamming) * math.log(1.0 - p)


def binary_image_kl_bruteforce(spec: BinaryImageSpec) -> float:
    """``sum_x P_R(x) log2(P_R(x) / P_C(x))`` over all ``2^(d^2)`` images."""
    d = spec.side
    if d > BRUTE_FORCE_MAX_SIDE:
        raise ResourceError(f"2^{d * d} images is too many to enumerate")
    n_pix = d * d
    codes = np.arange(2**n_pix, dtype=np.int64)
    images = ((codes[:, None] >> np.arange(n_pix)) & 1).astype(np.int8)
    row_templates = np.zeros((d, d, d), dtype=np.int8)
    for r in range(d):
        row_templates[r, r, :] = 1
    col_templates = row_templates.transpose(0, 2, 1)
    log_r = logsumexp(
        _template_log_likelihood(images, row_templates.reshape(d, n_pix), spec.flip_prob), axis=1
    ) - math.log(d)
    log_c = logsumexp(
        _template_log_likelihood(images, col_templates.reshape(d, n_pix), spec.flip_prob), axis=1
    ) - math.log(d)
    return float(np.sum(np.exp(log_r) * (log_r - log_c)) / LN2)
