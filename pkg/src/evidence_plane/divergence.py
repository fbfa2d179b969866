"""kNN estimation of class-conditional KL divergences.

The estimator is the k-th nearest-neighbour distance-ratio form::

    D(P || Q) = (dim / n) * sum_i ln(nu_k(x_i) / rho_k(x_i)) + ln(m / (n - 1))

where ``rho_k`` is the distance from ``x_i`` to its k-th neighbour among the
other ``P`` samples and ``nu_k`` its distance to the k-th neighbour among the
``m`` samples of ``Q``. Computation is in nats, results are reported in bits.

``dim`` is the dimension of the affine span of the samples, which is smaller
than the feature count when the features are linearly dependent (Yin-Yang
features are ``(x, y, 1 - x, 1 - y)``).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import KDTree
from scipy.spatial.distance import cdist

from .datasets.base import LabeledDataset
from .datasets.binary_image import (
    EXACT_MAX_SIDE,
    BinaryImageSpec,
    binary_image_analytic_kl,
    gen_binary_image,
)
from .errors import ConfigurationError, SampleSizeError, ShapeError
from .models import KnnEstimatorConfig
from .seeding import derive_seed, make_rng

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
DISTANCE_FLOOR = 1e-300
BRUTE_FORCE_LIMIT = 20_000
BRUTE_FORCE_CHUNK = 1024
SUPPORT_RANK_RTOL = 1e-6
# derive_seed stream offsets; input noise uses the bare class index.
ENCODE_STREAM = 0x1000
JITTER_STREAM = 0x2000

Representation = Callable[..., np.ndarray]


@dataclass(frozen=True)
class DivergenceEstimate:
    """KL estimate in bits and the configuration that produced it."""

    value: float
    k_used: int
    n_p: int
    n_q: int
    dimension: int


@dataclass(frozen=True)
class ConditionalDivergence:
    """Class-averaged divergence ``(1/K) sum_c D(rep_c || rep_not_c)`` in bits."""

    average: float
    per_class: list[float]
    k_used: int
    dimension: int


# ---------------------------------------------------------------------------
# Nearest-neighbour distances
# ---------------------------------------------------------------------------


def _knn_distances(query: np.ndarray, reference: np.ndarray, kmax: int, exclude_self: bool) -> np.ndarray:
    """Sorted distances to the ``kmax`` nearest reference points, ``(n_query, kmax)``.

    With ``exclude_self`` the query set is the reference set and each point's
    own entry is skipped. References below ``BRUTE_FORCE_LIMIT`` points are
    searched exhaustively, larger ones through a k-d tree.
    """
    if reference.shape[0] < BRUTE_FORCE_LIMIT:
        out = np.empty((query.shape[0], kmax))
        for start in range(0, query.shape[0], BRUTE_FORCE_CHUNK):
            block = cdist(query[start : start + BRUTE_FORCE_CHUNK], reference)
            if exclude_self:
                rows = np.arange(block.shape[0])
                block[rows, rows + start] = np.inf
            part = np.partition(block, kmax - 1, axis=1)[:, :kmax]
            out[start : start + block.shape[0]] = np.sort(part, axis=1)
        return out
    tree = KDTree(reference)
    if exclude_self:
        dist, _ = tree.query(query, k=np.arange(1, kmax + 2))
        # The self match sits at distance 0 and is always among the first hits.
        return dist[:, 1:]
    dist, _ = tree.query(query, k=np.arange(1, kmax + 1))
    return dist


def _check_pair(samples_p: np.ndarray, samples_q: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(samples_p, dtype=np.float64)
    q = np.asarray(samples_q, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    if q.ndim == 1:
        q = q[:, None]
    if p.ndim != 2 or q.ndim != 2 or p.shape[1] != q.shape[1]:
        raise ShapeError(f"sample sets must share a dimension, got {p.shape} and {q.shape}")
    if k < 1:
        raise SampleSizeError("k must be at least 1")
    if p.shape[0] <= k or q.shape[0] < k:
        raise SampleSizeError(
            f"k={k} needs more than k samples from P and at least k from Q, "
            f"got n_p={p.shape[0]} and n_q={q.shape[0]}"
        )
    return p, q


def _knn_kl_nats(
    p: np.ndarray, q: np.ndarray, ks: Sequence[int], dimension: Optional[int] = None
) -> dict[int, float]:
    """Estimates for several ``k`` from one pair of neighbour searches."""
    kmax = max(ks)
    rho = np.log(np.maximum(_knn_distances(p, p, kmax, exclude_self=True), DISTANCE_FLOOR))
    nu = np.log(np.maximum(_knn_distances(p, q, kmax, exclude_self=False), DISTANCE_FLOOR))
    n = p.shape[0]
    dim = p.shape[1] if dimension is None else dimension
    m = q.shape[0]
    offset = math.log(m / (n - 1))
    return {k: float(dim * np.mean(nu[:, k - 1] - rho[:, k - 1]) + offset) for k in ks}


def knn_kl(
    samples_p: np.ndarray, samples_q: np.ndarray, k: int, dimension: Optional[int] = None
) -> DivergenceEstimate:
    """kNN estimate of ``KL(P || Q)`` in bits.

    ``dimension`` overrides the feature count in the estimator when the samples
    lie on a lower-dimensional affine subspace; see :func:`support_dimension`.
    """
    p, q = _check_pair(samples_p, samples_q, k)
    dim = _check_dimension(dimension, p.shape[1])
    nats = _knn_kl_nats(p, q, [k], dim)[k]
    return DivergenceEstimate(
        value=nats / LN2,
        k_used=k,
        n_p=p.shape[0],
        n_q=q.shape[0],
        dimension=dim,
    )


def _check_dimension(dimension: Optional[int], features: int) -> int:
    if dimension is None:
        return features
    if not 1 <= dimension <= features:
        raise ShapeError(f"dimension must lie in [1, {features}], got {dimension}")
    return int(dimension)


def support_dimension(samples: np.ndarray, rtol: float = SUPPORT_RANK_RTOL) -> int:
    """Dimension of the affine span of ``samples``, at least 1.

    Directions whose spread is below ``rtol`` times the largest one are
    treated as constant.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    centered = x - x.mean(axis=0)
    # Singular values from the Gram matrix keep the cost at features^2.
    spread = np.sqrt(np.clip(np.linalg.eigvalsh(centered.T @ centered), 0.0, None))
    if spread.size == 0 or spread[-1] == 0.0:
        return 1
    return max(1, int(np.count_nonzero(spread > rtol * spread[-1])))


# ---------------------------------------------------------------------------
# Null-consistency k selection
# ---------------------------------------------------------------------------


def null_splits(n: int, cfg: KnnEstimatorConfig) -> list[tuple[np.ndarray, np.ndarray]]:
    """The ``S`` random disjoint half-splits used by the null-bias evaluation."""
    rng = make_rng(cfg.seed)
    half = n // 2
    splits = []
    for _ in range(cfg.null_splits):
        order = rng.permutation(n)
        splits.append((order[:half], order[half:]))
    return splits


def null_consistency_biases(
    samples: np.ndarray, cfg: KnnEstimatorConfig, dimension: Optional[int] = None
) -> dict[int, float]:
    """Average self-divergence ``b_k`` (bits) for every candidate ``k``."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    ks = sorted(set(cfg.candidate_ks))
    if not ks:
        raise ConfigurationError("candidate_ks is empty")
    if 2 * (ks[-1] + 1) > x.shape[0]:
        raise ConfigurationError(
            f"candidate k={ks[-1]} needs at least {2 * (ks[-1] + 1)} samples, got {x.shape[0]}"
        )
    totals = dict.fromkeys(ks, 0.0)
    for first, second in null_splits(x.shape[0], cfg):
        for k, value in _knn_kl_nats(x[first], x[second], ks, dimension).items():
            totals[k] += value
    return {k: total / cfg.null_splits / LN2 for k, total in totals.items()}


def select_k_null_consistency(
    samples: np.ndarray, cfg: KnnEstimatorConfig, dimension: Optional[int] = None
) -> int:
    """The candidate ``k`` with the smallest absolute null bias (ties: smaller k)."""
    biases = null_consistency_biases(samples, cfg, dimension)
    best_k = None
    for k in sorted(biases):
        if best_k is None or abs(biases[k]) < abs(biases[best_k]):
            best_k = k
    logger.debug("null-consistency biases %s -> k=%d", biases, best_k)
    return int(best_k)


# ---------------------------------------------------------------------------
# Representations
# ---------------------------------------------------------------------------


def inject_noise(samples: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """Add i.i.d. ``N(0, sigma^2)`` noise; ``sigma = 0`` returns an exact copy."""
    if sigma < 0:
        raise ConfigurationError("noise sigma must be non-negative")
    x = np.asarray(samples, dtype=np.float64)
    if sigma == 0:
        return x.copy()
    return x + make_rng(seed).normal(0.0, sigma, size=x.shape)


def project_logits(logits: np.ndarray) -> np.ndarray:
    """``u_i = Z_i - Z_K`` for ``i < K``: shift-invariant and sufficient for softmax."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2 or z.shape[1] < 2:
        raise ShapeError(f"projection needs an (n x K) matrix with K >= 2, got {z.shape}")
    return z[:, :-1] - z[:, -1:]


@dataclass(frozen=True)
class ClassConditionalBundle:
    """Per-class inputs and the map that turns them into representations.

    ``representation = None`` is the identity model, in which case the
    divergences are the input divergences. A ``discrete`` representation
    takes finitely many values and draws its own randomness: it is called as
    ``representation(x, seed)`` with a separate seed per class, and its
    outputs receive the same ``sigma`` noise as the inputs so that tied
    values become distinct.
    """

    groups: list[np.ndarray]
    representation: Optional[Representation] = None
    name: str = "bundle"
    discrete: bool = False

    def __post_init__(self):
        if len(self.groups) < 2:
            raise ShapeError("a bundle needs at least two classes")
        dims = {np.asarray(g).reshape(len(g), -1).shape[1] for g in self.groups}
        if len(dims) != 1:
            raise ShapeError(f"class groups disagree on dimension: {sorted(dims)}")
        for c, g in enumerate(self.groups):
            if len(g) == 0:
                raise SampleSizeError(f"class {c} has no samples")

    @classmethod
    def from_dataset(
        cls,
        dataset: LabeledDataset,
        representation: Optional[Representation] = None,
        max_per_class: Optional[int] = None,
        seed: int = 0,
        discrete: bool = False,
    ) -> "ClassConditionalBundle":
        if max_per_class is not None:
            dataset = dataset.subsample_per_class(max_per_class, seed)
        return cls(dataset.class_groups(), representation, dataset.name, discrete)

    @property
    def class_count(self) -> int:
        return len(self.groups)

    def representations(self, sigma: float, seed: int) -> list[np.ndarray]:
        """Noise is added to the inputs before the model map."""
        reps = []
        for c, group in enumerate(self.groups):
            noisy = inject_noise(group, sigma, derive_seed(seed, c))
            if self.representation is None:
                rep = noisy
            elif self.discrete:
                rep = self.representation(noisy, derive_seed(seed, ENCODE_STREAM + c))
                rep = inject_noise(rep, sigma, derive_seed(seed, JITTER_STREAM + c))
            else:
                rep = self.representation(noisy)
            reps.append(np.asarray(rep, dtype=np.float64).reshape(len(group), -1))
        return reps


def class_conditional_divergence(
    bundle: ClassConditionalBundle,
    cfg: KnnEstimatorConfig,
    noise_seed: Optional[int] = None,
) -> ConditionalDivergence:
    """``(1/K) sum_c D(rep_c || rep_not_c)`` with complements pooled over other classes.

    Noise draws use ``noise_seed`` when given, otherwise ``cfg.seed``. The
    estimator dimension is the affine dimension of the noise-free
    representations, shared by every class and by the k selection.
    """
    seed = cfg.seed if noise_seed is None else noise_seed
    reps = bundle.representations(cfg.noise_sigma, seed)
    dim = support_dimension(np.vstack(bundle.representations(0.0, seed)))
    if cfg.k == "auto":
        k = select_k_null_consistency(np.vstack(reps), cfg, dim)
    else:
        k = int(cfg.k)
    for c, rep in enumerate(reps):
        if rep.shape[0] <= k:
            raise SampleSizeError(f"class {c} has {rep.shape[0]} samples, needs more than k={k}")

    def estimate(c: int) -> float:
        rest = np.vstack([r for j, r in enumerate(reps) if j != c])
        return knn_kl(reps[c], rest, k, dim).value

    classes = range(len(reps))
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            per_class = list(pool.map(estimate, classes))
    else:
        per_class = [estimate(c) for c in classes]
    average = float(np.mean(per_class))
    logger.debug(
        "%s: D=%.4f bits (k=%d, dim=%d, per class %s)", bundle.name, average, k, dim, per_class
    )
    return ConditionalDivergence(average=average, per_class=per_class, k_used=k, dimension=dim)


def noise_sweep(
    bundle: ClassConditionalBundle,
    sigmas: Sequence[float],
    cfg: KnnEstimatorConfig,
    noise_seed: Optional[int] = None,
) -> list[tuple[float, float]]:
    """``(sigma, D_sigma)`` pairs for plotting the noise stability curve."""
    if len(sigmas) == 0:
        raise ConfigurationError("noise sweep needs at least one sigma")
    rows = []
    for sigma in sigmas:
        result = class_conditional_divergence(
            bundle, cfg.model_copy(update={"noise_sigma": float(sigma)}), noise_seed
        )
        rows.append((float(sigma), result.average))
    return rows


# ---------------------------------------------------------------------------
# Binary image dimension sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    side: int
    analytic_bits: float
    analytic_se: float
    knn_bits: float


def binary_image_kl_sweep(
    sides: Sequence[int],
    flip_prob: float,
    n_per_class: int,
    cfg: KnnEstimatorConfig,
    seed: int = 0,
    mc_samples: int = 200_000,
) -> list[SweepRow]:
    """Analytic divergence against the kNN estimate for a range of image sides."""
    rows = []
    for side in sides:
        spec = BinaryImageSpec(side=side, flip_prob=flip_prob)
        if side <= EXACT_MAX_SIDE:
            oracle = binary_image_analytic_kl(spec, "exact")
        else:
            oracle = binary_image_analytic_kl(
                spec, "monte_carlo", n_samples=mc_samples, seed=derive_seed(seed, side)
            )
        data = gen_binary_image(spec, n_per_class, derive_seed(seed, 0x100 + side))
        bundle = ClassConditionalBundle.from_dataset(data)
        groups = bundle.representations(cfg.noise_sigma, cfg.seed)
        dim = support_dimension(np.vstack(bundle.groups))
        k = select_k_null_consistency(np.vstack(groups), cfg, dim) if cfg.k == "auto" else int(cfg.k)
        estimate = knn_kl(groups[0], groups[1], k, dim).value
        logger.info(
            "binary image d=%d: analytic %.3f bits, kNN %.3f bits (k=%d)",
            side,
            oracle.value,
            estimate,
            k,
        )
        rows.append(SweepRow(side, oracle.value, oracle.standard_error, estimate))
    return rows
