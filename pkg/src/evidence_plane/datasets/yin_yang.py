"""Yin-Yang three-class dataset (yin = 0, yang = 1, dot = 2).

Points are drawn uniformly from the disk of radius ``big_radius`` centred at
``(big_radius, big_radius)``. The yin/yang boundary is the classic curve made
of two half-disks of radius ``big_radius / 2`` and the dots are disks of
radius ``dot_radius`` around the two half-disk centres. Features are
``(x, y, 1 - x, 1 - y)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, GenerationError
from ..seeding import make_rng
from .base import LabeledDataset

logger = logging.getLogger(__name__)

YIN, YANG, DOT = 0, 1, 2
DRAW_BATCH = 4096


@dataclass(frozen=True)
class YinYangSpec:
    big_radius: float = 0.5
    dot_radius: float = 0.125
    samples_per_class: int = 1000
    seed: int = 0
    max_draws_per_sample: int = 1000

    def __post_init__(self):
        if not 0 < self.dot_radius < self.big_radius:
            raise DomainError("dot_radius must be positive and smaller than big_radius")
        if self.samples_per_class < 1:
            raise DomainError("samples_per_class must be at least 1")

    @property
    def center(self) -> tuple[float, float]:
        return (self.big_radius, self.big_radius)


def yin_yang_class(x: np.ndarray, y: np.ndarray, spec: YinYangSpec) -> np.ndarray:
    """Class of points inside the big disk."""
    r_big, r_small = spec.big_radius, spec.dot_radius
    d_right = np.hypot(x - 1.5 * r_big, y - r_big)
    d_left = np.hypot(x - 0.5 * r_big, y - r_big)
    is_yin = (
        (d_right <= r_small)
        | ((d_left > r_small) & (d_left <= 0.5 * r_big))
        | ((y > r_big) & (d_right > 0.5 * r_big))
    )
    is_dot = (d_right < r_small) | (d_left < r_small)
    return np.where(is_dot, DOT, np.where(is_yin, YIN, YANG))


def gen_yin_yang(spec: YinYangSpec, seed: int | None = None) -> LabeledDataset:
    """Rejection-sample ``samples_per_class`` points of each class."""
    rng = make_rng(spec.seed if seed is None else seed)
    quota = spec.samples_per_class
    collected: list[list[np.ndarray]] = [[], [], []]
    counts = np.zeros(3, dtype=np.int64)
    budget = spec.max_draws_per_sample * quota * 3
    drawn = 0
    cx, cy = spec.center
    while counts.min() < quota:
        if drawn >= budget:
            raise GenerationError(
                f"rejection budget of {budget} draws exhausted with class counts {counts.tolist()}"
            )
        pts = rng.uniform(0.0, 2.0 * spec.big_radius, size=(DRAW_BATCH, 2))
        drawn += DRAW_BATCH
        inside = np.hypot(pts[:, 0] - cx, pts[:, 1] - cy) <= spec.big_radius
        pts = pts[inside]
        classes = yin_yang_class(pts[:, 0], pts[:, 1], spec)
        for c in (YIN, YANG, DOT):
            need = quota - counts[c]
            if need <= 0:
                continue
            take = pts[classes == c][:need]
            collected[c].append(take)
            counts[c] += take.shape[0]
    logger.debug("yin-yang: %d draws for %d samples per class", drawn, quota)
    xy = np.vstack([np.vstack(parts) for parts in collected])
    features = np.column_stack([xy, 1.0 - xy])
    return LabeledDataset(
        features=features,
        labels=np.repeat([YIN, YANG, DOT], quota),
        class_count=3,
        name="yin_yang",
    )
