"""Labeled dataset container shared by every generator and loader."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import EvaluationError, ShapeError
from ..seeding import make_rng


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix with integer labels.

    Attributes:
        features: ``(n x d)`` finite real matrix
        labels: ``n`` integers in ``[0, class_count)``
        class_count: Number of classes K
        analytic_divergence: Class-averaged input divergence in bits, when known
        name: Short identifier used in logs and summaries
    """

    features: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    class_count: int
    analytic_divergence: Optional[float] = None
    name: str = "dataset"

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels).astype(np.int64)
        if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
            raise ShapeError(f"features {x.shape} and labels {y.shape} do not align")
        if not np.all(np.isfinite(x)):
            raise ShapeError("features contain non-finite entries")
        if y.size and (y.min() < 0 or y.max() >= self.class_count):
            raise EvaluationError(f"labels outside [0, {self.class_count})")
        missing = sorted(set(range(self.class_count)) - set(np.unique(y).tolist()))
        if missing:
            raise EvaluationError(f"classes {missing} have no samples in {self.name}")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return int(self.labels.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.features.shape[1])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def class_groups(self) -> list[np.ndarray]:
        """Per-class feature matrices, indexed by class."""
        return [self.features[self.labels == c] for c in range(self.class_count)]

    def subset(self, index: np.ndarray, name: Optional[str] = None) -> "LabeledDataset":
        return replace(
            self,
            features=self.features[index],
            labels=self.labels[index],
            name=name or self.name,
        )

    def split(self, test_fraction: float, seed: int) -> tuple["LabeledDataset", "LabeledDataset"]:
        """Seeded stratified train/test split."""
        rng = make_rng(seed)
        train_idx = []
        test_idx = []
        for c in range(self.class_count):
            members = rng.permutation(np.flatnonzero(self.labels == c))
            n_test = int(round(test_fraction * members.size))
            n_test = min(max(n_test, 1), members.size - 1) if members.size > 1 else 0
            test_idx.append(members[:n_test])
            train_idx.append(members[n_test:])
        train = np.sort(np.concatenate(train_idx))
        test = np.sort(np.concatenate(test_idx))
        return (
            self.subset(train, f"{self.name}-train"),
            self.subset(test, f"{self.name}-test"),
        )

    def subsample_per_class(self, max_per_class: int, seed: int) -> "LabeledDataset":
        """Keep at most ``max_per_class`` samples of every class."""
        rng = make_rng(seed)
        keep = []
        for c in range(self.class_count):
            members = np.flatnonzero(self.labels == c)
            if members.size > max_per_class:
                members = np.sort(rng.choice(members, size=max_per_class, replace=False))
            keep.append(members)
        return self.subset(np.sort(np.concatenate(keep)))

    def to_csv(self, path: Path) -> Path:
        """Export with header ``label,f0,f1,...``."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["label", *(f"f{j}" for j in range(self.dimension))])
            for label, row in zip(self.labels, self.features):
                writer.writerow([int(label), *(repr(float(v)) for v in row)])
        return path
