"""Pytest configuration and fixtures for evidence-plane tests."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from evidence_plane.datasets.base import LabeledDataset  # noqa: E402
from evidence_plane.datasets.gaussian import GaussianSpec, gen_gaussian_pair  # noqa: E402


class ChannelClassifier:
    """Stub classifier that reads the label from feature column 0.

    Samples whose column 1 is set are answered with the next class instead,
    so a dataset with a fraction ``p`` of flagged samples gives a classifier
    that is wrong with probability ``p`` independently of the label.
    """

    def __init__(self, class_count: int):
        self.class_count = class_count

    def predict(self, features):
        x = np.atleast_2d(features)
        label = x[:, 0].astype(np.int64)
        flipped = (label + 1) % self.class_count
        return np.where(x[:, 1] > 0.5, flipped, label)


def make_channel_dataset(p: float, n_per_class: int = 10_000, class_count: int = 2) -> LabeledDataset:
    """Exactly ``round(p * n_per_class)`` flagged samples per class."""
    n_wrong = int(round(p * n_per_class))
    labels = np.repeat(np.arange(class_count), n_per_class)
    flags = np.tile(np.r_[np.ones(n_wrong), np.zeros(n_per_class - n_wrong)], class_count)
    return LabeledDataset(
        features=np.column_stack([labels, flags]).astype(np.float64),
        labels=labels,
        class_count=class_count,
        name=f"channel_p{p}",
    )


@pytest.fixture
def channel_classifier():
    """Binary stub classifier for majority-vote tests."""
    return ChannelClassifier(2)


@pytest.fixture
def channel_dataset():
    """Factory for datasets the stub classifier gets wrong at a fixed rate."""
    return make_channel_dataset


@pytest.fixture
def gaussian_pair():
    """Small 4-D Gaussian pair, shift 1."""
    return gen_gaussian_pair(GaussianSpec(dimension=4, mean_shift=1.0, samples_per_class=500), seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def write_config(tmp_path):
    """Write a ``key = value`` config file and return its path."""

    def _write(text: str, name: str = "experiment.cfg") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
