"""Mini-batch training loop shared by the dense and spiking classifiers."""

from __future__ import annotations

import logging
from typing import Callable, Optional, Protocol, Sequence, TypeVar

import numpy as np

from ..datasets.base import LabeledDataset
from ..errors import EvaluationError, ShapeError
from ..models import TrainingConfig
from ..seeding import derive_seed, epoch_seed, make_rng
from .dense import DenseNetwork, loss_and_gradients
from .optim import AdamState, adam_step

logger = logging.getLogger(__name__)

NetT = TypeVar("NetT")

# (network, batch features, batch labels, batch seed) -> (loss, gradient list)
StepFn = Callable[[NetT, np.ndarray, np.ndarray, int], tuple[float, Sequence[np.ndarray]]]


class EpochHook(Protocol):
    def __call__(self, epoch: int, net, mean_loss: float) -> None: ...


def fit(
    net: NetT,
    dataset: LabeledDataset,
    cfg: TrainingConfig,
    step_fn: StepFn,
    epoch_hook: Optional[EpochHook] = None,
) -> NetT:
    """Run ``cfg.epochs`` shuffled passes of Adam over ``dataset``.

    Each epoch reshuffles with a seed derived from ``(cfg.seed, epoch)``; the
    hook is invoked after every completed epoch (1-based) with the current
    network.
    """
    n = dataset.size
    if n == 0:
        raise EvaluationError("cannot train on an empty dataset")
    state = AdamState.zeros_like(net)
    for epoch in range(1, cfg.epochs + 1):
        seed = epoch_seed(cfg.seed, epoch)
        order = make_rng(seed).permutation(n)
        losses = []
        for batch_index, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            loss, grads = step_fn(
                net,
                dataset.features[idx],
                dataset.labels[idx],
                derive_seed(seed, batch_index),
            )
            net, state = adam_step(net, grads, state, cfg)
            losses.append(loss * len(idx))
        mean_loss = float(np.sum(losses) / n)
        logger.debug("epoch %d: mean training loss %.6f", epoch, mean_loss)
        if epoch_hook is not None:
            epoch_hook(epoch, net, mean_loss)
    return net


def train(
    net: DenseNetwork,
    dataset: LabeledDataset,
    cfg: TrainingConfig,
    epoch_hook: Optional[EpochHook] = None,
) -> DenseNetwork:
    """Train a dense classifier with softmax cross-entropy and Adam."""
    if dataset.dimension != net.input_dim:
        raise ShapeError(
            f"dataset has {dataset.dimension} features, network expects {net.input_dim}"
        )

    def step(current: DenseNetwork, xb, yb, _seed):
        return loss_and_gradients(current, xb, yb)

    return fit(net, dataset, cfg, step, epoch_hook)
