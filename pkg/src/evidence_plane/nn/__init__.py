"""Dense and spiking classifiers trained with Adam."""

from .dense import (
    DenseNetwork,
    ForwardTrace,
    Gradients,
    backward,
    cross_entropy_loss,
    forward,
    init_network,
    softmax,
)
from .optim import AdamState, adam_step
from .spiking import (
    LIFTrace,
    SpikeTrainBatch,
    SpikingNetwork,
    enumerate_reachable_potentials,
    init_spiking_network,
    lif_backward,
    lif_forward,
    membrane_support_bound,
    rate_encode,
    snn_train,
    surrogate_grad,
)
from .training import fit, train

__all__ = [
    "AdamState",
    "DenseNetwork",
    "ForwardTrace",
    "Gradients",
    "LIFTrace",
    "SpikeTrainBatch",
    "SpikingNetwork",
    "adam_step",
    "backward",
    "cross_entropy_loss",
    "enumerate_reachable_potentials",
    "fit",
    "forward",
    "init_network",
    "init_spiking_network",
    "lif_backward",
    "lif_forward",
    "membrane_support_bound",
    "rate_encode",
    "snn_train",
    "softmax",
    "surrogate_grad",
    "train",
]
