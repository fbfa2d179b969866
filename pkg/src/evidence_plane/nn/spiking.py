"""Discrete-time leaky integrate-and-fire classifier.

Every layer ``l`` follows::

    U_l[t] = eta * U_l[t-1] + W_{l-1} S_{l-1}[t] - V_th * S_l[t-1]
    S_l[t] = 1 if U_l[t] >= V_th else 0

with ``U_l[0] = 0`` and ``S_l[0] = 0``; layers carry no bias. Inputs are Poisson
rate coded and the classification logits are the time-summed membrane
potentials of the output layer. Training uses backpropagation through time where the Heaviside
derivative is replaced by the arctan surrogate.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..datasets.base import LabeledDataset
from ..errors import DomainError, EncodingError, ResourceError, ShapeError, TraceError
from ..models import SNNConfig
from ..seeding import make_rng
from .dense import DenseNetwork, cross_entropy_loss, init_network
from .training import EpochHook, fit

logger = logging.getLogger(__name__)

MAX_ENUMERATION_STEPS = 10


@dataclass(frozen=True)
class SpikeTrainBatch:
    """Binary spikes of shape ``(batch, features, time_steps)``."""

    spikes: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.spikes)
        if s.ndim != 3:
            raise ShapeError(f"spike trains must be (batch, features, time), got {s.shape}")
        if not np.all((s == 0) | (s == 1)):
            raise EncodingError("spike trains must be binary")
        object.__setattr__(self, "spikes", s.astype(np.uint8))

    @property
    def time_steps(self) -> int:
        return int(self.spikes.shape[2])

    @property
    def feature_dim(self) -> int:
        return int(self.spikes.shape[1])

    def time_major(self) -> np.ndarray:
        """``(time, batch, features)`` float view used by the dynamics."""
        return np.transpose(self.spikes, (2, 0, 1)).astype(np.float64)


@dataclass
class LIFTrace:
    """Membrane potentials and spikes of every layer at ``t = 1..tau``.

    ``potentials[l]`` and ``spikes[l]`` have shape ``(tau, batch, width_l)``;
    ``inputs`` holds the encoded input spikes in the same time-major layout.
    """

    layer_dims: tuple[int, ...]
    inputs: np.ndarray
    potentials: list[np.ndarray]
    spikes: list[np.ndarray]
    relaxed: bool = False

    @property
    def output(self) -> np.ndarray:
        """Time-summed output potentials, used as logits and representation."""
        return self.potentials[-1].sum(axis=0)


@dataclass(frozen=True)
class SpikingNetwork:
    """LIF classifier weights plus the dynamics they are run with."""

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray] = field(repr=False)
    config: SNNConfig = field(default_factory=SNNConfig)

    def __post_init__(self):
        # Reuse the dense shape validation.
        DenseNetwork(self.layer_dims, self.weights, [np.zeros(d) for d in self.layer_dims[1:]])

    @property
    def class_count(self) -> int:
        return self.layer_dims[-1]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def parameters(self) -> list[np.ndarray]:
        return list(self.weights)

    def with_parameters(self, params: Sequence[np.ndarray]) -> "SpikingNetwork":
        return SpikingNetwork(
            layer_dims=self.layer_dims,
            weights=[np.array(p, dtype=np.float64) for p in params],
            config=self.config,
        )

    def logits(self, features: np.ndarray, seed: Optional[int] = None) -> np.ndarray:
        spikes = rate_encode(
            features,
            self.config.time_steps,
            self.config.encode_seed if seed is None else seed,
        )
        return lif_forward(self, spikes, self.config).output

    def predict(self, features: np.ndarray, seed: Optional[int] = None) -> np.ndarray:
        return np.argmax(self.logits(features, seed), axis=1)

    def represent(self, features: np.ndarray, seed: Optional[int] = None) -> np.ndarray:
        """Projected time-summed output potentials.

        Inputs are clipped to ``[0, 1]`` first so noise-perturbed features can
        still be rate coded. ``seed`` selects the spike encoding; callers that
        compare groups of samples pass a different seed per group.
        """
        from ..divergence import project_logits

        return project_logits(self.logits(np.clip(features, 0.0, 1.0), seed))


def init_spiking_network(layer_dims: Sequence[int], cfg: SNNConfig, seed: int) -> SpikingNetwork:
    dense = init_network(layer_dims, seed)
    return SpikingNetwork(dense.layer_dims, dense.weights, cfg)


def rate_encode(batch: np.ndarray, time_steps: int, seed: int) -> SpikeTrainBatch:
    """Independent ``Bernoulli(x_i)`` spikes at every time step."""
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if time_steps < 1:
        raise DomainError("time_steps must be at least 1")
    if x.size and (np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x))):
        raise EncodingError("rate coding needs features in [0, 1]")
    rng = make_rng(seed)
    draws = rng.random((x.shape[0], x.shape[1], time_steps))
    return SpikeTrainBatch((draws < x[:, :, None]).astype(np.uint8))


def surrogate_grad(u, slope: float = math.pi, threshold: float = 1.0):
    """Derivative of ``1/2 + arctan(slope * (u - V_th)) / pi``.

    Equals ``1 / (1 + pi^2 (u - V_th)^2)`` at the default slope.
    """
    x = slope * (np.asarray(u, dtype=np.float64) - threshold)
    g = (slope / math.pi) / (1.0 + x * x)
    return float(g) if np.ndim(g) == 0 else g


def relaxed_spike(u, slope: float = math.pi, threshold: float = 1.0):
    """Smooth spike function whose derivative is :func:`surrogate_grad`."""
    return 0.5 + np.arctan(slope * (np.asarray(u, dtype=np.float64) - threshold)) / math.pi


def lif_forward(net, spikes: SpikeTrainBatch, cfg: SNNConfig, relaxed: bool = False) -> LIFTrace:
    """Run the LIF recurrence for ``cfg.time_steps`` steps.

    ``net`` is anything exposing ``layer_dims`` and ``weights``.
    With ``relaxed=True`` the Heaviside is replaced by :func:`relaxed_spike`,
    which makes :func:`lif_backward` the exact gradient.
    """
    if spikes.feature_dim != net.layer_dims[0]:
        raise ShapeError(
            f"spike trains carry {spikes.feature_dim} features, network expects {net.layer_dims[0]}"
        )
    s_in = spikes.time_major()
    tau, batch, _ = s_in.shape
    eta, v_th = cfg.leak, cfg.threshold
    potentials = [np.zeros((tau, batch, w.shape[0])) for w in net.weights]
    emitted = [np.zeros((tau, batch, w.shape[0])) for w in net.weights]
    for t in range(tau):
        below = s_in[t]
        for l, w in enumerate(net.weights):
            u_prev = potentials[l][t - 1] if t > 0 else 0.0
            s_prev = emitted[l][t - 1] if t > 0 else 0.0
            u = eta * u_prev + below @ w.T - v_th * s_prev
            if relaxed:
                s = relaxed_spike(u, cfg.surrogate_slope, v_th)
            else:
                s = (u >= v_th).astype(np.float64)
            potentials[l][t] = u
            emitted[l][t] = s
            below = s
    return LIFTrace(
        layer_dims=tuple(net.layer_dims),
        inputs=s_in,
        potentials=potentials,
        spikes=emitted,
        relaxed=relaxed,
    )


def lif_backward(net, trace: LIFTrace, dlogits: np.ndarray, cfg: SNNConfig) -> list[np.ndarray]:
    """Weight gradients from backpropagation through time with the surrogate derivative."""
    n_layers = len(net.weights)
    tau = trace.inputs.shape[0]
    if (
        tuple(net.layer_dims) != trace.layer_dims
        or len(trace.potentials) != n_layers
        or dlogits.shape != trace.output.shape
    ):
        raise TraceError("LIF trace does not match the network or dlogits")
    eta, v_th, slope = cfg.leak, cfg.threshold, cfg.surrogate_slope
    grad_w = [np.zeros_like(w) for w in net.weights]
    # Gradient with respect to U_l[t+1], carried backwards in time.
    carry = [np.zeros_like(p[0]) for p in trace.potentials]
    for t in range(tau - 1, -1, -1):
        current: list[np.ndarray] = [np.empty(0)] * n_layers
        for l in range(n_layers - 1, -1, -1):
            d_spike = -v_th * carry[l]
            if l < n_layers - 1:
                d_spike = d_spike + current[l + 1] @ net.weights[l + 1]
            d_pot = eta * carry[l] + surrogate_grad(trace.potentials[l][t], slope, v_th) * d_spike
            if l == n_layers - 1:
                d_pot = d_pot + dlogits
            current[l] = d_pot
            below = trace.inputs[t] if l == 0 else trace.spikes[l - 1][t]
            grad_w[l] += d_pot.T @ below
        carry = current
    return grad_w


def snn_loss_and_gradients(
    net: SpikingNetwork,
    features: np.ndarray,
    labels: np.ndarray,
    seed: int,
    relaxed: bool = False,
) -> tuple[float, list[np.ndarray]]:
    spikes = rate_encode(features, net.config.time_steps, seed)
    trace = lif_forward(net, spikes, net.config, relaxed=relaxed)
    loss, dlogits = cross_entropy_loss(trace.output, labels)
    return loss, lif_backward(net, trace, dlogits, net.config)


def snn_train(
    net: SpikingNetwork,
    dataset: LabeledDataset,
    cfg: Optional[SNNConfig] = None,
    epoch_hook: Optional[EpochHook] = None,
) -> SpikingNetwork:
    """Surrogate-gradient training; each mini-batch gets a fresh spike encoding."""
    if cfg is not None and cfg != net.config:
        net = SpikingNetwork(net.layer_dims, net.weights, cfg)
    if dataset.dimension != net.input_dim:
        raise ShapeError(
            f"dataset has {dataset.dimension} features, network expects {net.input_dim}"
        )
    return fit(net, dataset, net.config.training, snn_loss_and_gradients, epoch_hook)


def membrane_support_bound(time_steps: int) -> int:
    """Upper bound ``(4^(tau+1) - 4) / 3`` on distinct potentials over ``t = 1..tau``."""
    if time_steps < 1:
        raise DomainError("time_steps must be at least 1")
    return (4 ** (time_steps + 1) - 4) // 3


def enumerate_reachable_potentials(
    weight: float, threshold: float, leak: float, time_steps: int
) -> set[float]:
    """Every potential a single LIF neuron reaches over all binary input histories.

    The neuron's own spikes follow the dynamics; values are rounded to 12
    decimals so equal sums reached along different histories coincide.
    """
    if time_steps < 1:
        raise DomainError("time_steps must be at least 1")
    if time_steps > MAX_ENUMERATION_STEPS:
        raise ResourceError(
            f"2^{time_steps} input histories exceeds the enumeration limit of tau <= {MAX_ENUMERATION_STEPS}"
        )
    if not 0.0 <= leak <= 1.0:
        raise DomainError("leak must lie in [0, 1]")
    reached: set[float] = set()
    for history in itertools.product((0, 1), repeat=time_steps):
        u = 0.0
        fired = False
        for s_in in history:
            u = leak * u + weight * s_in - (threshold if fired else 0.0)
            fired = u >= threshold
            reached.add(round(u, 12))
    return reached
