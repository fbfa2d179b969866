"""Dense feed-forward classifier with exact backpropagation.

The network maps ``R^d -> R^K`` through ReLU hidden layers and a linear
logits layer. Weights are stored ``(out x in)`` so a batch ``X`` of shape
``(n x in)`` propagates as ``X @ W.T + b``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ArchitectureError, LabelError, ShapeError, TraceError
from ..seeding import make_rng


@dataclass(frozen=True)
class DenseNetwork:
    """Layer weights and architecture metadata.

    Attributes:
        layer_dims: Input dimension, hidden widths, number of classes K
        weights: One ``(layer_dims[l+1] x layer_dims[l])`` matrix per layer
        biases: One ``layer_dims[l+1]`` vector per layer
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)

    def __post_init__(self):
        _validate_dims(self.layer_dims)
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(
            self.weights
        ):
            raise ArchitectureError("one weight matrix and bias vector per layer")
        for index, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (self.layer_dims[index + 1], self.layer_dims[index])
            if w.shape != expected or b.shape != (expected[0],):
                raise ShapeError(
                    f"layer {index}: expected weight {expected} and bias "
                    f"({expected[0]},), got {w.shape} and {b.shape}"
                )

    @property
    def class_count(self) -> int:
        return self.layer_dims[-1]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def parameters(self) -> list[np.ndarray]:
        """Parameters in optimizer order ``[W0, b0, W1, b1, ...]``."""
        params: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> "DenseNetwork":
        return DenseNetwork(
            layer_dims=self.layer_dims,
            weights=[np.array(p, dtype=np.float64) for p in params[0::2]],
            biases=[np.array(p, dtype=np.float64) for p in params[1::2]],
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.parameters())

    def logits(self, features: np.ndarray) -> np.ndarray:
        return forward(self, features).logits

    def predict(self, features: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(features), axis=1)

    def represent(self, features: np.ndarray) -> np.ndarray:
        """Shift-invariant ``K-1`` dimensional view of the logits."""
        from ..divergence import project_logits

        return project_logits(self.logits(features))


@dataclass
class ForwardTrace:
    """Everything ``backward`` needs from one forward pass.

    ``activations[0]`` is the input batch, ``activations[l]`` the ReLU output
    of hidden layer ``l``. ``pre_activations`` holds every layer's affine
    output, the last one being the logits.
    """

    layer_dims: tuple[int, ...]
    activations: list[np.ndarray]
    pre_activations: list[np.ndarray]

    @property
    def logits(self) -> np.ndarray:
        return self.pre_activations[-1]


@dataclass
class Gradients:
    """Gradients mirroring a network's parameters."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def as_list(self) -> list[np.ndarray]:
        grads: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            grads.extend((w, b))
        return grads


def _validate_dims(layer_dims: Sequence[int]) -> None:
    if len(layer_dims) < 2:
        raise ArchitectureError(
            f"need at least input and output dimensions, got {list(layer_dims)}"
        )
    if any(int(d) != d or d < 1 for d in layer_dims):
        raise ArchitectureError(f"dimensions must be positive integers: {list(layer_dims)}")


def init_network(layer_dims: Sequence[int], seed: int) -> DenseNetwork:
    """He-uniform weights (bound ``sqrt(6 / fan_in)``) and zero biases."""
    _validate_dims(layer_dims)
    dims = tuple(int(d) for d in layer_dims)
    rng = make_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return DenseNetwork(layer_dims=dims, weights=weights, biases=biases)


def _as_batch(batch: np.ndarray, input_dim: int) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != input_dim:
        raise ShapeError(f"expected batch with {input_dim} columns, got shape {x.shape}")
    return x


def forward(net: DenseNetwork, batch: np.ndarray) -> ForwardTrace:
    """Propagate a batch and keep the intermediate values."""
    h = _as_batch(batch, net.input_dim)
    activations = [h]
    pre_activations = []
    last = len(net.weights) - 1
    for index, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w.T + b
        pre_activations.append(z)
        if index < last:
            h = np.maximum(z, 0.0)
            activations.append(h)
    return ForwardTrace(
        layer_dims=net.layer_dims,
        activations=activations,
        pre_activations=pre_activations,
    )


def check_labels(labels: np.ndarray, class_count: int, n: int | None = None) -> np.ndarray:
    y = np.asarray(labels)
    if y.ndim != 1 or (n is not None and y.shape[0] != n):
        raise ShapeError(f"labels must be a vector of length {n}, got shape {y.shape}")
    if y.size and (not np.issubdtype(y.dtype, np.integer)):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise LabelError("labels must be integers")
        y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= class_count):
        raise LabelError(
            f"labels must lie in [0, {class_count}), got range [{y.min()}, {y.max()}]"
        )
    return y.astype(np.int64)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def cross_entropy_loss(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient with respect to the logits."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ShapeError(f"logits must be a matrix, got shape {z.shape}")
    n, k = z.shape
    y = check_labels(labels, k, n)
    shifted = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(log_norm - shifted[rows, y]))
    probs = np.exp(shifted - log_norm[:, None])
    probs[rows, y] -= 1.0
    return loss, probs / n


def backward(net: DenseNetwork, trace: ForwardTrace, dlogits: np.ndarray) -> Gradients:
    """Backpropagate ``dlogits`` through a trace of ``net``."""
    delta = np.asarray(dlogits, dtype=np.float64)
    if (
        trace.layer_dims != net.layer_dims
        or len(trace.pre_activations) != len(net.weights)
        or delta.shape != trace.logits.shape
    ):
        raise TraceError(
            f"trace of {trace.layer_dims} with logits {trace.logits.shape} does not "
            f"match network {net.layer_dims} and dlogits {delta.shape}"
        )
    grad_w: list[np.ndarray] = [np.empty(0)] * len(net.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(net.weights)
    for index in range(len(net.weights) - 1, -1, -1):
        grad_w[index] = delta.T @ trace.activations[index]
        grad_b[index] = delta.sum(axis=0)
        if index > 0:
            # ReLU subgradient at exactly 0 is 0.
            delta = (delta @ net.weights[index]) * (trace.pre_activations[index - 1] > 0)
    return Gradients(weights=grad_w, biases=grad_b)


def loss_and_gradients(
    net: DenseNetwork, features: np.ndarray, labels: np.ndarray
) -> tuple[float, list[np.ndarray]]:
    trace = forward(net, features)
    loss, dlogits = cross_entropy_loss(trace.logits, labels)
    return loss, backward(net, trace, dlogits).as_list()
