"""Bias-corrected Adam over a network's parameter list."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol, Sequence, TypeVar

import numpy as np

from ..errors import NumericalError, ShapeError
from ..models import TrainingConfig

logger = logging.getLogger(__name__)


class Parameterized(Protocol):
    def parameters(self) -> list[np.ndarray]: ...

    def with_parameters(self, params: Sequence[np.ndarray]) -> "Parameterized": ...


NetT = TypeVar("NetT", bound=Parameterized)


@dataclass(frozen=True)
class AdamState:
    """First and second moments mirroring the parameter list."""

    first_moment: tuple[np.ndarray, ...]
    second_moment: tuple[np.ndarray, ...]
    step_count: int = 0

    @classmethod
    def zeros_like(cls, net: Parameterized) -> "AdamState":
        params = net.parameters()
        return cls(
            first_moment=tuple(np.zeros_like(p) for p in params),
            second_moment=tuple(np.zeros_like(p) for p in params),
            step_count=0,
        )


def adam_step(
    net: NetT,
    grads: Sequence[np.ndarray],
    state: AdamState,
    cfg: TrainingConfig,
) -> tuple[NetT, AdamState]:
    """Return the updated network and optimizer state; inputs are not modified."""
    params = net.parameters()
    if len(grads) != len(params) or len(state.first_moment) != len(params):
        raise ShapeError("gradients, moments and parameters must align")
    for index, (p, g) in enumerate(zip(params, grads)):
        if g.shape != p.shape or state.first_moment[index].shape != p.shape:
            raise ShapeError(
                f"parameter {index}: shape {p.shape}, gradient {g.shape}, "
                f"moment {state.first_moment[index].shape}"
            )
        if not np.all(np.isfinite(g)):
            logger.error("Non-finite gradient in parameter %d at step %d", index, state.step_count)
            raise NumericalError(f"non-finite gradient in parameter {index}")

    step = state.step_count + 1
    b1, b2 = cfg.beta1, cfg.beta2
    correction1 = 1.0 - b1**step
    correction2 = 1.0 - b2**step
    new_params = []
    first = []
    second = []
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        new_params.append(p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon))
        first.append(m)
        second.append(v)

    updated = net.with_parameters(new_params)
    if not all(np.all(np.isfinite(p)) for p in new_params):
        logger.error("Non-finite parameter after Adam step %d", step)
        raise NumericalError(f"non-finite parameter after step {step}")
    return updated, AdamState(tuple(first), tuple(second), step)
