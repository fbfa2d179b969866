"""Counter-based seed derivation.

A master seed is expanded into independent per-component seeds by feeding
``(master_seed, counter)`` to :class:`numpy.random.SeedSequence` and taking
the first 64-bit word of its generated state. The counters below are part of
the on-disk contract: changing one changes every derived stream.
"""

from __future__ import annotations

import numpy as np

# Documented component counters.
SEED_COUNTERS: dict[str, int] = {
    "data": 0x01,
    "init": 0x02,
    "shuffle": 0x03,
    "noise": 0x04,
    "estimator": 0x05,
    "bootstrap": 0x06,
    "encode": 0x07,
    "split": 0x08,
    "oracle": 0x09,
}


def derive_seed(master_seed: int, counter: int) -> int:
    """Return the 64-bit seed for ``counter`` under ``master_seed``."""
    state = np.random.SeedSequence([int(master_seed), int(counter)]).generate_state(
        1, dtype=np.uint64
    )
    return int(state[0])


def derive_component_seeds(master_seed: int) -> dict[str, int]:
    """Derive one seed per named RNG consumer."""
    return {
        name: derive_seed(master_seed, counter)
        for name, counter in SEED_COUNTERS.items()
    }


def epoch_seed(seed: int, epoch: int) -> int:
    """Per-epoch seed so runs are reproducible yet epochs differ."""
    return derive_seed(seed, 0x1000 + int(epoch))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed)))
