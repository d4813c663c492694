"""Deterministic random-stream utilities.

Every stochastic routine takes an explicit seed and derives independent
substreams through :func:`substream`.  The mapping ``(seed, index) -> stream``
is pure, so Monte Carlo results are byte-identical no matter how
replications are scheduled across workers.
"""

from __future__ import annotations

import numpy as np

#: anything accepted where a random source is expected
Seed = "int | np.random.SeedSequence | np.random.Generator | None"


def generator(seed) -> np.random.Generator:
    """Return a Generator for ``seed``; an existing Generator passes through."""
    return np.random.default_rng(seed)


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent substream ``index`` of the root ``seed``.

    Built from ``SeedSequence(seed, spawn_key=(index,))``: streams for
    different indices are statistically independent, and the same
    ``(seed, index)`` pair always yields the same stream.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def child_seed(seed: int, index: int) -> int:
    """A derived integer seed, usable as the root of a new substream family."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])
