"""
Named random substreams.

Every source of randomness in a run is derived from the single run seed and a
stream name, so two runs with the same seed see the same initialization, the
same batches and the same attack restarts regardless of which scheme they use.
"""

from typing import Union

import numpy as np

STREAMS = {
    "init": 0,
    "sampling": 1,
    "attack": 2,
    "split": 3,
    "data": 4,
    "baseline": 5,
    "evaluation": 6,
}

SeedLike = Union[int, np.random.Generator]


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for one named stream of a run seed"""
    if name not in STREAMS:
        raise KeyError(f"Unknown random stream '{name}'. Valid streams: {', '.join(STREAMS)}")
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, STREAMS[name]]))


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)


def draw_seed(rng: np.random.Generator) -> int:
    """Draw a fresh 63-bit seed from a stream (for per-iteration sub-seeds)"""
    return int(rng.integers(0, 2**63 - 1))
