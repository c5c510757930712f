"""Reproducible uniform sampling on [-1, 1]^d via counter-based streams.

Every sample owns its own Philox stream keyed by (master_seed, purpose,
index), so the i-th draw is identical no matter how work is scheduled
across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MIX = 0x9E3779B97F4A7C15  # golden-ratio mixing constant


@dataclass(frozen=True)
class RandomSample:
    z: np.ndarray
    stream_id: int

    def __post_init__(self):
        if np.any(np.abs(self.z) > 1.0):
            raise ValueError("sample components must lie in [-1, 1]")


def _key(master_seed: int, purpose: int, index: int) -> np.ndarray:
    lo = (purpose * _MIX + index) & 0xFFFFFFFFFFFFFFFF
    # keys must be handed over as uint64: a plain int list goes through
    # float64 inside numpy and values above 2^53 collide after rounding
    return np.array([master_seed & 0xFFFFFFFFFFFFFFFF, lo], dtype=np.uint64)


def stream_rng(master_seed: int, purpose: int = 0, index: int = 0) -> np.random.Generator:
    """Independent generator for (seed, purpose, index)."""
    return np.random.Generator(np.random.Philox(key=_key(master_seed, purpose, index)))


def draw_samples(n: int, dim: int, master_seed: int, purpose: int = 0) -> list[RandomSample]:
    """n i.i.d. Uniform[-1,1]^dim samples, each from its own counter stream."""
    out = []
    for i in range(n):
        rng = stream_rng(master_seed, purpose, i)
        out.append(RandomSample(rng.uniform(-1.0, 1.0, size=dim), stream_id=i))
    return out
