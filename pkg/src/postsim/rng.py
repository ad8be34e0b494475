"""Seeded random streams.

Every random draw in the package goes through :func:`stream`. A stream is a
Philox counter-based generator keyed by a ``SeedSequence`` built from the user
seed plus a tuple of integers naming the sub-task (trial index, batch index,
...). Two calls with the same seed and the same path give bit-identical
numbers regardless of what ran before or in parallel.
"""
from __future__ import annotations

import time

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def stream(seed: int, *path: int) -> np.random.Generator:
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def time_seed() -> int:
    return time.time_ns() & MAX_SEED


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. standard complex normals, ``E|z|^2 = 1``."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
