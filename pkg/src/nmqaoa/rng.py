"""Deterministic randomness for trajectory sampling.

Each trajectory owns a counter-based Philox stream keyed by
base_seed XOR trajectory_index, so any trajectory is reproducible in
isolation and the ensemble is independent of execution order.  The stream is
consumed strictly as one (r1, r2) pair per integration step.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def trajectory_seed(base_seed: int, index: int) -> int:
    return (int(base_seed) ^ int(index)) & _MASK64


def pair_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))


def draw_pairs(gen: np.random.Generator, n_steps: int) -> np.ndarray:
    """(n_steps, 2) block of uniforms; step order is the row order."""
    return gen.random((n_steps, 2))
