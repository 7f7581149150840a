"""Central finite differences, used as the independent oracle for gradients."""
from __future__ import annotations

import numpy as np

from .tensor import no_grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-3) -> np.ndarray:
    """|a - n| / max(|a|, |n|, floor); the floor keeps near-zero gradients from dominating."""
    a, n = np.asarray(analytic, dtype=np.float64), np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def numeric_grad(f, array: np.ndarray, index: tuple, h: float) -> float:
    """d f / d array[index] by central differences; ``f`` re-evaluates with the array modified in place."""
    old = array[index]
    with no_grad():
        array[index] = old + h
        up = float(f())
        array[index] = old - h
        down = float(f())
    array[index] = old
    return (up - down) / (2.0 * h)


def sample_indices(rng: np.random.Generator, params: dict, count: int) -> list[tuple[str, tuple]]:
    """``count`` (name, index) pairs drawn with probability proportional to tensor size."""
    names = list(params)
    sizes = np.array([params[k].size for k in names], dtype=np.float64)
    picks = rng.choice(len(names), size=count, p=sizes / sizes.sum())
    out = []
    for i in picks:
        arr = params[names[i]]
        flat = int(rng.integers(arr.size))
        out.append((names[i], np.unravel_index(flat, arr.shape)))
    return out
