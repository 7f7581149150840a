from __future__ import annotations

import numpy as np


class NumericalError(FloatingPointError):
    """A gradient or loss contained NaN or infinity."""


def global_norm(grads) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads)))


def clip_by_global_norm(grads: dict, max_norm: float) -> tuple[dict, float]:
    """Scale all gradients together so their joint L2 norm is at most ``max_norm``."""
    norm = global_norm(grads.values())
    if not np.isfinite(norm):
        raise NumericalError("non-finite gradient")
    if norm <= max_norm or norm == 0.0:
        return grads, norm
    scale = max_norm / norm
    return {k: g * np.asarray(scale, dtype=g.dtype) for k, g in grads.items()}, norm


class RMSprop:
    """RMSprop with the epsilon inside the square root.

    ``ms <- decay * ms + (1 - decay) * g**2``;
    ``p <- p - lr * g / sqrt(ms + eps)``. With ``momentum > 0`` the scaled
    step is accumulated in a velocity buffer first.

    ``params`` and ``mean_square`` are dicts of numpy arrays updated in place,
    so they may live in shared memory.
    """

    def __init__(self, params: dict, lr: float, decay: float = 0.99, eps: float = 0.1,
                 momentum: float = 0.0, clip: float | None = 400.0, mean_square: dict | None = None):
        if lr <= 0 or not 0 <= decay < 1 or eps < 0 or momentum < 0:
            raise ValueError("invalid RMSprop hyperparameters")
        self.params = params
        self.lr, self.decay, self.eps, self.momentum, self.clip = lr, decay, eps, momentum, clip
        self.mean_square = mean_square if mean_square is not None else {
            k: np.zeros_like(v) for k, v in params.items()
        }
        self.velocity = {k: np.zeros_like(v) for k, v in params.items()} if momentum else None

    def prepare(self, grads: dict) -> dict:
        missing = set(grads) - set(self.params)
        if missing:
            raise KeyError(f"gradients for unknown parameters: {sorted(missing)}")
        for k, g in grads.items():
            if g.shape != self.params[k].shape:
                raise ValueError(f"gradient shape {g.shape} does not match parameter {k} {self.params[k].shape}")
        if self.clip is not None:
            grads, _ = clip_by_global_norm(grads, self.clip)
        elif not np.isfinite(global_norm(grads.values())):
            raise NumericalError("non-finite gradient")
        return grads

    def apply_one(self, name: str, grad: np.ndarray) -> None:
        p, ms = self.params[name], self.mean_square[name]
        dt = p.dtype.type
        ms *= dt(self.decay)
        ms += dt(1.0 - self.decay) * grad * grad
        step = dt(self.lr) * grad / np.sqrt(ms + dt(self.eps))
        if self.velocity is not None:
            v = self.velocity[name]
            v *= dt(self.momentum)
            v += step
            step = v
        p -= step

    def step(self, grads: dict) -> None:
        """Clip, validate and apply ``grads`` (name -> array). Raises NumericalError before touching any state."""
        grads = self.prepare(grads)
        for name, g in grads.items():
            self.apply_one(name, g)
