"""Finite-difference helpers shared by the gradient tests."""
import numpy as np

from relgrid.numerics import Tensor
from relgrid.numerics.gradcheck import numeric_grad, relative_error


def projected(fn, arrays, weights, dtype):
    """Scalar sum(fn(*inputs) * weights) with fresh leaf tensors of ``dtype``."""
    leaves = [Tensor(a.astype(dtype), requires_grad=True) for a in arrays]
    out = fn(*leaves)
    return (out * Tensor(weights.astype(dtype))).sum(), leaves


def check_op(fn, arrays, rng, samples=50, h=1e-6, analytic_dtype=np.float64):
    """Max relative error between analytic grads (``analytic_dtype``) and float64 central differences."""
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    with_out = fn(*[Tensor(a) for a in arrays])
    weights = rng.standard_normal(with_out.shape)
    loss, leaves = projected(fn, arrays, weights, analytic_dtype)
    loss.backward()
    worst = 0.0
    total = sum(a.size for a in arrays)
    for _ in range(samples):
        flat = int(rng.integers(total))
        k = 0
        while flat >= arrays[k].size:
            flat -= arrays[k].size
            k += 1
        idx = np.unravel_index(flat, arrays[k].shape)

        def f():
            return projected(fn, arrays, weights, np.float64)[0].data

        num = numeric_grad(f, arrays[k], idx, h)
        worst = max(worst, float(relative_error(leaves[k].grad[idx], num)))
    return worst
