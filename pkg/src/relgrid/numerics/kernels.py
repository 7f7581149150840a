"""Hot convolution kernels with a compiled fast path.

``im2col``/``col2im`` gather and scatter the patches of a stride-1 "same"
convolution. The compiled extension ``relgrid.numerics._ckernels`` is used
when it was built; otherwise the numpy versions below run. Set
``RELGRID_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

import numpy as np


def _pads(k: int) -> tuple[int, int]:
    before = (k - 1) // 2
    return before, k - 1 - before


def im2col_py(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
    b, h, w, c = x.shape
    (pt, pb), (pl, pr) = _pads(kh), _pads(kw)
    xp = np.pad(x, ((0, 0), (pt, pb), (pl, pr), (0, 0)))
    return np.concatenate([xp[:, di:di + h, dj:dj + w, :] for di in range(kh) for dj in range(kw)], axis=-1)


def col2im_py(cols: np.ndarray, shape: tuple, kh: int, kw: int) -> np.ndarray:
    b, h, w, c = shape
    (pt, pb), (pl, pr) = _pads(kh), _pads(kw)
    out = np.zeros((b, h + pt + pb, w + pl + pr, c), dtype=cols.dtype)
    k = 0
    for di in range(kh):
        for dj in range(kw):
            out[:, di:di + h, dj:dj + w, :] += cols[..., k * c:(k + 1) * c]
            k += 1
    return out[:, pt:pt + h, pl:pl + w, :]


im2col = im2col_py
col2im = col2im_py
BACKEND = "python"

if not os.environ.get("RELGRID_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        def im2col(x: np.ndarray, kh: int, kw: int) -> np.ndarray:
            x = np.ascontiguousarray(x)
            if x.dtype == np.float32:
                return _ckernels.im2col_f32(x, kh, kw)
            if x.dtype == np.float64:
                return _ckernels.im2col_f64(x, kh, kw)
            return im2col_py(x, kh, kw)

        def col2im(cols: np.ndarray, shape: tuple, kh: int, kw: int) -> np.ndarray:
            cols = np.ascontiguousarray(cols)
            if cols.dtype == np.float32:
                return _ckernels.col2im_f32(cols, tuple(shape), kh, kw)
            if cols.dtype == np.float64:
                return _ckernels.col2im_f64(cols, tuple(shape), kh, kw)
            return col2im_py(cols, shape, kh, kw)

        BACKEND = "compiled"
