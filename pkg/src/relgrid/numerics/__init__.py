"""Dense tensors with reverse-mode autodiff, layers, RMSprop and checkpoints."""
from .checkpoint import CheckpointError
from .kernels import BACKEND
from .layers import Conv2d, Linear, Module
from .optim import NumericalError, RMSprop, clip_by_global_norm
from .tensor import (
    BackwardError,
    Tensor,
    concat,
    conv2d,
    exp,
    feature_max_pool,
    linear,
    log,
    log_softmax,
    matmul,
    max_,
    mean,
    no_grad,
    relu,
    reshape,
    softmax,
    square,
    sum_,
    transpose,
)

__all__ = [
    "BACKEND",
    "BackwardError",
    "CheckpointError",
    "Conv2d",
    "Linear",
    "Module",
    "NumericalError",
    "RMSprop",
    "Tensor",
    "clip_by_global_norm",
    "concat",
    "conv2d",
    "exp",
    "feature_max_pool",
    "linear",
    "log",
    "log_softmax",
    "matmul",
    "max_",
    "mean",
    "no_grad",
    "relu",
    "reshape",
    "softmax",
    "square",
    "sum_",
    "transpose",
]
