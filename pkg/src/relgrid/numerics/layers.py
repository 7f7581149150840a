"""Parameter containers and the dense/convolution layers used by the agent."""
from __future__ import annotations

from collections import OrderedDict

import numpy as np

from .tensor import Tensor, conv2d, linear


RELU_GAIN = float(np.sqrt(2.0))


def uniform_fan_in(rng: np.random.Generator, shape: tuple, fan_in: int, dtype, gain: float = 1.0) -> np.ndarray:
    """U(-b, b) with b = gain * sqrt(3 / fan_in): variance gain**2 / fan_in."""
    bound = gain * np.sqrt(3.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Module:
    """Registers parameters and submodules in assignment order."""

    def __init__(self) -> None:
        object.__setattr__(self, "_params", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())

    def __setattr__(self, name, value):
        if isinstance(value, Tensor) and value.requires_grad:
            self._params[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def named_parameters(self, prefix: str = ""):
        for name, p in self._params.items():
            yield prefix + name, p
        for name, m in self._modules.items():
            yield from m.named_parameters(prefix + name + ".")

    def parameters(self) -> "OrderedDict[str, Tensor]":
        return OrderedDict(self.named_parameters())

    def num_parameters(self) -> int:
        return sum(p.size for _, p in self.named_parameters())

    def zero_grad(self) -> None:
        for _, p in self.named_parameters():
            p.grad = None

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((k, p.data) for k, p in self.named_parameters())

    def load_arrays(self, arrays) -> None:
        """Copy ``arrays`` (name -> array) into the parameters; names and shapes must match exactly."""
        params = self.parameters()
        if list(arrays) != list(params):
            missing = set(params) ^ set(arrays)
            raise ValueError(f"parameter names differ: {sorted(missing)[:5]}")
        for name, arr in arrays.items():
            if tuple(arr.shape) != params[name].shape:
                raise ValueError(f"shape mismatch for {name}: {tuple(arr.shape)} vs {params[name].shape}")
        for name, arr in arrays.items():
            params[name].data[...] = arr


class Linear(Module):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype=np.float32, bias: bool = True,
                 gain: float = 1.0):
        super().__init__()
        self.weight = Tensor(uniform_fan_in(rng, (n_in, n_out), n_in, dtype, gain), requires_grad=True)
        if bias:
            self.bias = Tensor(np.zeros(n_out, dtype=dtype), requires_grad=True)
        else:
            self.bias = None

    def __call__(self, x: Tensor) -> Tensor:
        return linear(x, self.weight, self.bias)


class Conv2d(Module):
    def __init__(self, c_in: int, c_out: int, kernel: int, rng: np.random.Generator, dtype=np.float32,
                 gain: float = RELU_GAIN):
        super().__init__()
        fan_in = kernel * kernel * c_in
        self.weight = Tensor(uniform_fan_in(rng, (kernel, kernel, c_in, c_out), fan_in, dtype, gain),
                             requires_grad=True)
        self.bias = Tensor(np.zeros(c_out, dtype=dtype), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias)
