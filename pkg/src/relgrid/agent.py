"""The actor-critic network: CNN, positional channels, relational core, MLP heads."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .numerics import Conv2d, Linear, Module, Tensor, concat, log_softmax, no_grad, relu
from .numerics import checkpoint
from .numerics.layers import RELU_GAIN
from .relcore import switch_module

NUM_ACTIONS = 4
CONV1_CHANNELS = 12
CONV2_CHANNELS = 24
KERNEL = 2
TRUNK = (256, 128, 64)


def positional_channels(height: int, width: int, dtype=np.float32) -> np.ndarray:
    """(height, width, 2) array of (x, y) = (col, row) scaled to [0, 1]."""
    ys = np.arange(height, dtype=np.float64) / max(height - 1, 1)
    xs = np.arange(width, dtype=np.float64) / max(width - 1, 1)
    grid = np.stack(np.meshgrid(xs, ys), axis=-1)
    return grid.astype(dtype)


@dataclass
class AgentOutput:
    policy: np.ndarray
    value: np.ndarray
    logits: np.ndarray
    diagnostics: dict = field(default_factory=dict)


class AgentNet(Module):
    def __init__(self, obs_shape: tuple[int, int, int], module: str = "mhdpa", key_size: int = 64,
                 relations: int = 32, heads: int = 4, comparator: str = "difference",
                 seed: int = 0, dtype=np.float32):
        super().__init__()
        self.obs_shape = tuple(obs_shape)
        self.kind = module
        self.dtype = np.dtype(dtype)
        self.hparams = {"module": module, "key_size": key_size, "relations": relations,
                        "heads": heads, "comparator": comparator}
        h, w, c = self.obs_shape
        # independent streams so trunk weights do not depend on the core kind
        s_conv, s_core, s_head = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))
        self.conv1 = Conv2d(c, CONV1_CHANNELS, KERNEL, s_conv, dtype)
        self.conv2 = Conv2d(CONV1_CHANNELS, CONV2_CHANNELS, KERNEL, s_conv, dtype)
        self.core = switch_module(module, s_core, key_size=key_size, heads=heads, relations=relations,
                                  comparator=comparator, dtype=dtype)
        self.fc1 = Linear(CONV2_CHANNELS + 2, TRUNK[0], s_head, dtype, gain=RELU_GAIN)
        self.fc2 = Linear(TRUNK[0], TRUNK[1], s_head, dtype, gain=RELU_GAIN)
        self.fc3 = Linear(TRUNK[1], TRUNK[2], s_head, dtype, gain=RELU_GAIN)
        self.policy_head = Linear(TRUNK[2], NUM_ACTIONS, s_head, dtype)
        self.value_head = Linear(TRUNK[2], 1, s_head, dtype)
        self._coords = positional_channels(h, w, dtype)

    def entities(self, obs) -> Tensor:
        obs = np.asarray(obs, dtype=self.dtype)
        if obs.ndim == 3:
            obs = obs[None]
        if obs.shape[1:] != self.obs_shape:
            raise ValueError(f"observation shape {obs.shape[1:]} does not match network input {self.obs_shape}")
        b, h, w, _ = obs.shape
        x = relu(self.conv1(Tensor(obs)))
        x = relu(self.conv2(x))
        coords = Tensor(np.broadcast_to(self._coords, (b, h, w, 2)))
        return concat([x, coords], axis=-1).reshape(b, h * w, CONV2_CHANNELS + 2)

    def __call__(self, obs) -> tuple[Tensor, Tensor, dict]:
        """(logits, value, diagnostics) for a batch of observations (or a single one)."""
        summary, diag = self.core(self.entities(obs))
        x = relu(self.fc1(summary))
        x = relu(self.fc2(x))
        x = relu(self.fc3(x))
        logits = self.policy_head(x)
        value = self.value_head(x).reshape(-1)
        return logits, value, diag

    def act(self, obs) -> AgentOutput:
        with no_grad():
            logits, value, diag = self(obs)
        logp = log_softmax(logits).data
        return AgentOutput(np.exp(logp), value.data, logits.data, diag)

    # -- persistence ------------------------------------------------------
    def manifest(self, **extra) -> dict:
        h, w, c = self.obs_shape
        meta = {"module": self.kind, "obs_shape": f"{h}x{w}x{c}"}
        meta.update({k: v for k, v in self.hparams.items() if k != "module"})
        meta.update(extra)
        return meta

    def save(self, path, **extra) -> None:
        checkpoint.save(path, self.state_dict(), self.manifest(**extra))

    @classmethod
    def from_checkpoint(cls, path, dtype=np.float32) -> tuple["AgentNet", dict]:
        params, meta = checkpoint.load(path)
        h, w, c = (int(v) for v in meta["obs_shape"].split("x"))
        net = cls((h, w, c), module=meta["module"], key_size=int(meta["key_size"]),
                  relations=int(meta["relations"]), heads=int(meta["heads"]),
                  comparator=meta.get("comparator", "difference"), dtype=dtype)
        checkpoint.load_into(net, params)
        return net, meta


def sample_action(policy: np.ndarray, rng: np.random.Generator) -> int:
    """Categorical draw from a probability vector using one uniform variate."""
    p = np.asarray(policy, dtype=np.float64)
    if p.shape != (NUM_ACTIONS,) or not np.all(np.isfinite(p)) or np.any(p < 0) or p.sum() <= 0:
        raise ValueError(f"invalid action distribution {policy!r}")
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    return int(min(np.searchsorted(cdf, rng.random(), side="right"), NUM_ACTIONS - 1))
