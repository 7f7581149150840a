"""Asynchronous advantage actor-critic.

Every actor owns an environment and a local copy of the network. It syncs the
local weights from the shared global parameters, rolls out at most
``buffer_size`` steps (fewer when the episode ends), computes the n-step
returns and the entropy-regularised actor-critic loss, and applies its
clipped gradient to the global parameters with a shared RMSprop.

With ``num_actors == 1`` everything runs in the calling process and a run is
a pure function of the configuration. With more actors each one is a forked
process; global parameters and RMSprop statistics live in shared memory and
every parameter block is read and written under its own lock.
"""
from __future__ import annotations

import csv
import logging
import multiprocessing as mp
import queue
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable

import numpy as np

from .agent import NUM_ACTIONS, AgentNet, sample_action
from .gridcore import GridEnv
from .numerics import Tensor, exp, log_softmax, square
from .numerics.optim import NumericalError, RMSprop

log = logging.getLogger(__name__)

LOG_HEADER = ["episode", "actor", "seed", "reward", "length", "success", "cause", "wall_ms"]


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    num_actors: int = 12
    gamma: float = 0.99
    buffer_size: int = 40
    entropy_weight: float = 0.01
    learning_rate: float = 2e-4
    grad_clip: float = 400.0
    value_weight: float = 0.5
    rms_decay: float = 0.99
    rms_epsilon: float = 0.1
    rms_momentum: float = 0.0
    total_episodes: int = 1000
    seed: int = 0
    checkpoint_every: int = 0
    wall_clock: bool = True

    def __post_init__(self):
        positive = ("num_actors", "gamma", "buffer_size", "learning_rate", "grad_clip", "total_episodes")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("entropy_weight", "value_weight", "rms_epsilon", "rms_momentum", "checkpoint_every"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if not 0 <= self.rms_decay < 1:
            raise ValueError("rms_decay must lie in [0, 1)")


@dataclass
class EpisodeRecord:
    episode: int
    actor: int
    seed: int
    reward: float
    length: int
    success: bool
    cause: str
    wall_ms: int

    def row(self) -> list:
        return [self.episode, self.actor, self.seed, repr(float(self.reward)), self.length,
                int(self.success), self.cause, self.wall_ms]


class RolloutBuffer:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self.observations: list[np.ndarray] = []
        self.actions: list[int] = []
        self.rewards: list[float] = []

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def full(self) -> bool:
        return len(self) >= self.capacity

    def add(self, obs: np.ndarray, action: int, reward: float) -> None:
        if self.full:
            raise OverflowError("rollout buffer is full; flush it first")
        self.observations.append(obs)
        self.actions.append(action)
        self.rewards.append(reward)

    def clear(self) -> None:
        self.observations.clear()
        self.actions.clear()
        self.rewards.clear()


def episode_seed(global_seed: int, actor: int, episode: int) -> int:
    return int(np.random.SeedSequence([global_seed, actor, episode]).generate_state(1, np.uint64)[0])


def compute_returns(rewards, bootstrap_value: float, gamma: float) -> np.ndarray:
    """R_i = r_i + gamma * R_{i+1}, seeded with the bootstrap value (0 after a terminal step)."""
    if len(rewards) == 0:
        raise ValueError("cannot compute returns of an empty buffer")
    out = np.empty(len(rewards), dtype=np.float64)
    running = float(bootstrap_value)
    for i in range(len(rewards) - 1, -1, -1):
        running = rewards[i] + gamma * running
        out[i] = running
    return out


def compute_loss(net: AgentNet, observations, actions, returns, entropy_weight: float,
                 value_weight: float = 0.5) -> tuple[Tensor, dict]:
    """Summed actor-critic loss over a rollout.

    policy: -sum log pi(a_i|s_i) * (R_i - V(s_i)), advantage held constant
    value:  value_weight * sum (R_i - V(s_i))**2
    entropy bonus: -entropy_weight * sum H(pi(.|s_i))
    """
    obs = np.asarray(observations)
    actions = np.asarray(actions, dtype=np.int64)
    if len(obs) != len(actions) or len(actions) != len(returns):
        raise ValueError("observations, actions and returns must have equal length")
    logits, values, _ = net(obs)
    dtype = values.dtype
    returns = np.asarray(returns, dtype=dtype)
    logp = log_softmax(logits, axis=-1)
    chosen = (logp * np.eye(NUM_ACTIONS, dtype=dtype)[actions]).sum(axis=-1)
    advantage = returns - values.data
    policy_loss = -(chosen * advantage).sum()
    value_loss = square(Tensor(returns) - values).sum() * value_weight
    entropy = -(exp(logp) * logp).sum()
    loss = policy_loss + value_loss - entropy * entropy_weight
    if not np.isfinite(loss.data):
        raise NumericalError("non-finite loss")
    stats = {
        "policy_loss": float(policy_loss.data),
        "value_loss": float(value_loss.data),
        "entropy": float(entropy.data),
    }
    return loss, stats


def success_rate(successes, window: int = 1000) -> np.ndarray:
    """Percentage of successes among the last ``window`` episodes, per episode index."""
    s = np.asarray(successes, dtype=np.float64)
    if s.size == 0:
        return s
    csum = np.concatenate([[0.0], np.cumsum(s)])
    idx = np.arange(1, s.size + 1)
    lo = np.maximum(idx - window, 0)
    return 100.0 * (csum[idx] - csum[lo]) / (idx - lo)


def windowed_mean(values, window: int = 100) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return v
    csum = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(1, v.size + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def read_log(path) -> list[EpisodeRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(EpisodeRecord(int(row["episode"]), int(row["actor"]), int(row["seed"]),
                                     float(row["reward"]), int(row["length"]), row["success"] == "1",
                                     row["cause"], int(row["wall_ms"])))
    return out


# -- shared parameters ------------------------------------------------------
class _NullLock:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


class GlobalParams:
    """Global parameters plus RMSprop statistics with one lock per block."""

    def __init__(self, arrays: dict, ctx=None):
        self.names = list(arrays)
        if ctx is None:
            self.params = {k: np.array(v, copy=True) for k, v in arrays.items()}
            self.mean_square = {k: np.zeros_like(v) for k, v in arrays.items()}
            self.locks = {k: _NullLock() for k in arrays}
        else:
            self.params, self.mean_square, self.locks = {}, {}, {}
            for k, v in arrays.items():
                code = "f" if v.dtype == np.float32 else "d"
                p = np.frombuffer(ctx.RawArray(code, v.size), dtype=v.dtype).reshape(v.shape)
                p[...] = v
                ms = np.frombuffer(ctx.RawArray(code, v.size), dtype=v.dtype).reshape(v.shape)
                self.params[k], self.mean_square[k], self.locks[k] = p, ms, ctx.Lock()

    def sync_into(self, net: AgentNet) -> None:
        for name, p in net.named_parameters():
            with self.locks[name]:
                p.data[...] = self.params[name]

    def snapshot(self) -> dict:
        out = {}
        for name in self.names:
            with self.locks[name]:
                out[name] = self.params[name].copy()
        return out

    def optimizer(self, cfg: TrainConfig) -> RMSprop:
        return RMSprop(self.params, cfg.learning_rate, cfg.rms_decay, cfg.rms_epsilon,
                       cfg.rms_momentum, cfg.grad_clip, mean_square=self.mean_square)

    def apply(self, opt: RMSprop, grads: dict) -> None:
        grads = opt.prepare(grads)
        for name in self.names:
            if name in grads:
                with self.locks[name]:
                    opt.apply_one(name, grads[name])


# -- actors -----------------------------------------------------------------
class EpisodeCounter:
    def __init__(self, total: int, ctx=None):
        self.total = total
        self._value = ctx.Value("q", 0) if ctx else None
        self._local = 0

    def claim(self) -> bool:
        if self._value is None:
            if self._local >= self.total:
                return False
            self._local += 1
            return True
        with self._value.get_lock():
            if self._value.value >= self.total:
                return False
            self._value.value += 1
            return True


def run_actor(actor: int, env: GridEnv, net: AgentNet, shared: GlobalParams, cfg: TrainConfig,
              counter: EpisodeCounter, emit: Callable[[dict], None], should_stop: Callable[[], bool]) -> None:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, actor, 0xAC7]))
    opt = shared.optimizer(cfg)
    buffer = RolloutBuffer(cfg.buffer_size)
    local_episode = 0
    while not should_stop() and counter.claim():
        seed = episode_seed(cfg.seed, actor, local_episode)
        local_episode += 1
        start = time.perf_counter()
        grid, obs = env.reset(seed)
        total, done, cause, steps = 0.0, False, None, 0
        while not done:
            if should_stop():
                return
            shared.sync_into(net)
            buffer.clear()
            while not buffer.full and not done:
                action = sample_action(net.act(obs).policy[0], rng)
                result = env.step(grid, action)
                buffer.add(obs, action, result.reward)
                obs, done, cause = result.observation, result.done, result.info["cause"]
                total += result.reward
                steps += 1
            bootstrap = 0.0 if done else float(net.act(obs).value[0])
            returns = compute_returns(buffer.rewards, bootstrap, cfg.gamma)
            net.zero_grad()
            loss, _ = compute_loss(net, buffer.observations, buffer.actions, returns,
                                   cfg.entropy_weight, cfg.value_weight)
            loss.backward()
            shared.apply(opt, {name: p.grad for name, p in net.named_parameters() if p.grad is not None})
        wall = int(round((time.perf_counter() - start) * 1000)) if cfg.wall_clock else 0
        emit({"actor": actor, "seed": seed, "reward": total, "length": steps,
              "success": cause in env.success_causes, "cause": cause or "", "wall_ms": wall})


@dataclass
class TrainResult:
    log_path: Path
    checkpoint_path: Path
    episodes: int


class _LogWriter:
    def __init__(self, path: Path, on_episode: Callable[[int], None]):
        self.fh = open(path, "w", newline="")
        self.writer = csv.writer(self.fh, lineterminator="\n")
        self.writer.writerow(LOG_HEADER)
        self.count = 0
        self.on_episode = on_episode

    def __call__(self, item: dict) -> None:
        rec = EpisodeRecord(episode=self.count, **item)
        self.writer.writerow(rec.row())
        self.count += 1
        self.on_episode(self.count)

    def close(self):
        self.fh.close()


def run_training(env_factory: Callable[[], GridEnv], net_factory: Callable[[], AgentNet], cfg: TrainConfig,
                 out_dir, manifest: dict | None = None) -> TrainResult:
    """Train and write ``episodes.csv`` and ``checkpoint.bin`` (plus periodic ones) into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_path, ckpt_path = out / "episodes.csv", out / "checkpoint.bin"
    template = net_factory()
    manifest = dict(manifest or {})

    def save(path):
        template.load_arrays(shared.snapshot())
        template.save(path, **manifest)

    def on_episode(n):
        if cfg.checkpoint_every and n % cfg.checkpoint_every == 0:
            save(out / f"checkpoint_{n:07d}.bin")

    writer = _LogWriter(log_path, on_episode)
    try:
        if cfg.num_actors == 1:
            shared = GlobalParams(template.state_dict())
            counter = EpisodeCounter(cfg.total_episodes)
            run_actor(0, env_factory(), net_factory(), shared, cfg, counter, writer, lambda: False)
        else:
            shared = _run_parallel(env_factory, net_factory, template, cfg, writer)
        save(ckpt_path)
    finally:
        writer.close()
    return TrainResult(log_path, ckpt_path, writer.count)


def _actor_process(actor, env_factory, net_factory, shared, cfg, counter, q, stop):
    try:
        run_actor(actor, env_factory(), net_factory(), shared, cfg, counter, q.put, stop.is_set)
    except BaseException as exc:  # reported to the parent, which halts the run
        q.put({"error": f"actor {actor}: {type(exc).__name__}: {exc}",
               "numerical": isinstance(exc, NumericalError)})
    finally:
        q.put({"finished": actor})


def _run_parallel(env_factory, net_factory, template, cfg: TrainConfig, writer: _LogWriter) -> GlobalParams:
    ctx = mp.get_context("fork")
    shared = GlobalParams(template.state_dict(), ctx)
    counter = EpisodeCounter(cfg.total_episodes, ctx)
    q = ctx.Queue()
    stop = ctx.Event()
    procs = [ctx.Process(target=_actor_process, args=(a, env_factory, net_factory, shared, cfg, counter, q, stop),
                         daemon=True) for a in range(cfg.num_actors)]
    for p in procs:
        p.start()
    running, error = len(procs), None
    while running:
        try:
            item = q.get(timeout=1.0)
        except queue.Empty:
            if not any(p.is_alive() for p in procs):
                break
            continue
        if "finished" in item:
            running -= 1
        elif "error" in item:
            error = error or item
            stop.set()
        else:
            writer(item)
    for p in procs:
        p.join()
    if error:
        exc = NumericalError if error["numerical"] else TrainingError
        raise exc(error["error"])
    return shared


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)


def config_fields() -> list[str]:
    return [f.name for f in fields(TrainConfig)]
