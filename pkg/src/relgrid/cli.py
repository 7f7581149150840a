"""Command-line entry point: ``relgrid train|eval|baseline|heatmap|verify``.

Exit codes: 0 success, 1 invalid configuration or arguments, 2 verification
failure, 3 numerical failure during training.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import oracle
from .agent import NUM_ACTIONS, AgentNet, sample_action
from .config import ENVS, MODULES, ConfigError, RunConfig, load_config
from .gridcore import GridEnv
from .numerics.checkpoint import CheckpointError
from .numerics.optim import NumericalError
from .relcore import RelationReport
from .trainer import episode_seed, read_log, run_training, success_rate, windowed_mean

log = logging.getLogger("relgrid")

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NUMERIC = 0, 1, 2, 3
SUCCESS_WINDOW = 1000
REWARD_WINDOW = 100


class UsageError(ValueError):
    pass


# -- evaluation helpers -----------------------------------------------------------
@dataclass
class EvalSummary:
    episodes: int
    success_pct: float
    mean_reward: float
    mean_length: float

    def lines(self) -> list[str]:
        return [f"episodes = {self.episodes}", f"success_pct = {self.success_pct:.2f}",
                f"mean_reward = {self.mean_reward:.4f}", f"mean_length = {self.mean_length:.2f}"]


def play_episode(env: GridEnv, choose, seed: int) -> tuple[float, int, bool]:
    grid, obs = env.reset(seed)
    total, steps, done, info = 0.0, 0, False, {}
    while not done:
        result = env.step(grid, choose(obs))
        obs, done, info = result.observation, result.done, result.info
        total += result.reward
        steps += 1
    return total, steps, bool(info.get("success"))


def evaluate(env: GridEnv, choose, episodes: int, seed: int) -> EvalSummary:
    if episodes <= 0:
        raise UsageError("episodes must be positive")
    rewards, lengths, wins = [], [], 0
    for i in range(episodes):
        r, n, ok = play_episode(env, choose, episode_seed(seed, 0, i))
        rewards.append(r)
        lengths.append(n)
        wins += ok
    return EvalSummary(episodes, 100.0 * wins / episodes, float(np.mean(rewards)), float(np.mean(lengths)))


def random_policy(seed: int):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xBA5E]))
    return lambda obs: int(rng.integers(NUM_ACTIONS))


def net_policy(net: AgentNet, mode: str, seed: int):
    if mode == "greedy":
        return lambda obs: int(np.argmax(net.act(obs).logits[0]))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE7A1]))
    return lambda obs: sample_action(net.act(obs).policy[0], rng)


# -- images ---------------------------------------------------------------------
def write_pgm(path, image: np.ndarray) -> None:
    """Binary 8-bit greymap (P5)."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    h, w = image.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + image.tobytes())


def write_ppm(path, image: np.ndarray) -> None:
    """Binary 8-bit pixmap (P6)."""
    image = np.ascontiguousarray(image, dtype=np.uint8)
    h, w, _ = image.shape
    Path(path).write_bytes(f"P6\n{w} {h}\n255\n".encode("ascii") + image.tobytes())


def read_pnm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, dims, maxval, body = data.split(b"\n", 3)
    w, h = (int(v) for v in dims.split())
    shape = (h, w) if magic == b"P5" else (h, w, 3)
    return np.frombuffer(body, dtype=np.uint8).reshape(shape)


def attention_row(attention: np.ndarray, head: int, entity: int, size: int) -> np.ndarray:
    """The row of one head for one query entity, renormalized and reshaped to (size, size)."""
    row = np.asarray(attention[head, entity], dtype=np.float64)
    return (row / row.sum()).reshape(size, size)


def to_intensity(matrix: np.ndarray) -> np.ndarray:
    top = matrix.max()
    if top <= 0:
        return np.zeros(matrix.shape, dtype=np.uint8)
    return np.rint(255.0 * matrix / top).astype(np.uint8)


def key_cell_ratio(matrix: np.ndarray, cells) -> float:
    """Mass on ``cells`` (mean over them) divided by the mean cell mass."""
    mass = np.mean([matrix[c] for c in cells])
    return float(mass / matrix.mean())


# -- commands ---------------------------------------------------------------------
def _config_from_args(args) -> RunConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)
                 if getattr(args, f.name, None) is not None}
    return load_config(args.config, overrides)


def cmd_train(args) -> int:
    cfg = _config_from_args(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.ini")
    manifest = cfg.manifest()
    log.info("training %s/%s for %d episodes into %s", cfg.env, cfg.module, cfg.total_episodes, out)
    result = run_training(cfg.make_env, cfg.make_net, cfg.train_config(), out, manifest)
    write_curve(result.log_path, out / "curve.csv")
    recs = read_log(result.log_path)
    final = success_rate([r.success for r in recs], SUCCESS_WINDOW)[-1]
    print(f"episodes = {result.episodes}")
    print(f"final_success_pct = {final:.2f}")
    print(f"checkpoint = {result.checkpoint_path}")
    return EXIT_OK


def write_curve(log_path, curve_path) -> None:
    recs = read_log(log_path)
    succ = success_rate([r.success for r in recs], SUCCESS_WINDOW)
    mean_r = windowed_mean([r.reward for r in recs], REWARD_WINDOW)
    with open(curve_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["episode", "success_pct", "mean_reward"])
        for i, (s, m) in enumerate(zip(succ, mean_r)):
            w.writerow([i, f"{s:.4f}", f"{m:.6f}"])


def load_checked(path, env: str | None, module: str | None) -> tuple[AgentNet, RunConfig]:
    """Checkpoint plus the run config rebuilt from its manifest; rejects mismatches."""
    try:
        net, meta = AgentNet.from_checkpoint(path)
    except (OSError, CheckpointError, KeyError, ValueError) as exc:
        raise ConfigError("checkpoint", f"cannot load {path}: {exc}") from None
    if env is not None and meta.get("env") != env:
        raise ConfigError("env", f"checkpoint was trained on {meta.get('env')!r}, not {env!r}")
    if module is not None and meta["module"] != module:
        raise ConfigError("module", f"checkpoint uses {meta['module']!r}, not {module!r}")
    penalty = meta.get("mountain_penalty")
    cfg = RunConfig(env=meta.get("env", env or "boxworld:1"), module=meta["module"],
                    grid_size=int(meta["grid_size"]), max_steps=int(meta["max_steps"]),
                    mountain_penalty=None if penalty in (None, "None") else float(penalty),
                    key_size=int(meta["key_size"])).resolved()
    if cfg.make_env().obs_shape != net.obs_shape:
        raise ConfigError("checkpoint", "observation shape does not match the environment")
    return net, cfg


def cmd_eval(args) -> int:
    net, cfg = load_checked(args.checkpoint, args.env, args.module)
    summary = evaluate(cfg.make_env(), net_policy(net, args.policy, args.seed), args.episodes, args.seed)
    print("\n".join(summary.lines()))
    return EXIT_OK


def cmd_baseline(args) -> int:
    cfg = _config_from_args(args)
    summary = evaluate(cfg.make_env(), random_policy(args.seed), args.episodes, args.seed)
    print("\n".join(summary.lines()))
    return EXIT_OK


def cmd_heatmap(args) -> int:
    net, cfg = load_checked(args.checkpoint, args.env, None)
    env = cfg.make_env()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid, obs = env.reset(args.seed)
    for _ in range(args.steps):
        res = env.step(grid, int(np.argmax(net.act(obs).logits[0])))
        obs = res.observation
        if res.done:
            raise UsageError(f"episode ended before step {args.steps}")
    write_ppm(out / "state.ppm", np.rint(obs * 255.0))
    diag = net.act(obs).diagnostics
    n = env.size
    if net.kind != "mhdpa":
        report = RelationReport.from_diagnostics(diag, n)
        (out / "relations.txt").write_text("\n".join([RelationReport.HEADER] + report.lines(0, args.steps)) + "\n")
        print(f"relations = {out / 'relations.txt'}")
        return EXIT_OK
    attention = diag["attention"][0]
    heads = args.head if args.head else list(range(attention.shape[0]))
    for h in heads:
        if not 0 <= h < attention.shape[0]:
            raise UsageError(f"head index {h} out of range 0..{attention.shape[0] - 1}")
    r, c = grid.agent_pos
    for h in heads:
        matrix = attention_row(attention, h, r * n + c, n)
        write_pgm(out / f"head{h}.pgm", to_intensity(matrix))
        np.savetxt(out / f"head{h}.txt", matrix, fmt="%.9e")
        print(f"head{h} = {out / f'head{h}.pgm'}")
    return EXIT_OK


def parse_seed_range(text: str) -> range:
    """``A:B`` (half-open) or a single count ``N`` meaning ``0:N``."""
    try:
        if ":" in text:
            lo, hi = (int(v) for v in text.split(":", 1))
        else:
            lo, hi = 0, int(text)
    except ValueError:
        raise UsageError(f"bad seed range {text!r}; expected A:B") from None
    if hi <= lo:
        raise UsageError(f"seed range {text!r} is empty")
    return range(lo, hi)


def verify_env(env: GridEnv, seeds, replay_witness: bool = True) -> list[str]:
    """Problems found over ``seeds``; an empty list means every layout passed."""
    problems = []
    for seed in seeds:
        grid, _ = env.reset(seed)
        if not oracle.solvable(env, grid.copy()):
            problems.append(f"seed {seed}: unsolvable")
            continue
        if replay_witness:
            best = oracle.optimal_reward(env, grid.copy())
            total, cause = oracle.replay(env, grid.copy(), best.actions)
            if total != best.reward or cause != best.cause:
                problems.append(f"seed {seed}: witness replays to {total} ({cause}), claimed {best.reward}")
    return problems


def cmd_verify(args) -> int:
    seeds = parse_seed_range(args.seeds)
    cfg = _config_from_args(args)
    problems = verify_env(cfg.make_env(), seeds, not args.no_replay)
    for p in problems:
        print(p)
    print(f"{cfg.env}: {len(seeds) - len(problems)}/{len(seeds)} layouts verified")
    return EXIT_VERIFY if problems else EXIT_OK


# -- parser ---------------------------------------------------------------------
def _add_config_flags(p: argparse.ArgumentParser, skip=()) -> None:
    p.add_argument("--config", help="key = value configuration file")
    for f in fields(RunConfig):
        if f.name in skip:
            continue
        flag = "--" + f.name.replace("_", "-")
        kind = {"int": int, "float": float}.get(f.type, str)
        p.add_argument(flag, dest=f.name, type=kind, default=None, help=f.metadata.get("help"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relgrid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an agent")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("--env", choices=ENVS)
    p.add_argument("--module", choices=MODULES)
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy", choices=("greedy", "sample"), default="greedy")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("baseline", help="random-policy Monte Carlo baseline")
    _add_config_flags(p, skip=("seed",))
    p.add_argument("--episodes", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("heatmap", help="export agent attention (or PrediNet relations)")
    p.add_argument("checkpoint")
    p.add_argument("--env", choices=ENVS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=0, help="greedy steps to take before capturing")
    p.add_argument("--head", type=int, action="append", help="head index (repeatable; default all)")
    p.add_argument("--out", default="heatmap")
    p.set_defaults(func=cmd_heatmap)

    p = sub.add_parser("verify", help="check generated layouts with the oracle")
    _add_config_flags(p)
    p.add_argument("--seeds", default="0:1000", help="half-open range A:B")
    p.add_argument("--no-replay", action="store_true", help="skip optimal-witness replay")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
