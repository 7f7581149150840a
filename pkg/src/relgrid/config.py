"""Run configuration: environment presets, per-environment defaults, ``key = value`` files."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .agent import AgentNet
from .boxworld import BoxWorldConfig, BoxWorldEnv
from .gridcore import GridEnv
from .rgw import RgwConfig, RgwEnv
from .trainer import TrainConfig

ENVS = ("boxworld:1", "boxworld:2", "boxworld:3", "rgw:1", "rgw:2")
MODULES = ("mhdpa", "predinet")

# family -> max_steps (L), grid_size (n), key_size (g), entropy_weight (c), learning_rate (e)
ENV_DEFAULTS = {
    "boxworld": {"max_steps": 300, "grid_size": 12, "key_size": 64, "entropy_weight": 0.01, "learning_rate": 2e-4},
    "rgw": {"max_steps": 200, "grid_size": 10, "key_size": 32, "entropy_weight": 0.02, "learning_rate": 2e-3},
}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _meta(section: str, help: str = ""):
    return field(default=None, metadata={"section": section, "help": help})


@dataclass
class RunConfig:
    """Every tunable of a run. ``None`` means "use the environment default"."""

    env: str = field(default="boxworld:1", metadata={"section": "run", "help": "environment preset"})
    module: str = field(default="mhdpa", metadata={"section": "run", "help": "relational core"})
    seed: int = field(default=0, metadata={"section": "run", "help": "global seed"})
    out: str = field(default="runs/default", metadata={"section": "run", "help": "output directory"})
    grid_size: int = _meta("env", "grid side length n")
    max_steps: int = _meta("env", "episode cap L")
    mountain_penalty: float = _meta("env", "RGW mountain reward")
    key_size: int = _meta("agent", "key/query size g")
    relations: int = field(default=32, metadata={"section": "agent", "help": "PrediNet relations j"})
    heads: int = field(default=4, metadata={"section": "agent", "help": "attention heads"})
    comparator: str = field(default="difference", metadata={"section": "agent", "help": "PrediNet comparator"})
    num_actors: int = field(default=12, metadata={"section": "trainer", "help": "parallel actors"})
    gamma: float = field(default=0.99, metadata={"section": "trainer", "help": "discount"})
    buffer_size: int = field(default=40, metadata={"section": "trainer", "help": "n-step buffer"})
    entropy_weight: float = _meta("trainer", "entropy weight c")
    learning_rate: float = _meta("trainer", "RMSprop learning rate e")
    grad_clip: float = field(default=400.0, metadata={"section": "trainer", "help": "global-norm clip"})
    value_weight: float = field(default=0.5, metadata={"section": "trainer", "help": "critic loss weight"})
    rms_decay: float = field(default=0.99, metadata={"section": "trainer", "help": "RMSprop decay"})
    rms_epsilon: float = field(default=0.1, metadata={"section": "trainer", "help": "RMSprop epsilon"})
    rms_momentum: float = field(default=0.0, metadata={"section": "trainer", "help": "RMSprop momentum"})
    total_episodes: int = field(default=20000, metadata={"section": "trainer", "help": "episodes to train"})
    checkpoint_every: int = field(default=0, metadata={"section": "trainer", "help": "checkpoint period (0 = end only)"})
    wall_clock: bool = field(default=True, metadata={"section": "trainer", "help": "record wall time in logs"})

    @property
    def family(self) -> str:
        return self.env.split(":")[0]

    @property
    def preset(self) -> int:
        return int(self.env.split(":")[1])

    def resolved(self) -> "RunConfig":
        """A copy with environment defaults filled in and every value validated."""
        if self.env not in ENVS:
            raise ConfigError("env", f"unknown environment {self.env!r}; expected one of {', '.join(ENVS)}")
        if self.module not in MODULES:
            raise ConfigError("module", f"unknown module {self.module!r}; expected one of {', '.join(MODULES)}")
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        for key, default in ENV_DEFAULTS[self.family].items():
            if values[key] is None:
                values[key] = default
        if values["mountain_penalty"] is None:
            values["mountain_penalty"] = RgwConfig.mountain_penalty
        out = RunConfig(**values)
        for key in ("relations", "heads", "key_size", "grid_size", "max_steps"):
            if getattr(out, key) <= 0:
                raise ConfigError(key, "must be positive")
        try:
            out.train_config()
            out.make_env()
        except ValueError as exc:
            raise ConfigError(_guess_key(str(exc)), str(exc)) from None
        return out

    # -- builders -------------------------------------------------------------
    def make_env(self) -> GridEnv:
        if self.family == "boxworld":
            return BoxWorldEnv(BoxWorldConfig.preset(self.preset, grid_size=self.grid_size, max_steps=self.max_steps))
        return RgwEnv(RgwConfig.preset(self.preset, grid_size=self.grid_size, max_steps=self.max_steps,
                                       mountain_penalty=self.mountain_penalty))

    def make_net(self, seed: int | None = None) -> AgentNet:
        env = self.make_env()
        return AgentNet(env.obs_shape, self.module, key_size=self.key_size, relations=self.relations,
                        heads=self.heads, comparator=self.comparator,
                        seed=self.seed if seed is None else seed)

    def train_config(self) -> TrainConfig:
        names = {f.name for f in fields(TrainConfig)}
        kwargs = {k: getattr(self, k) for k in names if k not in ("seed",)}
        return TrainConfig(seed=self.seed, **kwargs)

    def manifest(self) -> dict:
        return {"env": self.env, "grid_size": self.grid_size, "max_steps": self.max_steps,
                "mountain_penalty": self.mountain_penalty, "seed": self.seed}

    # -- text format ----------------------------------------------------------
    def dumps(self) -> str:
        parser = configparser.ConfigParser()
        for f in fields(self):
            section = f.metadata["section"]
            if not parser.has_section(section):
                parser.add_section(section)
            value = getattr(self, f.name)
            if value is not None:
                parser.set(section, f.name, str(value))
        lines = []
        for section in parser.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in parser.items(section))
            lines.append("")
        return "\n".join(lines)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())


_TYPES = {f.name: f for f in fields(RunConfig)}


def coerce(key: str, raw: str):
    if key not in _TYPES:
        raise ConfigError(key, "unknown configuration key")
    kind = _TYPES[key].type
    try:
        if kind in ("int",):
            return int(raw)
        if kind in ("float",):
            return float(raw)
        if kind in ("bool",):
            low = str(raw).lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        return str(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {kind}") from None


def parse_config_text(text: str) -> dict:
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config", str(exc)) from None
    out = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key in _TYPES and _TYPES[key].metadata["section"] != section:
                raise ConfigError(key, f"belongs in section [{_TYPES[key].metadata['section']}], not [{section}]")
            out[key] = coerce(key, raw)
    return out


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    for key, raw in (overrides or {}).items():
        values[key] = raw if not isinstance(raw, str) else coerce(key, raw)
    return RunConfig(**values).resolved()


def _guess_key(message: str) -> str:
    for name in _TYPES:
        if name in message:
            return name
    return "config"
