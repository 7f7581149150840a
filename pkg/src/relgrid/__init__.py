"""Relational actor-critic agents on procedurally generated grid worlds."""
from .agent import AgentNet
from .boxworld import BoxWorldConfig, BoxWorldEnv
from .config import RunConfig, load_config
from .rgw import RgwConfig, RgwEnv

__all__ = ["AgentNet", "BoxWorldConfig", "BoxWorldEnv", "RgwConfig", "RgwEnv", "RunConfig", "load_config"]
__version__ = "0.1.0"
