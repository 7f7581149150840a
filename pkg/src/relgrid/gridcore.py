"""Shared grid-world machinery: actions, the mutable grid state, stepping and rendering.

Environments subclass :class:`GridEnv` and supply a layout sampler
(:meth:`GridEnv.generate`), the per-cell interaction rule
(:meth:`GridEnv.interact`) and a palette. Everything else (movement,
boundaries, episode bookkeeping, observation encoding) lives here.

Cell (0, 0) is reserved as an inventory display ("HUD") cell in every
environment: nothing is ever placed there, the agent cannot enter it, and the
renderer paints it with whatever the agent currently carries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Callable, Hashable, NamedTuple

import numpy as np

EMPTY = 0
AGENT = 1

HUD_CELL = (0, 0)

DEFAULT_MAX_RETRIES = 100


class Action(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


DELTAS = {
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
}


class EpisodeFinished(RuntimeError):
    """Raised when stepping a grid whose episode already ended."""


class LayoutRejected(Exception):
    """A single sampling attempt could not satisfy the layout constraints."""


class LayoutError(RuntimeError):
    """The layout sampler failed on every retry."""


@dataclass
class Grid:
    cells: np.ndarray
    agent_pos: tuple[int, int]
    max_steps: int
    rng_seed: int = 0
    step_count: int = 0
    done: bool = False
    inventory: dict[str, Any] = field(default_factory=dict)
    # static, environment-specific bookkeeping shared between copies
    layout: dict[str, Any] = field(default_factory=dict)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def in_bounds(self, pos: tuple[int, int]) -> bool:
        r, c = pos
        return 0 <= r < self.height and 0 <= c < self.width

    def copy(self) -> "Grid":
        return Grid(
            cells=self.cells.copy(),
            agent_pos=self.agent_pos,
            max_steps=self.max_steps,
            rng_seed=self.rng_seed,
            step_count=self.step_count,
            done=self.done,
            inventory=dict(self.inventory),
            layout=self.layout,
        )


class Interaction(NamedTuple):
    """Outcome of the agent trying to enter a cell."""

    reward: float = 0.0
    enter: bool = True
    # where the agent ends up when it is not the target cell itself (teleports)
    dest: tuple[int, int] | None = None
    done: bool = False
    cause: str | None = None


BLOCKED = Interaction(enter=False)


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict[str, Any]


def sample_layout(
    generator: Callable[[np.random.Generator], Grid],
    seed: int,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> Grid:
    """Run ``generator`` with a generator seeded from ``seed`` until it succeeds.

    Retries draw from the same stream, so the result is a pure function of
    ``seed``.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        try:
            grid = generator(rng)
        except LayoutRejected:
            continue
        grid.rng_seed = seed
        return grid
    raise LayoutError(f"no valid layout after {max_retries} attempts (seed={seed})")


def free_cells(cells: np.ndarray, exclude=()) -> list[tuple[int, int]]:
    excluded = set(exclude) | {HUD_CELL}
    rows, cols = np.nonzero(cells == EMPTY)
    return [(int(r), int(c)) for r, c in zip(rows, cols) if (r, c) not in excluded]


def pick(rng: np.random.Generator, options: list):
    if not options:
        raise LayoutRejected("no candidate cell left")
    return options[int(rng.integers(len(options)))]


class GridEnv:
    """Base class for the grid environments.

    Subclasses set ``palette`` (tag -> RGB triple in [0, 1]), ``success_causes``
    and ``reward_alphabet``, and implement :meth:`generate` and :meth:`interact`.
    """

    name = "grid"
    channels = 3
    palette: dict[int, tuple[float, float, float]] = {EMPTY: (0.0, 0.0, 0.0), AGENT: (0.5, 0.5, 0.5)}
    success_causes: frozenset[str] = frozenset()
    max_steps = 100
    size = 10

    def __init__(self) -> None:
        self._lut = self._build_lut()

    def _build_lut(self) -> np.ndarray:
        top = max(self.palette) + 1
        lut = np.zeros((top, self.channels), dtype=np.float32)
        for tag, rgb in self.palette.items():
            lut[tag] = rgb
        return lut

    # -- hooks -----------------------------------------------------------
    def generate(self, rng: np.random.Generator) -> Grid:
        raise NotImplementedError

    def interact(self, grid: Grid, target: tuple[int, int]) -> Interaction:
        raise NotImplementedError

    def hud_tag(self, grid: Grid) -> int:
        """Tag displayed in the HUD cell; EMPTY when nothing is carried."""
        return EMPTY

    def inventory_key(self, grid: Grid) -> Hashable:
        return tuple(sorted(grid.inventory.items()))

    def reward_upper_bound(self, grid: Grid) -> float:
        """Upper bound on the reward still collectable from ``grid``."""
        raise NotImplementedError

    # -- episode lifecycle ------------------------------------------------
    @property
    def obs_shape(self) -> tuple[int, int, int]:
        return (self.size, self.size, self.channels)

    def reset(self, seed: int) -> tuple[Grid, np.ndarray]:
        grid = sample_layout(self.generate, seed)
        return grid, self.render(grid)

    def transition(self, grid: Grid, action: int) -> tuple[float, bool, str | None]:
        """Advance ``grid`` in place without rendering; returns (reward, done, cause)."""
        if grid.done:
            raise EpisodeFinished("episode already finished; call reset()")
        dr, dc = DELTAS[Action(action)]
        r, c = grid.agent_pos
        target = (r + dr, c + dc)
        outcome = BLOCKED
        if grid.in_bounds(target) and target != HUD_CELL:
            outcome = self.interact(grid, target)
            if outcome.enter:
                grid.agent_pos = outcome.dest if outcome.dest is not None else target
        grid.step_count += 1
        done, cause = outcome.done, outcome.cause
        if not done and grid.step_count >= grid.max_steps:
            done, cause = True, "timeout"
        grid.done = done
        return float(outcome.reward), done, cause

    def step(self, grid: Grid, action: int) -> StepResult:
        reward, done, cause = self.transition(grid, action)
        info = {"cause": cause, "success": cause in self.success_causes}
        return StepResult(self.render(grid), reward, done, info)

    def render(self, grid: Grid) -> np.ndarray:
        obs = self._lut[grid.cells]
        obs[HUD_CELL] = self._lut[self.hud_tag(grid)]
        obs[grid.agent_pos] = self._lut[AGENT]
        return obs

    def state_key(self, grid: Grid) -> Hashable:
        return (grid.agent_pos, grid.cells.tobytes(), self.inventory_key(grid))
