"""Relational-Grid-World: eight object kinds whose rewards depend on visit order.

Object semantics when the agent tries to enter a cell:

========  ==========================================================
terminal  +10, episode ends (success)
pit       -1, episode ends
enemy     +1 and removed if the agent carries a sword charge (one charge
          is consumed), otherwise -1 and the enemy stays
sword     one charge added, sword removed, reward 0
wall      movement blocked, reward 0
mountain  passable, ``mountain_penalty``
teleport  agent lands on the paired teleport, reward 0
========  ==========================================================
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .gridcore import (
    AGENT,
    BLOCKED,
    EMPTY,
    HUD_CELL,
    Grid,
    GridEnv,
    Interaction,
    LayoutRejected,
    free_cells,
    pick,
)

TERMINAL_REWARD = 10.0
SWORD_USE_REWARD = 1.0
PENALTY = -1.0


class RgwObject(IntEnum):
    AGENT = AGENT
    TERMINAL = 2
    PIT = 3
    ENEMY = 4
    SWORD = 5
    WALL = 6
    MOUNTAIN = 7
    TELEPORT = 8


PALETTE = {
    EMPTY: (0.0, 0.0, 0.0),
    RgwObject.AGENT: (0.5, 0.5, 0.5),
    RgwObject.TERMINAL: (0.0, 1.0, 0.0),
    RgwObject.PIT: (0.4, 0.2, 0.0),
    RgwObject.ENEMY: (1.0, 0.0, 0.0),
    RgwObject.SWORD: (1.0, 1.0, 0.0),
    RgwObject.WALL: (1.0, 1.0, 1.0),
    RgwObject.MOUNTAIN: (0.0, 0.4, 0.8),
    RgwObject.TELEPORT: (1.0, 0.0, 1.0),
}

_SYMBOLS = {
    ".": EMPTY,
    "T": RgwObject.TERMINAL,
    "P": RgwObject.PIT,
    "E": RgwObject.ENEMY,
    "S": RgwObject.SWORD,
    "#": RgwObject.WALL,
    "M": RgwObject.MOUNTAIN,
}


@dataclass(frozen=True)
class RgwConfig:
    grid_size: int = 10
    num_pits: int = 1
    num_enemies: int = 1
    num_swords: int = 1
    num_mountains: int = 3
    num_walls: int = 8
    num_teleports: int = 2
    mountain_penalty: float = -0.1
    max_steps: int = 200
    include_penalty_objects: bool = True

    def __post_init__(self):
        if self.grid_size < 3:
            raise ValueError("grid_size must be at least 3")
        counts = {
            "num_pits": self.num_pits,
            "num_enemies": self.num_enemies,
            "num_swords": self.num_swords,
            "num_mountains": self.num_mountains,
            "num_walls": self.num_walls,
            "num_teleports": self.num_teleports,
        }
        for key, value in counts.items():
            if value < 0:
                raise ValueError(f"{key} must be non-negative")
        if self.num_teleports == 1:
            raise ValueError("num_teleports must be 0 or at least 2")
        if self.num_teleports % 2:
            raise ValueError("teleports are placed in pairs; num_teleports must be even")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        # terminal + agent + hud cell
        needed = 3 + sum(counts.values())
        if needed > self.grid_size ** 2:
            raise ValueError(f"{needed} cells requested on a {self.grid_size}x{self.grid_size} grid")

    @property
    def pits(self) -> int:
        return self.num_pits if self.include_penalty_objects else 0

    @property
    def mountains(self) -> int:
        return self.num_mountains if self.include_penalty_objects else 0

    @classmethod
    def preset(cls, number: int, **overrides) -> "RgwConfig":
        if number not in (1, 2):
            raise ValueError(f"unknown RGW preset {number!r}; expected 1 or 2")
        return cls(include_penalty_objects=(number == 2), **overrides)


class RgwEnv(GridEnv):
    name = "rgw"
    palette = PALETTE
    success_causes = frozenset({"terminal"})

    def __init__(self, config: RgwConfig | None = None) -> None:
        self.config = config or RgwConfig()
        self.size = self.config.grid_size
        self.max_steps = self.config.max_steps
        self.reward_alphabet = frozenset(
            {0.0, TERMINAL_REWARD, SWORD_USE_REWARD, PENALTY, float(self.config.mountain_penalty)}
        )
        super().__init__()

    def make_grid(self, cells: np.ndarray, agent_pos, teleport_pairs=()) -> Grid:
        cells = np.asarray(cells, dtype=np.int16)
        if cells[HUD_CELL] != EMPTY:
            raise ValueError("cell (0, 0) is reserved for the inventory display")
        links = {}
        for a, b in teleport_pairs:
            a, b = tuple(a), tuple(b)
            if a in links or b in links or a == b:
                raise ValueError("each teleport belongs to exactly one pair")
            links[a], links[b] = b, a
            cells[a] = cells[b] = RgwObject.TELEPORT
        for r, c in zip(*np.nonzero(cells == RgwObject.TELEPORT)):
            if (int(r), int(c)) not in links:
                raise ValueError(f"teleport at {(int(r), int(c))} has no partner")
        return Grid(
            cells,
            tuple(agent_pos),
            self.max_steps,
            inventory={"sword_charges": 0},
            layout={"teleports": links},
        )

    def from_ascii(self, rows: list[str]) -> Grid:
        """Build a grid from text. Symbols: '.' empty, '@' agent, 'T' terminal,
        'P' pit, 'E' enemy, 'S' sword, '#' wall, 'M' mountain, and digits for
        teleports (the two cells sharing a digit form a pair)."""
        cells = np.zeros((len(rows), len(rows[0])), dtype=np.int16)
        agent = None
        ports: dict[str, list] = {}
        for r, line in enumerate(rows):
            for c, ch in enumerate(line):
                if ch == "@":
                    agent = (r, c)
                elif ch.isdigit():
                    ports.setdefault(ch, []).append((r, c))
                elif ch in _SYMBOLS:
                    cells[r, c] = _SYMBOLS[ch]
                else:
                    raise ValueError(f"unknown cell symbol {ch!r}")
        if agent is None:
            raise ValueError("layout has no agent '@'")
        for digit, spots in ports.items():
            if len(spots) != 2:
                raise ValueError(f"teleport {digit!r} must appear exactly twice")
        return self.make_grid(cells, agent, [tuple(v) for v in ports.values()])

    def generate(self, rng: np.random.Generator) -> Grid:
        from .oracle import solvable

        cfg = self.config
        n = cfg.grid_size
        cells = np.zeros((n, n), dtype=np.int16)

        def place(kind, count, candidates=None):
            spots = []
            for _ in range(count):
                options = candidates() if candidates else free_cells(cells)
                if not options:
                    options = free_cells(cells)
                spot = pick(rng, options)
                cells[spot] = kind
                spots.append(spot)
            return spots

        place(RgwObject.TERMINAL, 1)
        place(RgwObject.PIT, cfg.pits)
        swords = place(RgwObject.SWORD, cfg.num_swords)
        enemies = place(RgwObject.ENEMY, cfg.num_enemies)

        def between_sword_and_enemy():
            if not swords or not enemies:
                return []
            pts = np.array(swords + enemies)
            lo, hi = pts.min(axis=0), pts.max(axis=0)
            return [p for p in free_cells(cells) if lo[0] <= p[0] <= hi[0] and lo[1] <= p[1] <= hi[1]]

        place(RgwObject.MOUNTAIN, cfg.mountains, between_sword_and_enemy)
        place(RgwObject.WALL, cfg.num_walls)
        ports = place(RgwObject.TELEPORT, cfg.num_teleports)
        pairs = list(zip(ports[0::2], ports[1::2]))
        agent = pick(rng, free_cells(cells))
        grid = self.make_grid(cells, agent, pairs)
        if not solvable(self, grid):
            raise LayoutRejected("terminal unreachable")
        return grid

    def interact(self, grid: Grid, target: tuple[int, int]) -> Interaction:
        kind = int(grid.cells[target])
        if kind == EMPTY:
            return Interaction()
        if kind == RgwObject.TERMINAL:
            return Interaction(TERMINAL_REWARD, done=True, cause="terminal")
        if kind == RgwObject.PIT:
            return Interaction(PENALTY, done=True, cause="pit")
        if kind == RgwObject.ENEMY:
            if grid.inventory["sword_charges"] > 0:
                grid.inventory["sword_charges"] -= 1
                grid.cells[target] = EMPTY
                return Interaction(SWORD_USE_REWARD)
            return Interaction(PENALTY)
        if kind == RgwObject.SWORD:
            grid.inventory["sword_charges"] += 1
            grid.cells[target] = EMPTY
            return Interaction()
        if kind == RgwObject.WALL:
            return BLOCKED
        if kind == RgwObject.MOUNTAIN:
            return Interaction(float(self.config.mountain_penalty))
        if kind == RgwObject.TELEPORT:
            return Interaction(dest=grid.layout["teleports"][target])
        raise ValueError(f"unknown RGW cell tag {kind}")

    def hud_tag(self, grid: Grid) -> int:
        return RgwObject.SWORD if grid.inventory.get("sword_charges", 0) > 0 else EMPTY

    def reward_upper_bound(self, grid: Grid) -> float:
        enemies = int(np.count_nonzero(grid.cells == RgwObject.ENEMY))
        swords = int(np.count_nonzero(grid.cells == RgwObject.SWORD))
        usable = min(enemies, swords + grid.inventory["sword_charges"])
        return TERMINAL_REWARD + usable * SWORD_USE_REWARD
