"""Box-World: colored keys open same-colored locks along a unique chain to a gem.

A box pair is two horizontally adjacent cells: the lock on the right and its
content (a key of another color, or the gem) on the left. Keys that are not
part of a pair are "free" and can be picked up by walking onto them. Walking
onto a lock while holding the matching key opens it: the lock and its content
vanish and the content is granted at once.

Rewards: picking up or unlocking a solution key +1, gem +10 (ends the
episode), receiving the dead-end key at the bottom of a distractor branch -1.
Intermediate keys on a distractor branch are reward-neutral.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .gridcore import (
    BLOCKED,
    EMPTY,
    HUD_CELL,
    Grid,
    GridEnv,
    Interaction,
    LayoutRejected,
)

GEM = 2
KEY_BASE = 10
LOCK_BASE = 20
NUM_COLORS = 8

GEM_REWARD = 10.0
KEY_REWARD = 1.0
DISTRACTOR_REWARD = -1.0

HUES = [
    (1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 0.0, 1.0),
    (1.0, 1.0, 0.0),
    (1.0, 0.0, 1.0),
    (0.0, 1.0, 1.0),
    (1.0, 0.5, 0.0),
    (0.5, 0.0, 1.0),
]
LOCK_SHADE = 0.5

PALETTE = {EMPTY: (0.0, 0.0, 0.0), 1: (0.5, 0.5, 0.5), GEM: (1.0, 1.0, 1.0)}
for _i, _hue in enumerate(HUES):
    PALETTE[KEY_BASE + _i] = _hue
    PALETTE[LOCK_BASE + _i] = tuple(LOCK_SHADE * v for v in _hue)


def key_tag(color: int) -> int:
    return KEY_BASE + color


def lock_tag(color: int) -> int:
    return LOCK_BASE + color


def is_key(tag: int) -> bool:
    return KEY_BASE <= tag < KEY_BASE + NUM_COLORS


def is_lock(tag: int) -> bool:
    return LOCK_BASE <= tag < LOCK_BASE + NUM_COLORS


@dataclass(frozen=True)
class BoxWorldConfig:
    grid_size: int = 12
    solution_length: int = 1
    num_distractors: int = 0
    distractor_length: int = 1
    max_steps: int = 300

    def __post_init__(self):
        if self.grid_size < 4:
            raise ValueError("grid_size must be at least 4")
        if self.solution_length < 1 or self.distractor_length < 1:
            raise ValueError("solution_length and distractor_length must be positive")
        if self.num_distractors < 0:
            raise ValueError("num_distractors must be non-negative")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.colors_needed > NUM_COLORS:
            raise ValueError(f"layout needs {self.colors_needed} colors, only {NUM_COLORS} available")

    @property
    def colors_needed(self) -> int:
        return self.solution_length + self.num_distractors * self.distractor_length

    @classmethod
    def preset(cls, number: int, **overrides) -> "BoxWorldConfig":
        try:
            sol, dis = PRESETS[number]
        except KeyError:
            raise ValueError(f"unknown Box-World preset {number!r}; expected one of {sorted(PRESETS)}") from None
        return cls(solution_length=sol, num_distractors=dis, **overrides)


# preset -> (solution_length, num_distractors)
PRESETS = {1: (1, 0), 2: (1, 1), 3: (2, 0)}


@dataclass(frozen=True)
class BoxPair:
    lock_pos: tuple[int, int]
    key_pos: tuple[int, int]
    color_id: int
    content: int
    on_solution_path: bool
    dead_end: bool


def annotate_pairs(cells: np.ndarray) -> dict[tuple[int, int], BoxPair]:
    """Find every lock with its content and classify it against the gem chain."""
    h, w = cells.shape
    pairs = {}
    for r in range(h):
        for c in range(1, w):
            if is_lock(int(cells[r, c])):
                content = int(cells[r, c - 1])
                if not (is_key(content) or content == GEM):
                    raise ValueError(f"lock at {(r, c)} has no content on its left")
                pairs[(r, c)] = (content, int(cells[r, c]) - LOCK_BASE)

    lock_colors = {color for _, color in pairs.values()}
    by_content = {content: pos for pos, (content, _) in pairs.items()}
    solution = set()
    content = GEM
    while content in by_content:
        pos = by_content[content]
        solution.add(pos)
        content = key_tag(pairs[pos][1])

    out = {}
    for pos, (content, color) in pairs.items():
        dead = is_key(content) and (content - KEY_BASE) not in lock_colors
        out[pos] = BoxPair(pos, (pos[0], pos[1] - 1), color, content, pos in solution, dead)
    return out


class BoxWorldEnv(GridEnv):
    name = "boxworld"
    palette = PALETTE
    success_causes = frozenset({"gem"})

    def __init__(self, config: BoxWorldConfig | None = None) -> None:
        self.config = config or BoxWorldConfig()
        self.size = self.config.grid_size
        self.max_steps = self.config.max_steps
        super().__init__()

    reward_alphabet = frozenset({0.0, KEY_REWARD, GEM_REWARD, DISTRACTOR_REWARD})

    # -- construction ----------------------------------------------------
    def make_grid(self, cells: np.ndarray, agent_pos: tuple[int, int]) -> Grid:
        cells = np.asarray(cells, dtype=np.int16)
        if cells[HUD_CELL] != EMPTY:
            raise ValueError("cell (0, 0) is reserved for the inventory display")
        pairs = annotate_pairs(cells)
        layout = {"pairs": pairs, "contents": {p.key_pos: p for p in pairs.values()}}
        return Grid(cells, tuple(agent_pos), self.max_steps, inventory={"held": -1}, layout=layout)

    def from_ascii(self, rows: list[str]) -> Grid:
        """Build a grid from text: '.' empty, '@' agent, '*' gem,
        'a'-'h' keys, 'A'-'H' locks (a key or gem directly left of a lock is its content)."""
        cells = np.zeros((len(rows), len(rows[0])), dtype=np.int16)
        agent = None
        for r, line in enumerate(rows):
            for c, ch in enumerate(line):
                if ch == "@":
                    agent = (r, c)
                elif ch == "*":
                    cells[r, c] = GEM
                elif "a" <= ch <= "h":
                    cells[r, c] = key_tag(ord(ch) - ord("a"))
                elif "A" <= ch <= "H":
                    cells[r, c] = lock_tag(ord(ch) - ord("A"))
                elif ch != ".":
                    raise ValueError(f"unknown cell symbol {ch!r}")
        if agent is None:
            raise ValueError("layout has no agent '@'")
        return self.make_grid(cells, agent)

    def generate(self, rng: np.random.Generator) -> Grid:
        cfg = self.config
        n = cfg.grid_size
        colors = [int(c) for c in rng.permutation(NUM_COLORS)[: cfg.colors_needed]]
        chain = colors[: cfg.solution_length]
        spare = colors[cfg.solution_length:]

        boxes = []  # (content_tag, lock_color)
        for i, color in enumerate(chain):
            content = key_tag(chain[i + 1]) if i + 1 < len(chain) else GEM
            boxes.append((content, color))
        for _ in range(cfg.num_distractors):
            prev = chain[int(rng.integers(len(chain)))]
            for _ in range(cfg.distractor_length):
                nxt = spare.pop()
                boxes.append((key_tag(nxt), prev))
                prev = nxt

        cells = np.zeros((n, n), dtype=np.int16)
        taken = np.zeros((n, n), dtype=bool)
        taken[HUD_CELL] = True

        def claim(cells_to_take):
            for r, c in cells_to_take:
                taken[max(r - 1, 0): r + 2, c] = True
                taken[r, max(c - 1, 0): c + 2] = True

        for content, color in boxes:
            spots = [(r, c) for r in range(n) for c in range(n - 1) if not taken[r, c] and not taken[r, c + 1]]
            if not spots:
                raise LayoutRejected("no room for box pair")
            r, c = spots[int(rng.integers(len(spots)))]
            cells[r, c], cells[r, c + 1] = content, lock_tag(color)
            claim([(r, c), (r, c + 1)])

        spots = [(r, c) for r in range(n) for c in range(n) if not taken[r, c]]
        if not spots:
            raise LayoutRejected("no room for free key")
        key_pos = spots[int(rng.integers(len(spots)))]
        cells[key_pos] = key_tag(chain[0])

        empty = [(r, c) for r in range(n) for c in range(n) if cells[r, c] == EMPTY and (r, c) != HUD_CELL]
        if not empty:
            raise LayoutRejected("no room for agent")
        agent = empty[int(rng.integers(len(empty)))]
        grid = self.make_grid(cells, agent)
        if not _targets_reachable(grid):
            raise LayoutRejected("a box is walled off")
        return grid

    # -- dynamics --------------------------------------------------------
    def interact(self, grid: Grid, target: tuple[int, int]) -> Interaction:
        tag = int(grid.cells[target])
        if tag == EMPTY:
            return Interaction()
        if tag == GEM:
            if target in grid.layout["contents"]:
                return BLOCKED
            grid.cells[target] = EMPTY
            return Interaction(GEM_REWARD, done=True, cause="gem")
        if is_key(tag):
            if target in grid.layout["contents"]:
                return BLOCKED
            grid.cells[target] = EMPTY
            grid.inventory["held"] = tag - KEY_BASE
            return Interaction(KEY_REWARD)
        if is_lock(tag):
            pair = grid.layout["pairs"][target]
            if grid.inventory["held"] != pair.color_id:
                return BLOCKED
            grid.cells[target] = EMPTY
            grid.cells[pair.key_pos] = EMPTY
            if pair.content == GEM:
                grid.inventory["held"] = -1
                return Interaction(GEM_REWARD, done=True, cause="gem")
            grid.inventory["held"] = pair.content - KEY_BASE
            if pair.on_solution_path:
                return Interaction(KEY_REWARD)
            if pair.dead_end:
                return Interaction(DISTRACTOR_REWARD)
            return Interaction()
        raise ValueError(f"unknown Box-World cell tag {tag}")

    def hud_tag(self, grid: Grid) -> int:
        held = grid.inventory.get("held", -1)
        return EMPTY if held < 0 else key_tag(held)

    def reward_upper_bound(self, grid: Grid) -> float:
        cells = grid.cells
        keys = 0
        for pos, pair in grid.layout["pairs"].items():
            if cells[pos] != EMPTY and pair.on_solution_path and pair.content != GEM:
                keys += 1
        for r, c in zip(*np.nonzero((cells >= KEY_BASE) & (cells < KEY_BASE + NUM_COLORS))):
            if (int(r), int(c)) not in grid.layout["contents"]:
                keys += 1
        return keys * KEY_REWARD + GEM_REWARD


def _targets_reachable(grid: Grid) -> bool:
    """Every free key and lock borders the agent's empty-cell component."""
    cells = grid.cells
    n_r, n_c = cells.shape
    seen = {grid.agent_pos}
    queue = deque([grid.agent_pos])
    while queue:
        r, c = queue.popleft()
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            nb = (r + dr, c + dc)
            if 0 <= nb[0] < n_r and 0 <= nb[1] < n_c and nb not in seen and nb != HUD_CELL and cells[nb] == EMPTY:
                seen.add(nb)
                queue.append(nb)
    contents = grid.layout["contents"]
    for r in range(n_r):
        for c in range(n_c):
            tag = int(cells[r, c])
            if tag == EMPTY or (r, c) in contents:
                continue
            if not any((r + dr, c + dc) in seen for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1))):
                return False
    return True


def free_key_cells(grid: Grid) -> list[tuple[int, int]]:
    """Cells holding a loose key (one that is not the content of a box)."""
    cells = grid.cells
    found = zip(*np.nonzero((cells >= KEY_BASE) & (cells < KEY_BASE + NUM_COLORS)))
    return [(int(r), int(c)) for r, c in found if (int(r), int(c)) not in grid.layout["contents"]]
