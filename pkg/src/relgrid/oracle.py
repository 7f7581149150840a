"""Exhaustive solvers over the environments' own transition function.

Both searches expand the real :meth:`GridEnv.transition` on copied grids, so
they share no logic with the layout generators they are used to check.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .gridcore import Action, Grid, GridEnv

DEFAULT_NODE_BUDGET = 5_000_000


class OracleBudgetExceeded(RuntimeError):
    pass


@dataclass
class OracleResult:
    reward: float
    actions: list[int]
    cause: str | None
    expansions: int = field(default=0, compare=False)

    @property
    def length(self) -> int:
        return len(self.actions)


def _unwind(path) -> list[int]:
    out = []
    while path is not None:
        path, a = path
        out.append(a)
    return out[::-1]


def optimal_reward(
    env: GridEnv,
    grid: Grid,
    horizon: int | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> OracleResult:
    """Maximum undiscounted episode reward from ``grid`` and one witness.

    Breadth-first over (agent position, cell contents, inventory), one layer
    per time step. Within a layer only the best-reward arrival at each state
    survives; ties keep the lexicographically smaller action sequence. Nodes
    whose reward plus :meth:`GridEnv.reward_upper_bound` cannot beat the best
    finished episode are dropped. Among equal rewards the shorter, then the
    lexicographically smaller, witness wins.
    """
    remaining = grid.max_steps - grid.step_count
    horizon = remaining if horizon is None else min(horizon, remaining)
    if grid.done or horizon <= 0:
        return OracleResult(0.0, [], None)

    best = None  # (reward, order, path, cause)
    expansions = 0
    # (grid, reward, path); frontier kept in lexicographic order of its paths
    frontier = [(grid.copy(), 0.0, None)]
    for depth in range(1, horizon + 1):
        layer: dict = {}
        children = []
        for rank, (node, reward, path) in enumerate(frontier):
            if best is not None and reward + env.reward_upper_bound(node) <= best[0]:
                continue
            for action in Action:
                child = node.copy()
                r, done, cause = env.transition(child, action)
                total = reward + r
                expansions += 1
                if expansions > node_budget:
                    raise OracleBudgetExceeded(f"oracle exceeded {node_budget} expansions")
                order = (rank, int(action))
                if done or depth == horizon:
                    if best is None or total > best[0]:
                        best = (total, order, (path, int(action)), cause)
                    continue
                key = env.state_key(child)
                slot = layer.get(key)
                if slot is None:
                    layer[key] = len(children)
                    children.append([order, child, total, (path, int(action))])
                elif total > children[slot][2]:
                    children[slot] = [order, child, total, (path, int(action))]
        if not children:
            break
        children.sort(key=lambda item: item[0])
        frontier = [(child, total, path) for _, child, total, path in children]

    if best is None:
        return OracleResult(0.0, [], None, expansions)
    return OracleResult(best[0], _unwind(best[2]), best[3], expansions)


def solvable(env: GridEnv, grid: Grid, node_budget: int = DEFAULT_NODE_BUDGET) -> bool:
    """True iff some action sequence reaches a success terminator before timeout."""
    if grid.done:
        return False
    seen = {env.state_key(grid)}
    frontier = [grid.copy()]
    expansions = 0
    while frontier:
        nxt = []
        for node in frontier:
            for action in Action:
                child = node.copy()
                _, done, cause = env.transition(child, action)
                expansions += 1
                if expansions > node_budget:
                    raise OracleBudgetExceeded(f"oracle exceeded {node_budget} expansions")
                if cause in env.success_causes:
                    return True
                if done:
                    continue
                key = env.state_key(child)
                if key not in seen:
                    seen.add(key)
                    nxt.append(child)
        frontier = nxt
    return False


def replay(env: GridEnv, grid: Grid, actions) -> tuple[float, str | None]:
    """Run ``actions`` through the environment on a copy; returns (total reward, cause)."""
    g = grid.copy()
    total = 0.0
    cause = None
    for a in actions:
        r, done, cause = env.transition(g, a)
        total += r
        if done:
            break
    return total, cause
