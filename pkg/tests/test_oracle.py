import itertools

import numpy as np
import pytest

from relgrid.boxworld import BoxWorldConfig, BoxWorldEnv
from relgrid.gridcore import Action
from relgrid.oracle import OracleBudgetExceeded, optimal_reward, replay, solvable
from relgrid.rgw import RgwConfig, RgwEnv


def small_rgw(size=5, steps=30):
    return RgwEnv(RgwConfig(grid_size=size, num_pits=0, num_enemies=0, num_swords=0, num_mountains=0,
                            num_walls=0, num_teleports=0, max_steps=steps))


def brute_force(env, grid, horizon):
    """Best total reward over every action sequence of length <= horizon."""
    best = 0.0
    for seq in itertools.product(range(4), repeat=horizon):
        g = grid.copy()
        total = 0.0
        for a in seq:
            r, done, _ = env.transition(g, a)
            total += r
            if done:
                break
        best = max(best, total)
    return best


def test_boxworld_preset1_optimum(bw1):
    for seed in range(5):
        grid, _ = bw1.reset(seed)
        best = optimal_reward(bw1, grid)
        assert best.reward == 11.0
        assert replay(bw1, grid, best.actions) == (11.0, "gem")


def test_sword_taken_before_enemy_when_enemy_blocks():
    env = small_rgw(size=5)
    grid = env.from_ascii(["....S",
                           ".@...",
                           "##E##",
                           ".....",
                           "...T."])
    best = optimal_reward(env, grid)
    g = grid.copy()
    charges_when_meeting_enemy = None
    for a in best.actions:
        before = g.inventory["sword_charges"]
        r, done, _ = env.transition(g, a)
        if r == 1.0:
            charges_when_meeting_enemy = before
        if done:
            break
    assert charges_when_meeting_enemy == 1
    assert best.reward == 11.0


def test_off_path_enemy_sword_ignored():
    env = small_rgw(size=6)
    # the enemy sits in a walled pocket, so the sword cannot earn anything
    grid = env.from_ascii([".S....",
                           "......",
                           "...@T.",
                           "##....",
                           "E#....",
                           "##...."])
    best = optimal_reward(env, grid)
    assert best.reward == 10.0
    assert best.actions == [Action.RIGHT]


def test_reachable_enemy_is_worth_the_detour():
    env = small_rgw(size=5)
    grid = env.from_ascii([".S...", ".....", "...@T", ".....", "E...."])
    assert optimal_reward(env, grid).reward == 11.0


def test_solvable_neighbour_and_walled():
    env = small_rgw()
    assert solvable(env, env.from_ascii([".....", ".@T..", ".....", ".....", "....."]))
    walled = env.from_ascii([".....", ".@...", ".....", "...##", "...#T"])
    assert not solvable(env, walled)


def test_solvable_respects_step_cap():
    env = small_rgw(steps=3)
    grid = env.from_ascii([".....", ".@...", ".....", ".....", "....T"])
    assert not solvable(env, grid)
    env = small_rgw(steps=6)
    grid = env.from_ascii([".....", ".@...", ".....", ".....", "....T"])
    assert solvable(env, grid)


def test_budget():
    env = small_rgw(size=5, steps=30)
    grid = env.from_ascii([".....", ".@...", ".....", ".....", "....."])
    with pytest.raises(OracleBudgetExceeded):
        optimal_reward(env, grid, node_budget=50)


@pytest.mark.parametrize("seed", range(12))
def test_matches_brute_force_on_tiny_grids(seed):
    rng = np.random.default_rng(seed)
    env = RgwEnv(RgwConfig(grid_size=4, num_pits=1, num_enemies=1, num_swords=1, num_mountains=1,
                           num_walls=1, num_teleports=2, max_steps=6))
    grid, _ = env.reset(int(rng.integers(1 << 30)))
    best = optimal_reward(env, grid)
    assert best.reward == pytest.approx(brute_force(env, grid, 6), abs=1e-12)
    total, _ = replay(env, grid, best.actions)
    assert total == best.reward


@pytest.mark.parametrize("seed", range(4))
def test_boxworld_brute_force(seed):
    env = BoxWorldEnv(BoxWorldConfig.preset(2, grid_size=4, max_steps=7))
    grid, _ = env.reset(seed)
    best = optimal_reward(env, grid)
    assert best.reward == brute_force(env, grid, 7)
