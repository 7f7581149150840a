import numpy as np
import pytest

from relgrid.boxworld import GEM, BoxWorldConfig, BoxWorldEnv, is_key, is_lock
from relgrid.gridcore import (
    AGENT,
    HUD_CELL,
    Action,
    EpisodeFinished,
    LayoutError,
    LayoutRejected,
    sample_layout,
)
from relgrid.rgw import RgwConfig, RgwEnv


def test_reset_same_seed_identical(bw1):
    a, oa = bw1.reset(7)
    b, ob = bw1.reset(7)
    assert np.array_equal(a.cells, b.cells)
    assert a.agent_pos == b.agent_pos
    assert np.array_equal(oa, ob)


def test_neighbouring_seeds_differ(bw1):
    differ = 0
    for s in range(1000):
        a, _ = bw1.reset(s)
        b, _ = bw1.reset(s + 1)
        differ += (not np.array_equal(a.cells, b.cells)) or a.agent_pos != b.agent_pos
    assert differ / 1000 >= 0.99


def test_preset1_contents(bw1):
    for seed in range(20):
        grid, _ = bw1.reset(seed)
        cells = grid.cells
        assert np.count_nonzero(cells == GEM) == 1
        assert sum(is_lock(int(v)) for v in cells.ravel()) == 1
        assert sum(is_key(int(v)) for v in cells.ravel()) == 1  # the free key only
        assert len(grid.layout["pairs"]) == 1
        assert cells[grid.agent_pos] == 0


def test_boundary_clamp(bw1):
    grid = bw1.from_ascii(["....", ".@..", "*A.a", "...."])
    grid.agent_pos = (0, 2)
    res = bw1.step(grid, Action.UP)
    assert grid.agent_pos == (0, 2)
    assert res.reward == 0 and not res.done


def test_hud_cell_is_impassable(bw1):
    grid = bw1.from_ascii([".@..", "....", "*A.a", "...."])
    res = bw1.step(grid, Action.LEFT)
    assert grid.agent_pos == (0, 1)
    assert res.reward == 0


def test_hud_cell_rejected_in_layouts(bw1):
    with pytest.raises(ValueError):
        bw1.from_ascii(["a...", ".@..", "*A..", "...."])


def test_rgw_terminal_neighbour():
    env = RgwEnv(RgwConfig.preset(1))
    grid = env.from_ascii(["....", ".@T.", "....", "...."])
    res = env.step(grid, Action.RIGHT)
    assert res.reward == 10.0 and res.done and res.info["cause"] == "terminal"
    assert res.info["success"]


def test_timeout_at_step_cap():
    env = BoxWorldEnv(BoxWorldConfig(grid_size=4, max_steps=5))
    grid = env.from_ascii(["....", ".@..", "*A..", "...a"])
    grid.step_count = 4
    res = env.step(grid, Action.RIGHT)
    assert res.done and res.info["cause"] == "timeout"
    assert not res.info["success"]


def test_step_after_done_raises(bw1):
    grid = bw1.from_ascii(["....", ".@*.", "bA..", "...."])
    bw1.step(grid, Action.RIGHT)
    assert grid.done
    with pytest.raises(EpisodeFinished):
        bw1.step(grid, Action.LEFT)


def test_render_empty_grid():
    env = RgwEnv(RgwConfig(grid_size=10, num_pits=0, num_enemies=0, num_swords=0, num_mountains=0,
                           num_walls=0, num_teleports=0))
    rows = ["." * 10 for _ in range(10)]
    rows[4] = "....@....."
    grid = env.from_ascii(rows)
    obs = env.render(grid)
    assert obs.shape == (10, 10, 3)
    nonzero = np.argwhere(obs.any(axis=-1))
    assert [tuple(p) for p in nonzero] == [(4, 4)]
    assert np.allclose(obs[4, 4], env.palette[AGENT])


def test_render_pure(bw1):
    grid, _ = bw1.reset(3)
    assert np.array_equal(bw1.render(grid), bw1.render(grid))


def test_render_four_encodings(bw1):
    grid, obs = bw1.reset(11)
    colors = {tuple(v) for v in obs.reshape(-1, 3) if v.any()}
    assert len(colors) == 4  # agent, gem, key, lock


def test_render_hud_shows_held_key():
    env = BoxWorldEnv(BoxWorldConfig(grid_size=4))
    grid = env.from_ascii(["....", ".@a.", "*A..", "...."])
    obs = env.step(grid, Action.RIGHT).observation
    assert np.allclose(obs[HUD_CELL], env.palette[10])


def test_sample_layout_retries_and_gives_up():
    calls = []

    def flaky(rng):
        calls.append(1)
        if len(calls) < 3:
            raise LayoutRejected("again")
        return BoxWorldEnv(BoxWorldConfig(grid_size=4)).from_ascii(["....", ".@..", "*A.a", "...."])

    grid = sample_layout(flaky, 5)
    assert len(calls) == 3 and grid.rng_seed == 5

    def never(rng):
        raise LayoutRejected("no")

    with pytest.raises(LayoutError):
        sample_layout(never, 0, max_retries=5)


def test_copy_is_independent(bw1):
    grid, _ = bw1.reset(0)
    twin = grid.copy()
    bw1.transition(twin, Action.DOWN)
    assert grid.step_count == 0
    assert twin.step_count == 1
