import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from diayn.envs import (CORRIDOR, ROOM, GridWorld, HallwayRoom, MountainCar, Move, PointBox, TaskReward,
                        back_then_forward, direction_changes, goal_grid, gridworld_step, hallway_step, in_free_space, make_env, mountaincar_step,
                        pointbox_step, task_reward)
from diayn.errors import ConfigError, InputError

unit = st.floats(0.0, 1.0)
small = st.floats(-1.0, 1.0)


# gridworld

@pytest.mark.parametrize("state, move, expected", [
    ((2, 2), Move.UP, (2, 3)),
    ((1, 2), Move.LEFT, (1, 2)),
    ((4, 4), Move.UP, (4, 4)),
    ((4, 1), Move.DOWN, (4, 1)),
    ((3, 3), Move.RIGHT, (4, 3)),
])
def test_gridworld_step_examples(state, move, expected):
    assert gridworld_step(state, move, 4) == expected


def test_gridworld_step_rejects_out_of_bounds():
    with pytest.raises(InputError):
        gridworld_step((0, 1), Move.UP, 4)


@given(st.integers(1, 7), st.data())
def test_gridworld_moves_stay_within_one_cell(n, data):
    x = data.draw(st.integers(1, n))
    y = data.draw(st.integers(1, n))
    for a in Move:
        nx, ny = gridworld_step((x, y), a, n)
        assert 1 <= nx <= n and 1 <= ny <= n
        assert abs(nx - x) + abs(ny - y) <= 1


def test_gridworld_class_matches_free_function():
    g = GridWorld(5)
    for s in range(g.n_states):
        for a in Move:
            assert g.coords(g.successor[s, a]) == gridworld_step(g.coords(s), a, 5)
    T = g.transition_matrices()
    np.testing.assert_array_equal(T.sum(axis=2), 1.0)


def test_gridworld_index_coords_roundtrip():
    g = GridWorld(4)
    for s in range(16):
        assert g.index(g.coords(s)) == s


# point box

@pytest.mark.parametrize("s, a, expected", [
    ((0.5, 0.5), (0.1, -0.1), (0.6, 0.4)),
    ((0.95, 0.5), (0.1, 0.0), (1.0, 0.5)),
    ((0.5, 0.5), (0.3, 0.0), (0.6, 0.5)),
])
def test_pointbox_examples(s, a, expected):
    np.testing.assert_allclose(pointbox_step(s, a), expected, atol=1e-15)


@pytest.mark.parametrize("bad", [(math.nan, 0.0), (0.0, math.inf)])
def test_pointbox_rejects_non_finite(bad):
    with pytest.raises(InputError):
        pointbox_step((0.5, 0.5), bad)


@given(unit, unit, small, small)
def test_pointbox_bounds_and_step_size(x, y, dx, dy):
    s2 = pointbox_step((x, y), (dx, dy))
    assert np.all((s2 >= 0) & (s2 <= 1))
    assert np.max(np.abs(s2 - (x, y))) <= 0.1 + 1e-12


# hallway

def test_hallway_translation_inside_corridor():
    np.testing.assert_allclose(hallway_step((0.05, 0.5), (0.05, 0.0)), (0.1, 0.5))


def test_hallway_wall_keeps_tangential_component():
    # pushing up and right against the corridor's top wall
    np.testing.assert_allclose(hallway_step((0.05, 0.54), (0.05, 0.05)), (0.1, 0.55))


def test_hallway_crossing_mouth_enters_room():
    s2 = hallway_step((0.15, 0.5), (0.1, 0.0))
    np.testing.assert_allclose(s2, (0.25, 0.5))
    assert s2[0] > 0.2


def _free(p, tol=1e-12):
    (cx0, cx1), (cy0, cy1) = CORRIDOR
    (rx0, rx1), (ry0, ry1) = ROOM
    x, y = p
    return ((cx0 - tol <= x <= cx1 + tol and cy0 - tol <= y <= cy1 + tol)
            or (rx0 - tol <= x <= rx1 + tol and ry0 - tol <= y <= ry1 + tol))


def test_hallway_projection_is_nearest_free_point_exhaustive():
    # brute force over a fine grid of free points; the projection can be no farther than any of them
    xs = np.linspace(0, 1, 201)
    pts = np.array([(x, y) for x in xs for y in xs if _free((x, y))])
    rng = np.random.default_rng(0)
    starts = pts[rng.choice(len(pts), 300)]
    acts = rng.uniform(-0.1, 0.1, size=(300, 2))
    out = hallway_step(starts, acts)
    assert np.all(in_free_space(out))
    targets = starts + acts
    d_out = np.linalg.norm(out - targets, axis=1)
    d_best = np.min(np.linalg.norm(pts[None] - targets[:, None], axis=2), axis=1)
    assert np.all(d_out <= d_best + 1e-12)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), small, small)
def test_hallway_stays_in_free_space(x, y, dx, dy):
    s = hallway_step((x, y), (0.0, 0.0))  # project arbitrary point first
    s2 = hallway_step(s, (dx, dy))
    assert in_free_space(s2)


def test_hallway_rejects_non_finite():
    with pytest.raises(InputError):
        hallway_step((0.05, 0.5), (math.nan, 0.0))


# mountain car

def test_mountaincar_formula():
    pos, vel, done = mountaincar_step(-0.5, 0.0, 0.0)
    assert vel == pytest.approx(-0.0025 * math.cos(-1.5), abs=1e-15)
    assert pos == pytest.approx(-0.5 + vel, abs=1e-15)
    assert not done


def test_mountaincar_goal():
    assert mountaincar_step(0.449, 0.07, 1.0)[2]


def test_mountaincar_zero_action_stays_in_valley():
    pos, vel = -0.5, 0.0
    for _ in range(200):
        pos, vel, done = mountaincar_step(pos, vel, 0.0)
        assert not done
        assert -1.2 <= pos < 0.45


def test_mountaincar_left_wall_zeroes_velocity():
    pos, vel, _ = mountaincar_step(-1.19, -0.07, -1.0)
    assert pos == -1.2 and vel == 0.0


def _pump(pos=-0.5, steps=200):
    # energy pumping: push along the velocity, starting backwards
    xs, vel = [pos], 0.0
    for _ in range(steps):
        pos, vel, done = mountaincar_step(pos, vel, 1.0 if vel > 0 else -1.0)
        xs.append(pos)
        if done:
            break
    return np.array(xs), done


def test_energy_pumping_solves_with_back_then_forward_trace():
    xs, done = _pump()
    assert done and back_then_forward(xs)
    assert direction_changes(xs)[1] == -1


def test_direction_changes_examples():
    assert direction_changes([0, 1, 2, 3]) == (0, 1)
    assert direction_changes([0, -1, -2, -1, 0, 1]) == (1, -1)
    assert direction_changes([0.0, 0.0]) == (0, 0)
    assert not back_then_forward(np.linspace(-0.5, 0.5, 50))
    assert not back_then_forward([-0.5, -0.6, -0.4, -0.2])


@given(st.floats(-1.2, 0.6), st.floats(-0.07, 0.07), st.floats(-5, 5))
def test_mountaincar_bounds(pos, vel, a):
    p2, v2, _ = mountaincar_step(pos, vel, a)
    assert -1.2 <= p2 <= 0.6 and -0.07 <= v2 <= 0.07


# batched classes

@pytest.mark.parametrize("env", [GridWorld(4), PointBox(), HallwayRoom(), MountainCar()])
def test_seeded_replay_is_bit_identical(env):
    def roll(seed):
        rng = np.random.default_rng(seed)
        s = env.reset(rng, 3)
        out = [s]
        for _ in range(20):
            if env.discrete:
                a = rng.integers(0, 4, 3)
            else:
                a = rng.uniform(env.action_low, env.action_high, size=(3, env.action_dim))
            s, _ = env.step(s, a)
            out.append(s)
        return np.array(out)
    np.testing.assert_array_equal(roll(7), roll(7))


@pytest.mark.parametrize("env", [PointBox(), HallwayRoom(), MountainCar()])
def test_bin_index_in_range(env, rng):
    s = rng.uniform(env.state_low, env.state_high, size=(500, 2))
    b = env.bin_index(s, 7)
    assert b.min() >= 0 and b.max() < env.n_bins(7)


def test_make_env_roundtrip_and_errors():
    for env in (GridWorld(5, 30, (1, 1)), PointBox(40), HallwayRoom(), MountainCar(150)):
        assert make_env(env.params()).params() == env.params()
    with pytest.raises(ConfigError):
        make_env({"name": "nowhere"})
    with pytest.raises(ConfigError):
        make_env({"name": "pointbox", "size": 3})


# task rewards

@pytest.mark.parametrize("goal, s, expected", [
    ((0.2, 0.2), (0.2, 0.2), 0.0),
    ((0.0, 0.0), (0.3, 0.4), -0.25),
    ((1.0, 1.0), (0.0, 0.0), -2.0),
])
def test_goal_distance(goal, s, expected):
    assert task_reward(TaskReward("goal_distance", goal), s) == pytest.approx(expected, abs=1e-15)


def test_x_progress_and_errors():
    assert task_reward(TaskReward("x_progress"), (0.3, 0.0), (0.1, 0.0)) == pytest.approx(0.2)
    with pytest.raises(InputError):
        task_reward(TaskReward("goal_distance", (0.0, 0.0, 0.0)), (0.1, 0.2))
    with pytest.raises(InputError):
        task_reward(TaskReward("x_progress"), (0.3, 0.0))
    with pytest.raises(InputError):
        TaskReward("goal_distance")


def test_custom_reward_and_goal_grid():
    tr = TaskReward("custom", fn=lambda s, prev: s[..., 1])
    np.testing.assert_allclose(task_reward(tr, np.array([[0.0, 0.5], [0.0, 0.25]])), [0.5, 0.25])
    goals = goal_grid()
    assert len(goals) == 25 and goals[0] == (0.1, 0.1) and goals[-1] == (0.9, 0.9)
