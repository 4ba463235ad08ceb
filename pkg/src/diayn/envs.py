"""Small episodic environments with seeded, deterministic dynamics.

Every environment steps a whole batch of states at once: ``reset`` returns an
array of ``n`` start states and ``step`` maps ``(states, actions)`` to
``(next_states, done)``.  Gridworld states are flat cell indices; the
continuous environments use float arrays of shape ``(n, state_dim)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, InputError


class Move(enum.IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


_DELTAS = {Move.UP: (0, 1), Move.DOWN: (0, -1), Move.LEFT: (-1, 0), Move.RIGHT: (1, 0)}


def gridworld_step(state, action, n):
    """Move one cell on an ``n x n`` grid with 1-based ``(x, y)`` coordinates.

    Moving off the grid leaves the agent where it is.
    """
    x, y = state
    if not (1 <= x <= n and 1 <= y <= n):
        raise InputError(f"state {state} outside a {n}x{n} grid")
    dx, dy = _DELTAS[Move(action)]
    nx, ny = x + dx, y + dy
    if 1 <= nx <= n and 1 <= ny <= n:
        return (nx, ny)
    return (x, y)


def _check_finite(a):
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InputError("action contains non-finite values")
    return a


def pointbox_step(s, a, max_step=0.1):
    """``clamp(s + clip(a, -max_step, max_step), 0, 1)`` componentwise."""
    a = _check_finite(a)
    return np.clip(np.asarray(s, dtype=float) + np.clip(a, -max_step, max_step), 0.0, 1.0)


# hallway layout: corridor on the left opening into a room on the right
CORRIDOR = ((0.0, 0.2), (0.45, 0.55))
ROOM = ((0.2, 1.0), (0.0, 1.0))


def _clamp_box(p, box):
    (x0, x1), (y0, y1) = box
    return np.stack([np.clip(p[..., 0], x0, x1), np.clip(p[..., 1], y0, y1)], axis=-1)


def in_corridor(p):
    """True where a free-space point lies strictly left of the corridor mouth."""
    return np.asarray(p, dtype=float)[..., 0] < CORRIDOR[0][1]


def in_free_space(p, tol=1e-12):
    p = np.asarray(p, dtype=float)
    out = np.zeros(p.shape[:-1], dtype=bool)
    for (x0, x1), (y0, y1) in (CORRIDOR, ROOM):
        out |= ((p[..., 0] >= x0 - tol) & (p[..., 0] <= x1 + tol)
                & (p[..., 1] >= y0 - tol) & (p[..., 1] <= y1 + tol))
    return out


def hallway_step(s, a, max_step=0.1):
    """Move within the corridor+room layout, projecting onto free space.

    The target ``s + clip(a)`` is projected to the nearest point of the union of
    the corridor and room rectangles.  Exact ties go to the region the agent
    started in.
    """
    a = _check_finite(a)
    s = np.asarray(s, dtype=float)
    target = s + np.clip(a, -max_step, max_step)
    pc = _clamp_box(target, CORRIDOR)
    pr = _clamp_box(target, ROOM)
    dc = np.sum((pc - target) ** 2, axis=-1)
    dr = np.sum((pr - target) ** 2, axis=-1)
    from_corridor = s[..., 0] < CORRIDOR[0][1]
    use_corridor = (dc < dr) | ((dc == dr) & from_corridor)
    return np.where(use_corridor[..., None], pc, pr)


MC_MIN_POS, MC_MAX_POS = -1.2, 0.6
MC_MAX_SPEED = 0.07
MC_GOAL = 0.45
MC_POWER = 0.0015


def mountaincar_step(pos, vel, a):
    """Continuous mountain-car dynamics; returns ``(pos', vel', done)``."""
    a = np.clip(_check_finite(a), -1.0, 1.0)
    vel = np.clip(vel + MC_POWER * a - 0.0025 * np.cos(3.0 * np.asarray(pos)), -MC_MAX_SPEED, MC_MAX_SPEED)
    pos = np.clip(pos + vel, MC_MIN_POS, MC_MAX_POS)
    vel = np.where((pos <= MC_MIN_POS) & (vel < 0), 0.0, vel)
    done = pos >= MC_GOAL
    if np.ndim(pos) == 0:
        return float(pos), float(vel), bool(done)
    return pos, vel, done


def direction_changes(xs, tol=1e-6):
    """Sign changes of the step-to-step motion of a position trace, ignoring
    steps smaller than ``tol``; also returns the sign of the first move."""
    dx = np.diff(np.asarray(xs, dtype=float))
    signs = np.sign(dx[np.abs(dx) > tol])
    if signs.size == 0:
        return 0, 0
    return int(np.sum(signs[1:] != signs[:-1])), int(signs[0])


def back_then_forward(xs, goal=MC_GOAL):
    """True for a mountain-car X trace that first backs up, later reverses,
    and ends at the goal."""
    changes, first = direction_changes(xs)
    return first < 0 and changes >= 1 and float(np.asarray(xs)[-1]) >= goal


class GridWorld:
    discrete = True
    name = "gridworld"

    def __init__(self, size=4, episode_length=50, start=None):
        if size < 1:
            raise ConfigError("gridworld size must be positive")
        self.size = int(size)
        self.episode_length = int(episode_length)
        # None -> uniform random start cell, else a 1-based (x, y)
        self.start = None if start is None else tuple(int(v) for v in start)
        self.n_states = self.size * self.size
        self.n_actions = len(Move)
        self.state_dim = 2
        self.state_low = np.array([1.0, 1.0])
        self.state_high = np.array([float(self.size)] * 2)
        succ = np.empty((self.n_states, self.n_actions), dtype=np.int64)
        for s in range(self.n_states):
            for a in Move:
                succ[s, a] = self.index(gridworld_step(self.coords(s), a, self.size))
        self.successor = succ

    def params(self):
        return {"name": self.name, "size": self.size, "episode_length": self.episode_length,
                "start": None if self.start is None else list(self.start)}

    def index(self, cell):
        x, y = cell
        return (x - 1) + (y - 1) * self.size

    def coords(self, s):
        s = np.asarray(s)
        out = np.stack([s % self.size + 1, s // self.size + 1], axis=-1)
        return tuple(int(v) for v in out) if out.ndim == 1 else out

    def positions(self, states):
        """Float ``(x, y)`` coordinates for distance computations."""
        return np.asarray(self.coords(np.asarray(states)), dtype=float).reshape(-1, 2)

    def start_distribution(self):
        if self.start is None:
            return np.full(self.n_states, 1.0 / self.n_states)
        p = np.zeros(self.n_states)
        p[self.index(self.start)] = 1.0
        return p

    def transition_matrices(self):
        """``T[a, s, s']`` for every action."""
        T = np.zeros((self.n_actions, self.n_states, self.n_states))
        for a in range(self.n_actions):
            T[a, np.arange(self.n_states), self.successor[:, a]] = 1.0
        return T

    def reset(self, rng, n=1):
        if self.start is None:
            return rng.integers(0, self.n_states, size=n)
        return np.full(n, self.index(self.start), dtype=np.int64)

    def step(self, states, actions):
        nxt = self.successor[np.asarray(states), np.asarray(actions)]
        return nxt, np.zeros(nxt.shape, dtype=bool)

    def normalize(self, states):
        return (self.positions(states) - 1.0) / max(self.size - 1, 1) * 2.0 - 1.0

    def bin_index(self, states, bins=None):
        return np.asarray(states)

    def n_bins(self, bins=None):
        return self.n_states


class _ContinuousEnv:
    discrete = False
    state_low: np.ndarray
    state_high: np.ndarray
    action_low: np.ndarray
    action_high: np.ndarray

    def positions(self, states):
        return np.asarray(states, dtype=float)

    def normalize(self, states):
        lo, hi = self.state_low, self.state_high
        return (np.asarray(states, dtype=float) - lo) / (hi - lo) * 2.0 - 1.0

    def bin_index(self, states, bins=10):
        """Flat index of a regular ``bins^d`` grid over the state box."""
        u = (np.asarray(states, dtype=float) - self.state_low) / (self.state_high - self.state_low)
        cell = np.clip((u * bins).astype(np.int64), 0, bins - 1)
        idx = np.zeros(cell.shape[0], dtype=np.int64)
        for d in range(cell.shape[1]):
            idx = idx * bins + cell[:, d]
        return idx

    def n_bins(self, bins=10):
        return bins ** self.state_dim


class PointBox(_ContinuousEnv):
    name = "pointbox"

    def __init__(self, episode_length=100, max_step=0.1):
        self.episode_length = int(episode_length)
        self.max_step = float(max_step)
        self.state_dim = 2
        self.action_dim = 2
        self.state_low = np.zeros(2)
        self.state_high = np.ones(2)
        self.action_low = np.full(2, -self.max_step)
        self.action_high = np.full(2, self.max_step)
        self.start = np.array([0.5, 0.5])

    def params(self):
        return {"name": self.name, "episode_length": self.episode_length, "max_step": self.max_step}

    def reset(self, rng, n=1):
        return np.tile(self.start, (n, 1))

    def step(self, states, actions):
        nxt = pointbox_step(states, actions, self.max_step)
        return nxt, np.zeros(nxt.shape[0], dtype=bool)


class HallwayRoom(PointBox):
    name = "hallway"

    def __init__(self, episode_length=100, max_step=0.1):
        super().__init__(episode_length, max_step)
        self.start = np.array([0.05, 0.5])

    def step(self, states, actions):
        nxt = hallway_step(states, actions, self.max_step)
        return nxt, np.zeros(nxt.shape[0], dtype=bool)


class MountainCar(_ContinuousEnv):
    name = "mountaincar"

    def __init__(self, episode_length=200):
        self.episode_length = int(episode_length)
        self.state_dim = 2
        self.action_dim = 1
        self.state_low = np.array([MC_MIN_POS, -MC_MAX_SPEED])
        self.state_high = np.array([MC_MAX_POS, MC_MAX_SPEED])
        self.action_low = np.array([-1.0])
        self.action_high = np.array([1.0])

    def params(self):
        return {"name": self.name, "episode_length": self.episode_length}

    def reset(self, rng, n=1):
        pos = rng.uniform(-0.6, -0.4, size=n)
        return np.stack([pos, np.zeros(n)], axis=1)

    def step(self, states, actions):
        states = np.asarray(states, dtype=float)
        pos, vel, done = mountaincar_step(states[:, 0], states[:, 1], np.asarray(actions)[:, 0])
        return np.stack([pos, vel], axis=1), done


ENVS = {cls.name: cls for cls in (GridWorld, PointBox, HallwayRoom, MountainCar)}


def make_env(params):
    """Build an environment from a parameter mapping with a ``name`` key."""
    params = dict(params)
    try:
        cls = ENVS[params.pop("name")]
    except KeyError as exc:
        raise ConfigError(f"unknown environment {exc.args[0]!r}; choose from {sorted(ENVS)}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {cls.name}: {exc}") from None


@dataclass
class TaskReward:
    """External reward used to evaluate or finetune skills.

    ``goal_distance`` gives ``-||s - goal||^2``; ``x_progress`` gives the change
    in the first state coordinate over one step; ``custom`` calls ``fn(s, prev)``.
    """
    kind: str = "goal_distance"
    goal: tuple | None = None
    fn: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("goal_distance", "x_progress", "custom"):
            raise InputError(f"unknown task reward kind {self.kind!r}")
        if self.kind == "goal_distance" and self.goal is None:
            raise InputError("goal_distance needs a goal")
        if self.kind == "custom" and self.fn is None:
            raise InputError("custom task reward needs fn")


def task_reward(tr, s, prev=None):
    """Reward for arriving at state(s) ``s``; batched over a leading axis."""
    s = np.asarray(s, dtype=float)
    if tr.kind == "goal_distance":
        g = np.asarray(tr.goal, dtype=float)
        if s.shape[-1] != g.shape[-1]:
            raise InputError(f"state has dimension {s.shape[-1]}, goal has {g.shape[-1]}")
        r = -np.sum((s - g) ** 2, axis=-1)
    elif tr.kind == "x_progress":
        if prev is None:
            raise InputError("x_progress needs the previous state")
        prev = np.asarray(prev, dtype=float)
        if prev.shape != s.shape:
            raise InputError("state and previous state differ in shape")
        r = s[..., 0] - prev[..., 0]
    else:
        r = np.asarray(tr.fn(s, prev), dtype=float)
    return float(r) if np.ndim(r) == 0 else r


def goal_grid(n=5, low=0.1, high=0.9):
    """``n x n`` goals spread evenly over the unit box."""
    ticks = np.linspace(low, high, n)
    return [(float(x), float(y)) for x in ticks for y in ticks]
