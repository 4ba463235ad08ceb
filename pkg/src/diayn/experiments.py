"""Desk-scale experiment recipes shared by the acceptance suite and scripts/.

Each function trains (or loads from an in-process cache) the runs it needs
and returns plain numbers, so callers decide what to print or assert.
"""
from __future__ import annotations

import time

import numpy as np

from .core import TrainConfig, rollout, train
from .discriminator import disc_accuracy
from .downstream import (episodes_to_threshold, expert_trajectories, finetune, imitate, meta_train,
                         skill_returns)
from .envs import TaskReward, goal_grid, in_corridor
from .oracle import exact_objective

# Actor-critic settings shared by every continuous run: a shorter credit
# horizon, per-batch advantage normalisation and a faster discriminator
# than the library defaults.
CONTINUOUS = dict(alpha=0.1, gamma=0.95, normalize_advantages=True, disc_lr=1e-2, batch_episodes=8)

_cache: dict = {}


def cached_train(config):
    """Train once per distinct config within a process."""
    key = repr(sorted(config.as_dict().items()))
    if key not in _cache:
        _cache[key] = train(config)[0]
    return _cache[key]


def gridworld_config(seed, skills=2, episodes=3000, alpha=1e-3, size=4):
    return TrainConfig(env={"name": "gridworld", "size": size}, skills=skills, alpha=alpha, episodes=episodes,
                       seed=seed)


def continuous_config(seed, skills=6, env="pointbox", episodes=4000, **kw):
    return TrainConfig(env={"name": env}, skills=skills, episodes=episodes, seed=seed,
                       **{**CONTINUOUS, "k_report": 200, **kw})


def gridworld_optimum(seed):
    """Exact ``H[Z|S]`` and ``H[Z]`` of trained 4x4 two-skill gridworld skills, and the wall time."""
    t0 = time.perf_counter()
    rs = train(gridworld_config(seed))[0]
    seconds = time.perf_counter() - t0
    policies = [rs.learner.policy_matrix(z) for z in range(rs.config.skills)]
    rep = exact_objective(rs.env, policies, rs.prior.p, init=rs.env.start_distribution())
    return rep.H_Z_given_S, rep.H_Z, seconds


def matthew_config(seed, prior):
    # VIC-style prior: scores and prior follow the latest episode, and the
    # discriminator learns slowly enough that rarely sampled skills lag
    return continuous_config(seed, skills=10, episodes=3000, prior=prior, disc_lr=5e-4, score_decay=0.0,
                             prior_decay=0.0, k_report=50)


def matthew_effect(seed, prior):
    """Effective number of skills at every report of a PointBox K=10 run."""
    _, _, reports = train(matthew_config(seed, prior))
    return [rep.effective_skills for _, rep in reports], reports


def final_states(rs, per_skill=10, seed=1):
    k = rs.config.skills
    zs = np.repeat(np.arange(k), per_skill)
    states, _ = rollout(rs, zs, greedy=False, rng=np.random.default_rng(seed))
    return zs, states


def dispersion(rs, per_skill=10, seed=1):
    """Minimum pairwise distance between skills' mean final states and the
    discriminator's accuracy on fresh on-policy states."""
    k = rs.config.skills
    zs, states = final_states(rs, per_skill, seed)
    means = np.array([states[zs == z, -1].mean(axis=0) for z in range(k)])
    d = np.linalg.norm(means[:, None] - means[None], axis=-1)
    d[np.eye(k, dtype=bool)] = np.inf
    scored = states[:, 1:].reshape(-1, states.shape[-1])
    acc = disc_accuracy(rs.disc, scored, np.repeat(zs, states.shape[1] - 1))
    return float(d.min()), float(acc), means


def hallway_exits(rs, per_skill=10, seed=1):
    """Number of skills whose mean final state lies outside the corridor."""
    k = rs.config.skills
    zs, states = final_states(rs, per_skill, seed)
    means = np.array([states[zs == z, -1].mean(axis=0) for z in range(k)])
    return int(np.sum(~in_corridor(means))), means


def finetune_comparison(rs, goal=(0.9, 0.1), budget=60, seed=0, window=10, lr=1e-3):
    """Episodes each arm needs to reach 90% of the way from the untrained
    policy's return to the best final return of either arm."""
    tr = TaskReward("goal_distance", goal=goal)
    pre = finetune(rs, tr, budget, "pretrained", seed=seed, lr=lr)
    rnd = finetune(rs, tr, budget, "random", seed=seed, lr=lr)
    base = rnd[0]
    final = max(np.mean(pre[-window:]), np.mean(rnd[-window:]))
    threshold = base + 0.9 * (final - base)
    return (episodes_to_threshold(pre, threshold, window), episodes_to_threshold(rnd, threshold, window),
            pre, rnd)


def hierarchy(rs, k=25, budget=200, seed=0):
    """Meta-controller mean return over the 25 grid goals and the mean return
    of the best single skill run on every goal."""
    tasks = [TaskReward("goal_distance", goal=g) for g in goal_grid()]
    _, _, final = meta_train(rs, tasks, k, budget, seed=seed)
    single = skill_returns(rs, tasks)
    return float(np.mean(final)), float(single.mean(axis=0).max())


def self_imitation_accuracy(rs, per_skill=20, seed=0):
    """Fraction of a checkpoint's own stochastic rollouts whose retrieved skill is the generating one."""
    zs, _, states, masks = expert_trajectories(rs, per_skill, seed)
    hits = 0
    for i, z in enumerate(zs):
        live = np.concatenate([[True], masks[i, :-1]])
        hits += imitate(rs.disc, states[i][live])[0] == z
    return hits / len(zs)
