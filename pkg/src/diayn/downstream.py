"""Using trained skills: pick the best one, finetune it, compose skills with a
meta-controller, and retrieve the skill that best explains an expert's states.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, replace

import numpy as np

from .core import episode_task_returns, reward_histogram, rollout
from .envs import task_reward
from .errors import ConfigError, InputError
from .learner import ActorCritic, TabularLearner, soft_q_update
from .nets import Adam


def select_best_skill(rs, tr, eval_episodes=1, seed=None):
    """Skill with the highest mean task return under greedy execution (lowest index on ties)."""
    hist = reward_histogram(rs, tr, eval_episodes, greedy=True, seed=seed)
    means = np.array([np.mean(h) for h in hist])
    z = int(np.argmax(means))
    return z, float(means[z])


def _greedy_return(rs, learner, z, tr, rng):
    view = copy.copy(rs)
    view.learner = learner
    states, masks = rollout(view, [z], greedy=True, rng=rng)
    return float(episode_task_returns(view, states, masks, tr)[0])


def _task_episode(rs, learner, z, tr, rng, learn):
    """One stochastic episode of skill ``z`` rewarded by the task."""
    env = rs.env
    s = env.reset(rng, 1)
    xs, us, logps, rewards = [], [], [], []
    terminated = False
    for _ in range(env.episode_length):
        obs = rs.obs(s)
        a, info = learner.act(obs, [z], rng)
        s2, done = env.step(s, a)
        r = float(np.atleast_1d(task_reward(tr, env.positions(s2), env.positions(s)))[0])
        if learner.discrete:
            if learn:
                soft_q_update(learner.table, (z, int(s[0]), int(a[0]), r, int(s2[0])))
        else:
            xs.append(info["x"][0])
            us.append(info["u"][0])
            logps.append(info["logp"][0])
        rewards.append(r)
        s = s2
        if done[0]:
            terminated = True
            break
    if learn and not learner.discrete:
        learner.update([{"x": np.array(xs), "u": np.array(us), "rewards": np.array(rewards),
                         "logp": np.array(logps), "terminated": terminated,
                         "x_last": learner.inputs(rs.obs(s), [z])[0]}])
    return float(np.sum(rewards))


def finetune(rs, tr, budget, init="pretrained", seed=0, lr=None, env_name=None):
    """Continue RL on the task reward from the best skill's weights.

    ``init="random"`` is the control arm: same architecture and skill input,
    freshly initialised weights.  Returns the greedy return before training
    followed by the greedy return after each training episode.
    """
    if env_name is not None and env_name != rs.env.name:
        raise ConfigError(f"checkpoint was trained on {rs.env.name!r}, task needs {env_name!r}")
    if init not in ("pretrained", "random"):
        raise InputError(f"init must be pretrained or random, got {init!r}")
    z, _ = select_best_skill(rs, tr)
    rng = np.random.default_rng([seed, 104729])
    src = rs.learner
    if src.discrete:
        learner = TabularLearner(replace(src.table, q=src.table.q.copy()))
        if init == "random":
            learner.table.q[:] = 0.0
    else:
        lr = rs.config.lr if lr is None else lr
        if init == "pretrained":
            learner = ActorCritic.from_state(src.state())
            # fresh optimiser moments so both arms start from the same Adam state
            learner.policy_opt = Adam(learner.policy.net.params, lr)
            learner.value_opt = Adam(learner.value.params, lr)
        else:
            learner = ActorCritic(src.obs_dim, src.n_skills, src.policy.action_low, src.policy.action_high,
                                  src.alpha, src.gamma, lr, src.hidden, np.random.default_rng([seed, 7]),
                                  src.normalize_advantages)
        learner.set_lr(lr)
    eval_rng = np.random.default_rng([seed, 15485863])
    curve = [_greedy_return(rs, learner, z, tr, eval_rng)]
    for _ in range(budget):
        _task_episode(rs, learner, z, tr, rng, learn=True)
        curve.append(_greedy_return(rs, learner, z, tr, eval_rng))
    return curve


def episodes_to_threshold(curve, threshold, window=10):
    """First index at which the trailing ``window``-mean of ``curve`` reaches ``threshold``."""
    c = np.asarray(curve, dtype=float)
    for i in range(len(c)):
        if np.mean(c[max(0, i - window + 1):i + 1]) >= threshold:
            return i
    return len(c)


@dataclass
class MetaController:
    """Tabular Q over (state cell, skill); picks a skill to run for ``k`` steps."""
    q: np.ndarray  # [task, cell, skill]
    k: int
    bins: int

    def choose(self, cells, rng=None, eps=0.0):
        n_tasks = self.q.shape[0]
        vals = self.q[np.arange(n_tasks), cells]
        choice = np.argmax(vals, axis=1)
        if rng is not None and eps > 0:
            explore = rng.random(n_tasks) < eps
            choice = np.where(explore, rng.integers(0, self.q.shape[2], n_tasks), choice)
        return choice


def _meta_episode(rs, meta, trs, rng, eps, lr, gamma, learn):
    env = rs.env
    n = len(trs)
    s = env.reset(rng, n)
    alive = np.ones(n, dtype=bool)
    total = np.zeros(n)
    t = 0
    rows = np.arange(n)
    while t < env.episode_length and alive.any():
        cells = env.bin_index(s, meta.bins)
        zs = meta.choose(cells, rng, eps)
        ret = np.zeros(n)
        disc = np.ones(n)
        steps = min(meta.k, env.episode_length - t)
        for _ in range(steps):
            a = rs.learner.greedy(rs.obs(s), zs)
            s2, done = env.step(s, a)
            r = np.array([task_reward(tr, env.positions(s2)[i], env.positions(s)[i]) for i, tr in enumerate(trs)])
            r = np.where(alive, r, 0.0)
            ret += disc * r
            total += r
            disc *= gamma
            s = np.where(alive[:, None], s2, s) if s2.ndim > 1 else np.where(alive, s2, s)
            alive &= ~done
            t += 1
        if learn:
            last = (t >= env.episode_length) | ~alive
            nxt = meta.q[rows, env.bin_index(s, meta.bins)].max(axis=1)
            target = ret + np.where(last, 0.0, disc * nxt)
            meta.q[rows, cells, zs] += lr * (target - meta.q[rows, cells, zs])
    return total


def meta_train(rs, tasks, k, budget, seed=0, bins=5, lr=0.5, gamma=0.99, eps_end=0.05):
    """Q-learning over the ``k``-step skill semi-MDP; skills stay frozen.

    ``tasks`` is one :class:`TaskReward` or a list of them (trained side by side,
    each with its own Q table).  Returns the controller, the per-episode
    training returns ``[episode, task]`` and the final greedy returns per task.
    """
    if k < 1:
        raise InputError("skill horizon k must be >= 1")
    trs = [tasks] if not isinstance(tasks, (list, tuple)) else list(tasks)
    rng = np.random.default_rng([seed, 31337])
    n_cells = rs.env.n_bins(bins)
    meta = MetaController(np.zeros((len(trs), n_cells, rs.config.skills)), int(k), int(bins))
    curve = []
    for ep in range(budget):
        eps = max(eps_end, 1.0 - ep / max(1.0, 0.5 * budget))
        curve.append(_meta_episode(rs, meta, trs, rng, eps, lr, gamma, learn=True))
    final = _meta_episode(rs, meta, trs, np.random.default_rng([seed, 1]), 0.0, lr, gamma, learn=False)
    return meta, np.array(curve).reshape(budget, len(trs)), final


def skill_returns(rs, tasks):
    """Greedy return of every skill on every task: ``[task, skill]``."""
    k = rs.config.skills
    states, masks = rollout(rs, np.arange(k), greedy=True)
    return np.array([episode_task_returns(rs, states, masks, tr) for tr in tasks])


def imitate(disc, states):
    """Skill maximising ``sum_t log q(z | s_t)`` over the expert states, and the
    per-step geometric-mean confidence ``exp(mean_t log q(z_hat | s_t))``."""
    states = np.asarray(states)
    if states.shape[0] == 0:
        raise InputError("expert trajectory is empty")
    logq = disc.log_probs(states)
    total = logq.sum(axis=0)
    # summation order perturbs exact ties in the last bits; keep the lowest index
    best = total.max()
    z = int(np.flatnonzero(total >= best - 1e-9 * (1.0 + abs(best)))[0])
    return z, float(np.exp(total[z] / states.shape[0]))


def trajectory_distance(a, b):
    """Mean Euclidean distance between aligned states (longer one truncated)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise InputError("trajectory is empty")
    n = min(len(a), len(b))
    a, b = a[:n].reshape(n, -1), b[:n].reshape(n, -1)
    return float(np.mean(np.linalg.norm(a - b, axis=1)))


def expert_trajectories(rs, per_skill=1, seed=0, greedy=False):
    """Rollouts of every skill of ``rs``: ``(skills, positions[n, T+1, d])``."""
    zs = np.repeat(np.arange(rs.config.skills), per_skill)
    states, masks = rollout(rs, zs, greedy=greedy, rng=np.random.default_rng([seed, 271828]))
    pos = []
    for i in range(len(zs)):
        live = np.concatenate([[True], masks[i, :-1]])
        pos.append(rs.env.positions(states[i][live]))
    return zs, pos, states, masks


def imitation_study(imitator, experts, per_skill=1, seed=0):
    """Retrieve a skill for every expert rollout and score the imitation.

    Returns records with the expert's skill, the retrieved skill, the
    discriminator score and the L2 distance between expert and imitation.
    """
    records = []
    for e, expert in enumerate(experts):
        zs, _, states, masks = expert_trajectories(expert, per_skill, seed + e)
        for i, z_exp in enumerate(zs):
            live = np.concatenate([[True], masks[i, :-1]])
            raw = states[i][live]
            z_hat, score = imitate(imitator.disc, raw)
            imit, imask = rollout(imitator, [z_hat], greedy=True)
            ilive = np.concatenate([[True], imask[0, :-1]])
            dist = trajectory_distance(expert.env.positions(raw), imitator.env.positions(imit[0][ilive]))
            records.append({"expert": e, "expert_skill": int(z_exp), "skill": z_hat, "score": score,
                            "distance": dist})
    return records


def imitation_variants(base):
    """Training configs for the imitation comparison: the full method and its
    low-entropy, learned-prior and few-skills ablations."""
    return {
        "full": replace(base),
        "low_entropy": replace(base, alpha=base.alpha * 0.1),
        "learned_prior": replace(base, prior="learned"),
        "few_skills": replace(base, skills=5),
    }
