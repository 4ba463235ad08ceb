"""The skill-discovery loop: sample a skill, roll it out, reward it with
``log q(z|s) - log p(z)``, and update policy and discriminator online.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .discriminator import SoftmaxDiscriminator, TabularDiscriminator, discriminator_from_state
from .envs import make_env, task_reward
from .errors import ConfigError, InputError, NumericError
from .info import ObjectiveReport, conditional_entropy, entropy
from .learner import ActorCritic, SoftQTable, TabularLearner, learner_from_state

METRIC_FIELDS = ("episode", "skill", "mean_pseudo_reward", "disc_accuracy",
                 "H_Z", "H_Z_given_S", "H_A_given_SZ", "effective_skills")


@dataclass
class TrainConfig:
    env: dict = field(default_factory=lambda: {"name": "gridworld", "size": 4})
    skills: int = 2
    alpha: float = 0.1
    gamma: float = 0.99
    episodes: int = 1000
    steps: int | None = None  # per episode; None -> the environment's default
    seed: int = 0
    prior: str = "fixed_uniform"  # or "learned"
    baseline: bool = True  # subtract log p(z) in the pseudo-reward
    disc_input: str = "next"  # "next" scores s_{t+1}, "current" scores s_t
    disc_features: list | None = None  # coordinate subset fed to the discriminator
    lr: float = 3e-3  # actor-critic Adam step
    q_lr: float = 0.1  # tabular soft-Q step
    disc_lr: float = 3e-3
    hidden: list = field(default_factory=lambda: [32, 32])
    disc_hidden: list = field(default_factory=lambda: [32])
    smoothing: float = 1.0
    normalize_advantages: bool = False
    batch_episodes: int = 1  # episodes rolled out together per actor-critic update
    score_decay: float = 0.9  # EMA over episode-mean log q(z|s), learned prior only
    prior_decay: float = 0.9  # blend of old prior and softmax(scores)
    k_report: int = 50
    report_bins: int = 10  # state bins for plug-in entropies on continuous envs

    def validate(self):
        if not isinstance(self.env, dict) or "name" not in self.env:
            raise ConfigError("env needs a 'name'")
        if self.skills < 2:
            raise ConfigError(f"skills must be >= 2, got {self.skills}")
        if self.steps is not None and self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.episodes < 0:
            raise ConfigError("episodes must be non-negative")
        if self.alpha < 0 or not 0 <= self.gamma < 1:
            raise ConfigError("need alpha >= 0 and 0 <= gamma < 1")
        if self.prior not in ("fixed_uniform", "learned"):
            raise ConfigError(f"prior must be fixed_uniform or learned, got {self.prior!r}")
        if self.disc_input not in ("next", "current"):
            raise ConfigError(f"disc_input must be next or current, got {self.disc_input!r}")
        for name in ("score_decay", "prior_decay"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"{name} must lie in [0, 1)")
        if self.batch_episodes < 1 or self.k_report < 1:
            raise ConfigError("batch_episodes and k_report must be >= 1")
        return self

    def as_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown train keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class SkillPrior:
    p: np.ndarray
    mode: str = "fixed_uniform"
    ema_decay: float = 0.9

    @classmethod
    def uniform(cls, k, mode="fixed_uniform", ema_decay=0.9):
        return cls(np.full(k, 1.0 / k), mode, ema_decay)

    def sample(self, rng, n=1):
        c = np.cumsum(self.p)
        return np.minimum(np.searchsorted(c, rng.random(n) * c[-1], side="right"), len(self.p) - 1)


def pseudo_reward(q_vec, prior, z, baseline=True):
    """``log q(z|s) - log p(z)`` (or just ``log q(z|s)`` without the baseline)."""
    q_vec = np.asarray(q_vec, dtype=float)
    if not 0 <= z < q_vec.shape[0]:
        raise InputError(f"skill {z} out of range for {q_vec.shape[0]} skills")
    r = math.log(q_vec[z])
    if baseline:
        r -= math.log(np.asarray(prior, dtype=float)[z])
    return r


def update_learned_prior(prior, scores):
    """Blend ``softmax(scores)`` into the prior with weight ``1 - ema_decay``."""
    if prior.mode != "learned":
        return prior
    scores = np.asarray(scores, dtype=float)
    if not np.all(np.isfinite(scores)):
        raise InputError("skill scores must be finite")
    target = np.exp(scores - scores.max())
    target /= target.sum()
    p = prior.ema_decay * prior.p + (1.0 - prior.ema_decay) * target
    return SkillPrior(p / p.sum(), prior.mode, prior.ema_decay)


def effective_num_skills(prior):
    p = prior.p if isinstance(prior, SkillPrior) else prior
    return math.exp(entropy(p))


@dataclass
class Trajectory:
    skill: int
    states: np.ndarray  # s_0 .. s_T
    actions: np.ndarray
    rewards: np.ndarray  # pseudo-rewards
    log_q: np.ndarray  # log q(z | scored state) at each step
    entropy: np.ndarray  # per-step action entropy (sampled -log pi on continuous envs)
    correct: np.ndarray  # discriminator argmax == skill, before its update
    terminated: bool = False

    def __len__(self):
        return len(self.rewards)

    @property
    def scored_states(self):
        return self.states[1:]


class _Window:
    """Running sums between objective reports."""

    def __init__(self, n_bins, k):
        self.joint = np.zeros((n_bins, k))
        self.ent = 0.0
        self.cross = 0.0
        self.n = 0

    def add(self, bins, z, ent, log_q, log_p):
        np.add.at(self.joint[:, z], bins, 1.0)
        self.ent += float(np.sum(ent))
        self.cross += float(np.sum(log_q) - len(log_q) * log_p)
        self.n += len(log_q)

    def report(self, prior):
        if self.n == 0:
            raise InputError("no transitions to estimate the objective from")
        h_a = self.ent / self.n
        return ObjectiveReport.build(entropy(prior), conditional_entropy(self.joint), h_a, h_a + self.cross / self.n)

    def state(self):
        return {"joint": self.joint.ravel().tolist(), "ent": self.ent, "cross": self.cross, "n": self.n}

    def load(self, st):
        self.joint = np.array(st["joint"], dtype=float).reshape(self.joint.shape)
        self.ent, self.cross, self.n = st["ent"], st["cross"], st["n"]


class RunState:
    """Everything a training run owns; also what a checkpoint holds."""

    def __init__(self, config, env, learner, disc, prior, scores, rng, episode=0):
        self.config = config
        self.env = env
        self.learner = learner
        self.disc = disc
        self.prior = prior
        self.scores = scores
        self.rng = rng
        self.episode = episode
        self.window = _Window(env.n_bins(config.report_bins), config.skills)
        self.last_report = None

    @classmethod
    def fresh(cls, config):
        config.validate()
        env_params = dict(config.env)
        if config.steps is not None:
            env_params["episode_length"] = config.steps
        env = make_env(env_params)
        rng = np.random.default_rng(config.seed)
        k = config.skills
        if env.discrete:
            learner = TabularLearner(SoftQTable.zeros(k, env.n_states, env.n_actions, alpha=config.alpha,
                                                      gamma=config.gamma, lr=config.q_lr))
            disc = TabularDiscriminator(env.n_states, k, config.smoothing)
        else:
            learner = ActorCritic(env.state_dim, k, env.action_low, env.action_high, config.alpha,
                                  config.gamma, config.lr, config.hidden, rng,
                                  config.normalize_advantages)
            disc = SoftmaxDiscriminator(env.state_low, env.state_high, k, config.disc_hidden,
                                        config.disc_features, config.disc_lr, rng)
        prior = SkillPrior.uniform(k, config.prior, config.prior_decay)
        scores = np.full(k, -math.log(k))
        return cls(config, env, learner, disc, prior, scores, rng)

    def obs(self, states):
        return states if self.env.discrete else self.env.normalize(states)

    def check(self):
        k = self.config.skills
        if self.learner.n_skills != k or self.disc.n_skills != k or len(self.prior.p) != k:
            raise ConfigError("learner, discriminator and prior disagree on the number of skills")


def run_episodes(rs, zs, learn=True, rng=None):
    """Roll out one episode per entry of ``zs`` in lock-step.

    With ``learn`` the tabular learner and the discriminator are updated after
    every step (reward first, then policy, then discriminator) and the
    actor-critic once at the end of the batch.
    """
    rs.check()
    env, learner, disc, cfg = rs.env, rs.learner, rs.disc, rs.config
    rng = rs.rng if rng is None else rng
    zs = np.asarray(zs, dtype=np.int64)
    n, horizon = len(zs), env.episode_length
    log_p = np.log(rs.prior.p)
    s = env.reset(rng, n)
    alive = np.ones(n, dtype=bool)
    length = np.full(n, horizon)
    terminated = np.zeros(n, dtype=bool)
    hist_s = [s]
    hist = {k: [] for k in ("a", "r", "logq", "ent", "correct", "logp", "u", "x")}
    rows = np.arange(n)
    for t in range(horizon):
        a, info = learner.act(rs.obs(s), zs, rng)
        s2, done = env.step(s, a)
        scored = s2 if cfg.disc_input == "next" else s
        logq_all = disc.log_probs(scored)
        logq = logq_all[rows, zs]
        r = logq - log_p[zs] if cfg.baseline else logq.copy()
        correct = np.argmax(logq_all, axis=1) == zs
        if learn:
            if learner.discrete:
                for i in np.flatnonzero(alive):
                    learner.observe(zs[i], s[i], a[i], r[i], s2[i])
            disc.update(scored[alive], zs[alive])
        hist_s.append(s2)
        for key, val in (("a", a), ("r", r), ("logq", logq), ("ent", info["entropy"]), ("correct", correct)):
            hist[key].append(val)
        if not learner.discrete:
            for key in ("logp", "u", "x"):
                hist[key].append(info[key])
        newly = alive & done
        length[newly] = t + 1
        terminated |= newly
        alive &= ~done
        s = s2
        if not alive.any():
            break
    stacked = {k: np.stack(v, axis=1) for k, v in hist.items() if v}
    states = np.stack(hist_s, axis=1)
    trajs = []
    for i in range(n):
        T = length[i]
        trajs.append(Trajectory(int(zs[i]), states[i, :T + 1], stacked["a"][i, :T], stacked["r"][i, :T],
                                stacked["logq"][i, :T], stacked["ent"][i, :T], stacked["correct"][i, :T],
                                bool(terminated[i])))
    if learn and not learner.discrete:
        batch = []
        for i, tr in enumerate(trajs):
            T = len(tr)
            batch.append({"x": stacked["x"][i, :T], "u": stacked["u"][i, :T], "rewards": tr.rewards,
                          "logp": stacked["logp"][i, :T], "terminated": tr.terminated,
                          "x_last": learner.inputs(rs.obs(tr.states[T:T + 1]), [tr.skill])[0]})
        learner.update(batch)
    return trajs


def run_episode(rs, z, learn=True):
    return run_episodes(rs, [z], learn)[0]


def _account(rs, tr):
    """Fold one finished episode into prior scores and the report window."""
    cfg = rs.config
    z = tr.skill
    if rs.prior.mode == "learned":
        rs.scores[z] = cfg.score_decay * rs.scores[z] + (1.0 - cfg.score_decay) * float(np.mean(tr.log_q))
    log_pz = math.log(rs.prior.p[z])
    scored = tr.states[1:] if cfg.disc_input == "next" else tr.states[:-1]
    rs.window.add(rs.env.bin_index(scored, cfg.report_bins), z, tr.entropy, tr.log_q, log_pz)
    if rs.prior.mode == "learned":
        rs.prior = update_learned_prior(rs.prior, rs.scores)


def train(config=None, state=None, callback=None):
    """Run the episode loop until ``config.episodes`` episodes have been played.

    Pass ``state`` to resume a checkpointed run.  Returns ``(state, records,
    reports)`` where ``records`` holds one metric row per episode and
    ``reports`` the ``(episode, ObjectiveReport)`` emitted every ``k_report``
    episodes.
    """
    rs = RunState.fresh(config) if state is None else state
    cfg = rs.config
    records, reports = [], []
    while rs.episode < cfg.episodes:
        n = min(cfg.batch_episodes, cfg.episodes - rs.episode)
        zs = rs.prior.sample(rs.rng, n)
        try:
            trajs = run_episodes(rs, zs)
        except NumericError as exc:
            raise NumericError(f"episode {rs.episode}: {exc}") from exc
        for tr in trajs:
            _account(rs, tr)
            rs.episode += 1
            if rs.episode % cfg.k_report == 0:
                rs.last_report = rs.window.report(rs.prior.p)
                rs.window = _Window(rs.env.n_bins(cfg.report_bins), cfg.skills)
                reports.append((rs.episode, rs.last_report))
                if callback is not None:
                    callback(rs, rs.last_report)
            rep = rs.last_report
            records.append({
                "episode": rs.episode, "skill": tr.skill,
                "mean_pseudo_reward": float(np.mean(tr.rewards)),
                "disc_accuracy": float(np.mean(tr.correct)),
                "H_Z": rep.H_Z if rep else math.nan,
                "H_Z_given_S": rep.H_Z_given_S if rep else math.nan,
                "H_A_given_SZ": rep.H_A_given_SZ if rep else math.nan,
                "effective_skills": rep.effective_skills if rep else math.nan,
            })
    return rs, records, reports


def eval_rng(rs, seed=None):
    return np.random.default_rng([rs.config.seed if seed is None else seed, 7919])


def estimate_objective(rs, eval_episodes, seed=None):
    """Objective terms from fresh on-policy rollouts (no learning).

    ``H[Z]`` is exact from the prior; ``H[Z|S]`` is the plug-in estimate from
    the empirical joint of skills and (binned) scored states; ``G`` uses the
    discriminator's log-probabilities.
    """
    if eval_episodes < 1:
        raise InputError("eval_episodes must be >= 1")
    rng = eval_rng(rs, seed)
    window = _Window(rs.env.n_bins(rs.config.report_bins), rs.config.skills)
    zs = rs.prior.sample(rng, eval_episodes)
    for tr in run_episodes(rs, zs, learn=False, rng=rng):
        scored = tr.states[1:] if rs.config.disc_input == "next" else tr.states[:-1]
        window.add(rs.env.bin_index(scored, rs.config.report_bins), tr.skill, tr.entropy, tr.log_q,
                   math.log(rs.prior.p[tr.skill]))
    return window.report(rs.prior.p)


def rollout(rs, zs, greedy=True, rng=None, horizon=None):
    """Evaluate skills without learning; returns ``(states[n, T+1, ...], alive_mask[n, T+1])``."""
    env, learner = rs.env, rs.learner
    rng = eval_rng(rs) if rng is None else rng
    zs = np.asarray(zs, dtype=np.int64)
    n = len(zs)
    horizon = env.episode_length if horizon is None else horizon
    s = env.reset(rng, n)
    alive = np.ones(n, dtype=bool)
    states, masks = [s], [alive.copy()]
    for _ in range(horizon):
        a = learner.greedy(rs.obs(s), zs) if greedy else learner.act(rs.obs(s), zs, rng)[0]
        s2, done = env.step(s, a)
        s = np.where(alive[:, None], s2, s) if s2.ndim > 1 else np.where(alive, s2, s)
        states.append(s)
        alive = alive & ~done
        masks.append(alive.copy())
    # a step counts if the agent was alive before taking it
    return np.stack(states, axis=1), np.stack(masks, axis=1)


def episode_task_returns(rs, states, masks, tr):
    """Sum of task rewards over the live steps of each rolled-out episode."""
    pos = [rs.env.positions(states[:, t]) for t in range(states.shape[1])]
    total = np.zeros(states.shape[0])
    for t in range(1, states.shape[1]):
        total += np.where(masks[:, t - 1], task_reward(tr, pos[t], pos[t - 1]), 0.0)
    return total


def reward_histogram(rs, tr, episodes_per_skill=1, greedy=True, seed=None):
    """Task-reward returns of every skill: a list of ``K`` lists."""
    rng = eval_rng(rs, seed)
    k = rs.config.skills
    zs = np.repeat(np.arange(k), episodes_per_skill)
    states, masks = rollout(rs, zs, greedy, rng)
    ret = episode_task_returns(rs, states, masks, tr)
    return [ret[zs == z].tolist() for z in range(k)]


def run_state_to_dict(rs):
    return {
        "config": rs.config.as_dict(),
        "env": rs.env.params(),
        "learner": rs.learner.state(),
        "discriminator": rs.disc.state(),
        "prior": {"p": rs.prior.p.tolist(), "mode": rs.prior.mode, "ema_decay": rs.prior.ema_decay},
        "scores": rs.scores.tolist(),
        "episode": rs.episode,
        "rng": rs.rng.bit_generator.state,
        "window": rs.window.state(),
        "last_report": None if rs.last_report is None else rs.last_report.as_dict(),
    }


def run_state_from_dict(d):
    config = TrainConfig.from_dict(d["config"])
    env = make_env(d["env"])
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = d["rng"]
    pr = d["prior"]
    prior = SkillPrior(np.array(pr["p"], dtype=float), pr["mode"], pr["ema_decay"])
    rs = RunState(config, env, learner_from_state(d["learner"]), discriminator_from_state(d["discriminator"]),
                  prior, np.array(d["scores"], dtype=float), rng, d["episode"])
    rs.window.load(d["window"])
    if d["last_report"] is not None:
        rs.last_report = ObjectiveReport(**d["last_report"])
    rs.check()
    return rs
