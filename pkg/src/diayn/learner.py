"""Skill-conditioned maximum-entropy learners.

``SoftQTable`` is tabular soft Q-learning for the gridworld.  ``ActorCritic``
is a tanh-squashed Gaussian policy plus a state-value net for continuous
boxes, trained with entropy-regularised Monte-Carlo returns; all gradients are
hand-derived (see :mod:`diayn.nets`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError
from .nets import MLP, Adam, check_grads, logsumexp, one_hot

LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


# ---------------------------------------------------------------- tabular

@dataclass
class SoftQTable:
    q: np.ndarray  # [skill, state, action]
    alpha: float = 0.1
    gamma: float = 0.99
    lr: float = 0.1

    @classmethod
    def zeros(cls, n_skills, n_states, n_actions, **kw):
        return cls(np.zeros((n_skills, n_states, n_actions)), **kw)

    @property
    def n_skills(self):
        return self.q.shape[0]


def soft_value(qt, z, s):
    """``alpha * logsumexp(Q[z, s, :] / alpha)``."""
    row = qt.q[z, s]
    return float(qt.alpha * logsumexp(row / qt.alpha))


def softmax_policy(qt, z, s):
    row = qt.q[z, s] / qt.alpha
    p = np.exp(row - row.max())
    return p / p.sum()


def policy_entropy(p):
    """Shannon entropy in nats; zero-probability entries contribute nothing."""
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def soft_q_update(qt, transition):
    """One soft Q-learning step on ``(z, s, a, r, s_next)``; mutates and returns ``qt``."""
    z, s, a, r, s_next = transition
    target = r + qt.gamma * soft_value(qt, z, s_next)
    qt.q[z, s, a] += qt.lr * (target - qt.q[z, s, a])
    return qt


class TabularLearner:
    """Adapter giving :class:`SoftQTable` the batched interface of the training loop."""

    discrete = True

    def __init__(self, table):
        self.table = table

    @property
    def n_skills(self):
        return self.table.n_skills

    def policy_matrix(self, z):
        """``pi[s, a]`` for skill ``z``."""
        logits = self.table.q[z] / self.table.alpha
        p = np.exp(logits - logits.max(axis=1, keepdims=True))
        return p / p.sum(axis=1, keepdims=True)

    def act(self, states, zs, rng):
        actions = np.empty(len(states), dtype=np.int64)
        ent = np.empty(len(states))
        for i, (s, z) in enumerate(zip(states, zs)):
            p = softmax_policy(self.table, z, s)
            c = np.cumsum(p)
            actions[i] = min(int(np.searchsorted(c, rng.random() * c[-1], side="right")), len(p) - 1)
            ent[i] = policy_entropy(p)
        return actions, {"entropy": ent}

    def greedy(self, states, zs):
        # argmax returns the lowest index on ties
        return np.array([int(np.argmax(self.table.q[z, s])) for s, z in zip(states, zs)])

    def observe(self, z, s, a, r, s_next):
        soft_q_update(self.table, (z, s, a, r, s_next))

    def state(self):
        t = self.table
        return {"kind": "tabular", "alpha": t.alpha, "gamma": t.gamma, "lr": t.lr,
                "shape": list(t.q.shape), "q": t.q.ravel().tolist()}

    @classmethod
    def from_state(cls, st):
        q = np.array(st["q"], dtype=float).reshape(st["shape"])
        return cls(SoftQTable(q, alpha=st["alpha"], gamma=st["gamma"], lr=st["lr"]))


# ------------------------------------------------------------- continuous

class GaussianPolicyNet:
    """``(state ⊕ one-hot z) -> (mean, log_std)``; actions squashed by tanh into a box."""

    def __init__(self, in_dim, action_low, action_high, hidden=(32, 32), rng=None, out_scale=0.1):
        self.action_low = np.asarray(action_low, dtype=float)
        self.action_high = np.asarray(action_high, dtype=float)
        self.action_dim = self.action_low.shape[0]
        self.net = MLP([in_dim, *hidden, 2 * self.action_dim], rng, out_scale=out_scale)

    @property
    def center(self):
        return 0.5 * (self.action_high + self.action_low)

    @property
    def scale(self):
        return 0.5 * (self.action_high - self.action_low)

    def heads(self, x):
        out, acts = self.net.forward(x)
        d = self.action_dim
        raw = out[:, d:]
        log_std = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
        return out[:, :d], log_std, raw, acts

    def squash(self, u):
        return self.center + self.scale * np.tanh(u)

    def log_prob_u(self, mean, log_std, u):
        eps = (u - mean) * np.exp(-log_std)
        gauss = np.sum(-0.5 * eps ** 2 - log_std - _HALF_LOG_2PI, axis=1)
        # log(1 - tanh(u)^2) written to stay finite for large |u|
        log_det = 2.0 * (math.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))
        return gauss - np.sum(np.log(self.scale) + log_det, axis=1)

    def log_prob_action(self, x, action):
        mean, log_std, _, _ = self.heads(x)
        y = np.clip((np.asarray(action, dtype=float) - self.center) / self.scale, -1 + 1e-12, 1 - 1e-12)
        return self.log_prob_u(mean, log_std, np.arctanh(y))

    def loss_and_grads(self, x, u, weights):
        """``L = -mean(weights * log pi(u | x))`` and its parameter gradients."""
        mean, log_std, raw, acts = self.heads(x)
        n = x.shape[0]
        logp = self.log_prob_u(mean, log_std, u)
        loss = -float(np.mean(weights * logp))
        inv_std = np.exp(-log_std)
        eps = (u - mean) * inv_std
        w = (-np.asarray(weights, dtype=float) / n)[:, None]
        d_mean = w * eps * inv_std
        d_log_std = w * (eps ** 2 - 1.0)
        d_log_std = np.where((raw > LOG_STD_MIN) & (raw < LOG_STD_MAX), d_log_std, 0.0)
        grads = self.net.backward(acts, np.concatenate([d_mean, d_log_std], axis=1))
        return loss, grads


def actor_forward(policy, x, noise):
    """Sample ``(action, log_prob)`` from pre-drawn standard normal ``noise``."""
    if not all(np.all(np.isfinite(p)) for p in policy.net.params):
        raise NumericError("policy weights contain non-finite values")
    mean, log_std, _, _ = policy.heads(x)
    u = mean + np.exp(log_std) * np.asarray(noise, dtype=float).reshape(mean.shape)
    return policy.squash(u), policy.log_prob_u(mean, log_std, u), u


def value_loss_and_grads(value_net, x, targets):
    v, acts = value_net.forward(x)
    diff = v[:, 0] - targets
    loss = 0.5 * float(np.mean(diff ** 2))
    grads = value_net.backward(acts, (diff / x.shape[0])[:, None])
    return loss, grads


def soft_returns(rewards, logps, alpha, gamma, bootstrap=0.0):
    """Entropy-regularised return-to-go ``G_t = r_t - alpha log pi_t + gamma G_{t+1}``."""
    g = float(bootstrap)
    out = np.empty(len(rewards))
    for t in range(len(rewards) - 1, -1, -1):
        g = rewards[t] - alpha * logps[t] + gamma * g
        out[t] = g
    return out


class ActorCritic:
    """Gaussian actor plus state-value critic, both conditioned on a one-hot skill."""

    discrete = False

    def __init__(self, obs_dim, n_skills, action_low, action_high, alpha=0.1, gamma=0.99,
                 lr=3e-3, hidden=(32, 32), rng=None, normalize_advantages=False):
        self.normalize_advantages = bool(normalize_advantages)
        self.obs_dim = int(obs_dim)
        self.n_skills = int(n_skills)
        self.alpha = float(alpha)
        self.gamma = float(gamma)
        self.hidden = tuple(int(h) for h in hidden)
        in_dim = self.obs_dim + self.n_skills
        self.policy = GaussianPolicyNet(in_dim, action_low, action_high, self.hidden, rng)
        self.value = MLP([in_dim, *self.hidden, 1], rng, out_scale=0.1)
        self.policy_opt = Adam(self.policy.net.params, lr)
        self.value_opt = Adam(self.value.params, lr)

    def inputs(self, obs, zs):
        obs = np.atleast_2d(obs)
        return np.concatenate([obs, one_hot(zs, self.n_skills)], axis=1)

    def act(self, obs, zs, rng):
        x = self.inputs(obs, zs)
        noise = rng.standard_normal((x.shape[0], self.policy.action_dim))
        action, logp, u = actor_forward(self.policy, x, noise)
        return action, {"logp": logp, "u": u, "x": x, "entropy": -logp}

    def greedy(self, obs, zs):
        mean, _, _, _ = self.policy.heads(self.inputs(obs, zs))
        return self.policy.squash(mean)

    def values(self, obs, zs):
        return self.value(self.inputs(obs, zs))[:, 0]

    def losses_and_grads(self, x, u, returns):
        adv = returns - self.value(x)[:, 0]
        if self.normalize_advantages and adv.shape[0] > 1:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        a_loss, a_grads = self.policy.loss_and_grads(x, u, adv)
        v_loss, v_grads = value_loss_and_grads(self.value, x, returns)
        return (a_loss, a_grads), (v_loss, v_grads)

    def update(self, episodes):
        """One gradient step on a batch of finished (or truncated) episodes.

        Each episode is a mapping with ``x`` (network inputs), ``u`` (pre-squash
        actions), ``rewards``, ``logp``, ``x_last`` and ``terminated``.
        """
        if not episodes:
            raise InputError("empty batch")
        xs, us, gs = [], [], []
        for ep in episodes:
            boot = 0.0 if ep["terminated"] else float(self.value(ep["x_last"][None, :])[0, 0])
            gs.append(soft_returns(ep["rewards"], ep["logp"], self.alpha, self.gamma, boot))
            xs.append(ep["x"])
            us.append(ep["u"])
        x, u, g = np.concatenate(xs), np.concatenate(us), np.concatenate(gs)
        (a_loss, a_grads), (v_loss, v_grads) = self.losses_and_grads(x, u, g)
        a_norm = check_grads(a_grads, " in the actor update")
        v_norm = check_grads(v_grads, " in the value update")
        self.policy_opt.step(self.policy.net.params, a_grads)
        self.value_opt.step(self.value.params, v_grads)
        return {"actor_loss": a_loss, "value_loss": v_loss, "actor_grad_norm": a_norm, "value_grad_norm": v_norm}

    def state(self):
        return {"kind": "actor_critic", "obs_dim": self.obs_dim, "n_skills": self.n_skills,
                "alpha": self.alpha, "gamma": self.gamma, "hidden": list(self.hidden),
                "normalize_advantages": self.normalize_advantages,
                "action_low": self.policy.action_low.tolist(), "action_high": self.policy.action_high.tolist(),
                "policy": self.policy.net.state(), "value": self.value.state(),
                "policy_opt": self.policy_opt.state(), "value_opt": self.value_opt.state()}

    @classmethod
    def from_state(cls, st):
        ac = cls(st["obs_dim"], st["n_skills"], st["action_low"], st["action_high"], st["alpha"],
                 st["gamma"], st["policy_opt"]["lr"], st["hidden"],
                 normalize_advantages=st["normalize_advantages"])
        ac.policy.net = MLP.from_state(st["policy"])
        ac.value = MLP.from_state(st["value"])
        ac.policy_opt = Adam(ac.policy.net.params)
        ac.policy_opt.load(st["policy_opt"])
        ac.value_opt = Adam(ac.value.params)
        ac.value_opt.load(st["value_opt"])
        return ac

    def set_lr(self, lr):
        self.policy_opt.lr = self.value_opt.lr = float(lr)


def learner_from_state(st):
    if st["kind"] == "tabular":
        return TabularLearner.from_state(st)
    return ActorCritic.from_state(st)
