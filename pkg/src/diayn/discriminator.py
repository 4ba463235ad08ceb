"""Skill discriminators ``q(z | s)``: smoothed counts for grids, a softmax net for boxes."""
from __future__ import annotations

import numpy as np

from .errors import InputError
from .nets import MLP, Adam, log_softmax


class TabularDiscriminator:
    """Laplace-smoothed visit counts: ``(counts[s, z] + lam) / (sum_z counts[s] + K lam)``."""

    kind = "tabular"

    def __init__(self, n_states, n_skills, smoothing=1.0):
        if smoothing <= 0:
            raise InputError("smoothing must be positive")
        self.counts = np.zeros((int(n_states), int(n_skills)))
        self.smoothing = float(smoothing)

    @property
    def n_skills(self):
        return self.counts.shape[1]

    def predict(self, states):
        c = self.counts[np.atleast_1d(np.asarray(states, dtype=np.int64))] + self.smoothing
        return c / c.sum(axis=1, keepdims=True)

    def log_probs(self, states):
        return np.log(self.predict(states))

    def update(self, states, zs):
        np.add.at(self.counts, (np.atleast_1d(states), np.atleast_1d(zs)), 1.0)

    def state(self):
        return {"kind": self.kind, "smoothing": self.smoothing, "shape": list(self.counts.shape),
                "counts": self.counts.ravel().tolist()}

    @classmethod
    def from_state(cls, st):
        d = cls(st["shape"][0], st["shape"][1], st["smoothing"])
        d.counts = np.array(st["counts"], dtype=float).reshape(st["shape"])
        return d


class SoftmaxDiscriminator:
    """Perceptron classifier over a feature projection ``f(s)`` of the state.

    ``f`` selects the coordinates listed in ``features`` (all by default) after
    rescaling the state box to ``[-1, 1]``.
    """

    kind = "softmax"

    def __init__(self, state_low, state_high, n_skills, hidden=(32,), features=None, lr=3e-3, rng=None):
        self.state_low = np.asarray(state_low, dtype=float)
        self.state_high = np.asarray(state_high, dtype=float)
        dim = self.state_low.shape[0]
        self.features = list(range(dim)) if features is None else [int(i) for i in features]
        if not self.features or any(not 0 <= i < dim for i in self.features):
            raise InputError(f"feature indices {self.features} invalid for a {dim}-d state")
        self.hidden = tuple(int(h) for h in hidden)
        self.net = MLP([len(self.features), *self.hidden, int(n_skills)], rng)
        self.opt = Adam(self.net.params, lr)

    @property
    def n_skills(self):
        return self.net.sizes[-1]

    def encode(self, states):
        s = np.atleast_2d(np.asarray(states, dtype=float))
        u = (s - self.state_low) / (self.state_high - self.state_low) * 2.0 - 1.0
        return u[:, self.features]

    def log_probs(self, states):
        return log_softmax(self.net(self.encode(states)))

    def predict(self, states):
        return np.exp(self.log_probs(states))

    def loss_and_grads(self, states, zs):
        """Mean cross-entropy ``-log q(z | s)`` over the batch and its gradients."""
        zs = np.atleast_1d(np.asarray(zs, dtype=np.int64))
        logits, acts = self.net.forward(self.encode(states))
        logp = log_softmax(logits)
        n = logits.shape[0]
        loss = -float(np.mean(logp[np.arange(n), zs]))
        d = np.exp(logp)
        d[np.arange(n), zs] -= 1.0
        return loss, self.net.backward(acts, d / n)

    def update(self, states, zs):
        _, grads = self.loss_and_grads(states, zs)
        self.opt.step(self.net.params, grads)

    def state(self):
        return {"kind": self.kind, "state_low": self.state_low.tolist(), "state_high": self.state_high.tolist(),
                "features": self.features, "hidden": list(self.hidden), "net": self.net.state(),
                "opt": self.opt.state()}

    @classmethod
    def from_state(cls, st):
        d = cls(st["state_low"], st["state_high"], st["net"]["sizes"][-1], st["hidden"], st["features"])
        d.net = MLP.from_state(st["net"])
        d.opt = Adam(d.net.params)
        d.opt.load(st["opt"])
        return d


def discriminator_from_state(st):
    if st["kind"] == "tabular":
        return TabularDiscriminator.from_state(st)
    if st["kind"] == "softmax":
        return SoftmaxDiscriminator.from_state(st)
    raise InputError(f"unknown discriminator kind {st['kind']!r}")


def disc_predict(d, s):
    """Posterior over skills for a single state."""
    return d.predict([s] if d.kind == "tabular" else np.atleast_2d(s))[0]


def disc_update(d, s, z_true):
    if not 0 <= int(z_true) < d.n_skills:
        raise InputError(f"skill {z_true} out of range for {d.n_skills} skills")
    d.update([s] if d.kind == "tabular" else np.atleast_2d(s), [int(z_true)])
    return d


def disc_accuracy(d, states, labels):
    """Fraction of states whose most probable skill (lowest index on ties) is the label."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise InputError("accuracy of an empty batch")
    pred = np.argmax(d.predict(states), axis=1)
    return float(np.mean(pred == labels))
