"""Tiny numpy perceptrons with hand-written backward passes, plus Adam."""
from __future__ import annotations

import numpy as np

from .errors import NumericError

GRAD_NORM_LIMIT = 1e6


class MLP:
    """Fully connected net: tanh hidden layers, linear output.

    Parameters live in ``self.params`` as ``[W0, b0, W1, b1, ...]`` with
    ``W_i`` of shape ``(fan_in, fan_out)``; inputs are row batches.
    """

    def __init__(self, sizes, rng=None, out_scale=1.0):
        self.sizes = [int(s) for s in sizes]
        self.params = []
        for i, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            if rng is None:
                W = np.zeros((fan_in, fan_out))
            else:
                W = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_in, fan_out))
                if i == len(self.sizes) - 2:
                    W *= out_scale
            self.params += [W, np.zeros(fan_out)]

    def forward(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        acts = [x]
        h = x
        n_layers = len(self.params) // 2
        for i in range(n_layers):
            W, b = self.params[2 * i], self.params[2 * i + 1]
            h = h @ W + b
            if i < n_layers - 1:
                h = np.tanh(h)
            acts.append(h)
        return h, acts

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, acts, dout):
        """Gradients of ``sum(dout * output)`` w.r.t. every parameter."""
        grads = [None] * len(self.params)
        n_layers = len(self.params) // 2
        delta = dout
        for i in reversed(range(n_layers)):
            grads[2 * i] = acts[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.params[2 * i].T) * (1.0 - acts[i] ** 2)
        return grads

    def state(self):
        return {"sizes": self.sizes, "params": [p.tolist() for p in self.params]}

    @classmethod
    def from_state(cls, state):
        net = cls(state["sizes"])
        net.params = [np.array(p, dtype=float).reshape(q.shape) for p, q in zip(state["params"], net.params)]
        return net

    def copy(self):
        net = MLP(self.sizes)
        net.params = [p.copy() for p in self.params]
        return net


def check_grads(grads, where=""):
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))
    if not np.isfinite(norm) or norm > GRAD_NORM_LIMIT:
        raise NumericError(f"gradient norm {norm:.3g} exceeds {GRAD_NORM_LIMIT:g}{where}")
    return norm


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = float(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def state(self):
        return {"lr": self.lr, "t": self.t, "m": [a.tolist() for a in self.m], "v": [a.tolist() for a in self.v]}

    def load(self, state):
        self.lr = state["lr"]
        self.t = state["t"]
        self.m = [np.array(a, dtype=float).reshape(b.shape) for a, b in zip(state["m"], self.m)]
        self.v = [np.array(a, dtype=float).reshape(b.shape) for a, b in zip(state["v"], self.v)]


def log_softmax(logits):
    logits = np.asarray(logits, dtype=float)
    m = logits.max(axis=-1, keepdims=True)
    return logits - m - np.log(np.sum(np.exp(logits - m), axis=-1, keepdims=True))


def logsumexp(x, axis=-1):
    x = np.asarray(x, dtype=float)
    m = np.max(x, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(x - m), axis=axis))


def one_hot(z, k):
    z = np.atleast_1d(np.asarray(z, dtype=np.int64))
    out = np.zeros((z.shape[0], k))
    out[np.arange(z.shape[0]), z] = 1.0
    return out
