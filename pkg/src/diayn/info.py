"""Discrete entropies (nats) and the objective report shared by estimators and the oracle."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


def entropy(p):
    p = np.asarray(p, dtype=float).ravel()
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def conditional_entropy(joint):
    """``H[Z | S]`` for a joint table ``joint[s, z]`` (normalised internally)."""
    joint = np.asarray(joint, dtype=float)
    joint = joint / joint.sum()
    ps = joint.sum(axis=1, keepdims=True)
    mask = joint > 0
    cond = np.divide(joint, ps, out=np.zeros_like(joint), where=ps > 0)
    return float(-np.sum(joint[mask] * np.log(cond[mask])))


def mutual_information(joint):
    """``I(S; Z) = sum p(s,z) log p(s,z) / (p(s) p(z))`` computed directly."""
    joint = np.asarray(joint, dtype=float)
    joint = joint / joint.sum()
    ps = joint.sum(axis=1, keepdims=True)
    pz = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    return float(np.sum(joint[mask] * np.log(joint[mask] / (ps * pz)[mask])))


def cross_term(joint, q):
    """``E_{p(s,z)}[log q(z|s) - log p(z)]``, the discriminator term of the bound."""
    joint = np.asarray(joint, dtype=float)
    joint = joint / joint.sum()
    pz = joint.sum(axis=0)
    mask = joint > 0
    logratio = np.log(np.asarray(q, dtype=float)) - np.log(np.where(pz > 0, pz, 1.0))[None, :]
    return float(np.sum(joint[mask] * logratio[mask]))


def effective_num_skills(prior):
    return math.exp(entropy(prior))


@dataclass
class ObjectiveReport:
    H_Z: float
    H_Z_given_S: float
    H_A_given_SZ: float
    F_estimate: float
    G_estimate: float
    effective_skills: float

    @classmethod
    def build(cls, H_Z, H_Z_given_S, H_A_given_SZ, G_estimate=None):
        F = H_Z - H_Z_given_S + H_A_given_SZ
        return cls(H_Z, H_Z_given_S, H_A_given_SZ, F, F if G_estimate is None else G_estimate, math.exp(H_Z))

    def as_dict(self):
        return asdict(self)
