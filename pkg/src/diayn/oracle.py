"""Exact analysis of skills on gridworlds: stationary distributions, the exact
objective decomposition, the two-skill partition optimum and border counting.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.sparse.csgraph import connected_components

from .envs import GridWorld
from .errors import InputError, NumericError
from .info import ObjectiveReport, conditional_entropy, cross_term, entropy

LOG4 = math.log(4.0)


def check_chain(P, tol=1e-12):
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise InputError("transition matrix must be square")
    if np.any(P < 0) or np.max(np.abs(P.sum(axis=1) - 1.0)) > tol:
        raise InputError("rows of a transition matrix must be non-negative and sum to 1")
    return P


def closed_classes(P):
    """Strongly connected components that no transition leaves."""
    n_comp, labels = connected_components(P > 0, directed=True, connection="strong")
    closed = []
    for c in range(n_comp):
        members = np.flatnonzero(labels == c)
        if np.all(P[np.ix_(members, np.flatnonzero(labels != c))] == 0):
            closed.append(members)
    return closed


def stationary_distribution(P, init=None, tol=1e-12, max_iter=100_000):
    """Fixed point ``rho P = rho`` by power iteration on the lazy chain ``(I + P) / 2``.

    The lazy chain shares the stationary distributions of ``P`` but is
    aperiodic, so the iteration converges even for periodic chains.  Without
    ``init`` the chain must have a single closed class (else the answer is not
    unique); with ``init`` the result is the long-run distribution from it.
    """
    P = check_chain(P)
    if init is None:
        n_closed = len(closed_classes(P))
        if n_closed != 1:
            raise NumericError(f"reducible chain: {n_closed} closed classes, stationary distribution not unique")
        x = np.full(P.shape[0], 1.0 / P.shape[0])
    else:
        x = np.asarray(init, dtype=float)
        x = x / x.sum()
    for _ in range(max_iter):
        xp = x @ P
        if np.sum(np.abs(xp - x)) < tol:
            return xp / xp.sum()
        x = 0.5 * (x + xp)
    raise NumericError(f"power iteration did not reach tolerance {tol:g} in {max_iter} iterations")


def policy_chain(T, pi):
    """State chain ``P[s, s'] = sum_a pi[s, a] T[a, s, s']``.

    Rows of ``pi`` may sum to less than one: the missing mass keeps the agent in
    place without being an action choice (this is how a partition policy avoids
    stepping into another skill's cells).
    """
    pi = np.asarray(pi, dtype=float)
    P = np.einsum("sa,ast->st", pi, T)
    # clip round-off so a row summing to 1 + 1e-16 does not leave a negative entry
    P[np.diag_indices_from(P)] += np.maximum(1.0 - pi.sum(axis=1), 0.0)
    return P


def episodic_visitation(P, init, horizon):
    """Average of the state distributions after steps ``1..horizon`` from ``init``."""
    x = np.asarray(init, dtype=float)
    acc = np.zeros_like(x)
    for _ in range(horizon):
        x = x @ P
        acc += x
    return acc / horizon


def action_entropies(pi):
    """Per-state ``-sum_a pi log pi`` over actual action choices."""
    pi = np.asarray(pi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pi > 0, -pi * np.log(pi), 0.0)
    return terms.sum(axis=-1)


def objective_from_distributions(rho, prior, action_entropy=None, q=None):
    """Exact report for per-skill state distributions ``rho[z, s]``.

    ``q[s, z]``, if given, is a discriminator whose bound ``G`` is reported.
    """
    rho = np.asarray(rho, dtype=float)
    prior = np.asarray(prior, dtype=float)
    joint = (prior[:, None] * rho).T
    h_a = 0.0 if action_entropy is None else float(np.sum(joint.T * np.asarray(action_entropy)))
    g = None if q is None else h_a + cross_term(joint, q)
    return ObjectiveReport.build(entropy(prior), conditional_entropy(joint), h_a, g)


def exact_objective(grid, policies, prior, init=None, horizon=None, q=None):
    """Exact ``H[Z]``, ``H[Z|S]``, ``H[A|S,Z]`` and ``F`` for tabular skills.

    State distributions are stationary distributions (``horizon=None``) or the
    exact average visitation of ``horizon``-step episodes started from ``init``.
    """
    T = grid.transition_matrices()
    rho, ent = [], []
    for pi in policies:
        P = policy_chain(T, pi)
        if horizon is None:
            rho.append(stationary_distribution(P, init))
        else:
            rho.append(episodic_visitation(P, grid.start_distribution() if init is None else init, horizon))
        ent.append(action_entropies(pi))
    return objective_from_distributions(np.array(rho), prior, np.array(ent), q)


def partition_policies(grid, labels):
    """Per-skill policies that random-walk uniformly inside their own cells.

    In its own cells skill ``z`` puts 1/4 on every move that stays inside the
    class (bumping a wall counts) and nothing on moves into another class.
    Outside its class it walks uniformly, so those cells are transient.
    """
    labels = np.asarray(labels).ravel()
    k = int(labels.max()) + 1
    own = labels[grid.successor] == labels[:, None]
    pols = np.full((k, grid.n_states, grid.n_actions), 0.25)
    for z in range(k):
        mine = labels == z
        pols[z, mine] = np.where(own[mine], 0.25, 0.0)
    return pols


def half_labels(n):
    """Bottom/top split of an ``n x n`` grid: skill 0 owns ``y <= n/2``."""
    grid = GridWorld(n)
    y = grid.coords(np.arange(grid.n_states))[:, 1]
    return (y > n // 2).astype(int)


def fig5_policies(n):
    if n % 2:
        raise InputError(f"the half-grid partition needs even N, got {n}")
    return partition_policies(GridWorld(n), half_labels(n))


def verify_fig5_policy(n=4, policies=None, tol=1e-9):
    """Check the half-grid random-walk skills have stationary distribution
    ``2/N^2`` on their half and satisfy detailed balance entrywise."""
    grid = GridWorld(n)
    pols = fig5_policies(n) if policies is None else np.asarray(policies)
    T = grid.transition_matrices()
    labels = half_labels(n)
    for z, pi in enumerate(pols):
        P = policy_chain(T, pi)
        try:
            rho = stationary_distribution(P)
        except NumericError:
            return False
        target = np.where(labels == z, 2.0 / n ** 2, 0.0)
        if np.max(np.abs(rho - target)) > tol:
            return False
        flow = rho[:, None] * P
        if np.max(np.abs(flow - flow.T)) > tol:
            return False
    return True


def lemma2_closed_form(n):
    """``(H[A|S,Z], gap)`` of the half-grid skills: ``log4 (1 - 1/2N)`` and ``log4 / 2N``."""
    if n < 2 or n % 2:
        raise InputError(f"N must be even and >= 2, got {n}")
    return LOG4 * (1.0 - 1.0 / (2 * n)), LOG4 / (2 * n)


def _neighbours(shape):
    nx, ny = shape
    for x in range(nx):
        for y in range(ny):
            if x + 1 < nx:
                yield (x, y), (x + 1, y)
            if y + 1 < ny:
                yield (x, y), (x, y + 1)


def border_length(partition):
    """Number of adjacent cell pairs carrying different labels."""
    part = np.asarray(partition)
    return sum(int(part[a] != part[b]) for a, b in _neighbours(part.shape))


def blocked_moves(partition):
    """For every cell, how many of its in-grid neighbours belong to another class."""
    part = np.asarray(partition)
    blocked = np.zeros(part.shape, dtype=int)
    for a, b in _neighbours(part.shape):
        if part[a] != part[b]:
            blocked[a] += 1
            blocked[b] += 1
    return blocked


def partition_objective(shape, partition, alpha=1.0):
    """Objective of idealised skills spread uniformly over their partition class.

    ``partition[x, y]`` labels each cell of an ``N x M`` grid.  The prior is
    uniform and classes are disjoint, so ``H[Z] = log K`` and ``H[Z|S] = 0``;
    each cell contributes ``(4 - blocked) / 4 * log 4`` of action entropy, where
    ``blocked`` counts neighbours owned by another skill.
    """
    part = np.asarray(partition)
    if part.shape != tuple(shape):
        raise InputError(f"partition has shape {part.shape}, expected {tuple(shape)}")
    k = int(part.max()) + 1
    sizes = np.bincount(part.ravel(), minlength=k)
    if part.min() < 0 or np.any(sizes == 0):
        raise InputError("every skill label 0..K-1 needs at least one cell")
    cell_h = (4 - blocked_moves(part)) / 4.0 * LOG4
    h_a = sum(cell_h[part == z].mean() for z in range(k)) / k
    return math.log(k) + alpha * h_a


def enumerate_partitions(shape, n_skills=2, max_cells=16):
    """Every labelling of the grid using all ``n_skills`` labels."""
    n_cells = shape[0] * shape[1]
    if n_cells > max_cells:
        raise InputError(f"refusing to enumerate {n_skills}^{n_cells} labellings")
    for labels in itertools.product(range(n_skills), repeat=n_cells):
        if len(set(labels)) == n_skills:
            yield np.array(labels).reshape(shape)


def best_partitions(shape, n_skills=2, alpha=1.0):
    """All maximisers of :func:`partition_objective` plus the maximum value."""
    best, arg = -np.inf, []
    for part in enumerate_partitions(shape, n_skills):
        val = partition_objective(shape, part, alpha)
        if val > best + 1e-12:
            best, arg = val, [part]
        elif abs(val - best) <= 1e-12:
            arg.append(part)
    return best, arg
