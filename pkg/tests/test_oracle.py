import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from diayn.envs import GridWorld
from diayn.errors import InputError, NumericError
from diayn.info import conditional_entropy
from diayn.oracle import (LOG4, action_entropies, best_partitions, blocked_moves, border_length,
                          enumerate_partitions, episodic_visitation, exact_objective, fig5_policies,
                          half_labels, lemma2_closed_form, partition_objective, partition_policies, policy_chain,
                          stationary_distribution, verify_fig5_policy)


def uniform_policies(grid, k=1):
    return np.full((k, grid.n_states, grid.n_actions), 0.25)


def random_policies(grid, k, rng):
    return rng.dirichlet(np.ones(4), size=(k, grid.n_states))


def eig_stationary(P):
    w, v = scipy.linalg.eig(P.T)
    x = np.real(v[:, np.argmin(np.abs(w - 1))])
    return x / x.sum()


def solve_stationary(P):
    n = P.shape[0]
    A = np.vstack([P.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1
    return np.linalg.lstsq(A, b, rcond=None)[0]


# stationary distributions

def test_uniform_walk_matches_direct_solves():
    g = GridWorld(4)
    P = policy_chain(g.transition_matrices(), uniform_policies(g)[0])
    rho = stationary_distribution(P)
    np.testing.assert_allclose(rho, eig_stationary(P), atol=1e-10)
    np.testing.assert_allclose(rho, solve_stationary(P), atol=1e-10)
    # bumping a wall means staying put, so the walk is doubly stochastic
    np.testing.assert_allclose(rho, 1 / 16, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_random_policy_chain_matches_direct_solves(seed):
    g = GridWorld(4)
    pi = random_policies(g, 1, np.random.default_rng(seed))[0]
    P = policy_chain(g.transition_matrices(), pi)
    rho = stationary_distribution(P)
    assert abs(rho.sum() - 1) < 1e-12
    np.testing.assert_allclose(rho @ P, rho, atol=1e-11)
    np.testing.assert_allclose(rho, solve_stationary(P), atol=1e-9)
    assert np.ptp(rho) > 1e-3  # genuinely non-uniform


def test_absorbing_state_and_errors():
    P = np.array([[1.0, 0.0, 0.0], [0.5, 0.0, 0.5], [0.0, 1.0, 0.0]])
    np.testing.assert_allclose(stationary_distribution(P), [1, 0, 0], atol=1e-10)
    with pytest.raises(NumericError, match="reducible"):
        stationary_distribution(np.eye(2))
    with pytest.raises(NumericError, match="did not reach"):
        stationary_distribution(np.array([[0.0, 1.0], [0.5, 0.5]]), max_iter=3)
    with pytest.raises(InputError):
        stationary_distribution(np.array([[0.5, 0.6], [0.5, 0.5]]))


def test_init_selects_among_closed_classes():
    np.testing.assert_allclose(stationary_distribution(np.eye(2), init=[0.3, 0.7]), [0.3, 0.7])


def test_periodic_chain_converges():
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(stationary_distribution(P), [0.5, 0.5], atol=1e-12)


# half-grid skills

@pytest.mark.parametrize("n", [2, 4, 6])
def test_half_grid_stationary_is_uniform_on_its_half(n):
    g = GridWorld(n)
    labels = half_labels(n)
    for z, pi in enumerate(fig5_policies(n)):
        rho = stationary_distribution(policy_chain(g.transition_matrices(), pi))
        np.testing.assert_allclose(rho, np.where(labels == z, 2 / n ** 2, 0.0), atol=1e-10)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_half_grid_closed_form_matches_exact(n):
    h, gap = lemma2_closed_form(n)
    rep = exact_objective(GridWorld(n), fig5_policies(n), np.full(2, 0.5))
    assert abs(rep.H_A_given_SZ - h) < 1e-9
    # leftover transient mass below the iteration tolerance enters as eps*log(eps)
    assert abs(rep.H_Z_given_S) < 1e-9
    assert rep.H_Z == pytest.approx(math.log(2), abs=1e-15)
    assert gap == pytest.approx(LOG4 - h, abs=1e-15)


def test_half_grid_values():
    assert lemma2_closed_form(4) == pytest.approx((math.log(4) * 7 / 8, math.log(4) / 8))
    assert lemma2_closed_form(4)[0] == pytest.approx(1.21300, abs=1e-5)
    assert lemma2_closed_form(4)[1] == pytest.approx(0.17329, abs=1e-5)
    assert lemma2_closed_form(2)[0] == pytest.approx(1.03972, abs=1e-5)
    gaps = [lemma2_closed_form(n)[1] for n in range(2, 40, 2)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    for bad in (3, 0, -2):
        with pytest.raises(InputError):
            lemma2_closed_form(bad)


def test_verify_half_grid_policy():
    assert verify_fig5_policy(4)
    assert verify_fig5_policy(6)
    pols = fig5_policies(4).copy()
    # shift probability from "left" to "right" in one cell of skill 0
    g = GridWorld(4)
    s = g.index((2, 2))
    pols[0, s, 2] -= 0.1
    pols[0, s, 3] += 0.1
    assert not verify_fig5_policy(4, pols)
    with pytest.raises(InputError):
        fig5_policies(5)


# exact objective

def test_identical_skills_are_maximally_confused():
    g = GridWorld(4)
    pols = np.stack([uniform_policies(g)[0]] * 2)
    rep = exact_objective(g, pols, np.full(2, 0.5))
    assert rep.H_Z_given_S == pytest.approx(math.log(2), abs=1e-12)
    assert rep.F_estimate == pytest.approx(rep.H_A_given_SZ, abs=1e-12)


def test_exact_objective_matches_monte_carlo():
    # one million post burn-in samples from random policies on a 3x3 grid
    g = GridWorld(3)
    rng = np.random.default_rng(0)
    pols = random_policies(g, 2, rng)
    rep = exact_objective(g, pols, np.full(2, 0.5))
    chains, steps, burn = 2000, 600, 100
    z = np.repeat([0, 1], chains // 2)
    s = rng.integers(0, g.n_states, chains)
    joint = np.zeros((g.n_states, 2))
    ent = action_entropies(pols)
    h_a = 0.0
    cum = np.cumsum(pols, axis=2)
    for t in range(steps):
        u = rng.random(chains)
        a = np.minimum((u[:, None] > cum[z, s]).sum(axis=1), 3)
        s = g.successor[s, a]
        if t >= burn:
            np.add.at(joint, (s, z), 1.0)
            h_a += ent[z, s].sum()
    n = chains * (steps - burn)
    assert n == 1_000_000
    assert abs(conditional_entropy(joint) - rep.H_Z_given_S) < 0.01
    assert abs(h_a / n - rep.H_A_given_SZ) < 0.01


def test_episodic_visitation_matches_monte_carlo():
    g = GridWorld(4)
    rng = np.random.default_rng(1)
    pi = random_policies(g, 1, rng)[0]
    P = policy_chain(g.transition_matrices(), pi)
    exact = episodic_visitation(P, g.start_distribution(), 10)
    n = 20000
    s = rng.integers(0, 16, n)
    counts = np.zeros(16)
    for _ in range(10):
        s = _step(P, s, rng)
        np.add.at(counts, s, 1.0)
    emp = counts / counts.sum()
    se = np.sqrt(exact * (1 - exact) / (n * 10))
    assert np.all(np.abs(emp - exact) < 5 * se + 1e-4)


def _step(P, s, rng):
    cum = np.cumsum(P[s], axis=1)
    return np.minimum((rng.random(len(s))[:, None] > cum).sum(axis=1), P.shape[0] - 1)


def test_policy_chain_keeps_missing_mass_in_place():
    g = GridWorld(2)
    pi = np.zeros((4, 4))
    pi[:, 3] = 0.5  # half the time move right, otherwise stay without an action
    P = policy_chain(g.transition_matrices(), pi)
    np.testing.assert_allclose(P.sum(axis=1), 1.0)
    assert P[0, 0] == 0.5 and P[0, 1] == 0.5


# partitions

def test_border_preference_on_4x8():
    x, y = np.meshgrid(np.arange(4), np.arange(8), indexing="ij")
    short = (y >= 4).astype(int)  # two 4x4 halves, border 4
    long = (x >= 2).astype(int)  # two 2x8 halves, border 8
    assert border_length(short) == 4 and border_length(long) == 8
    assert partition_objective((4, 8), short) > partition_objective((4, 8), long)


def test_symmetric_splits_score_equal():
    labels = half_labels(4).reshape(4, 4)  # indexed [y, x]
    assert partition_objective((4, 4), labels) == pytest.approx(partition_objective((4, 4), labels.T), abs=1e-15)


def test_single_skill_is_entropy_only():
    assert partition_objective((3, 5), np.zeros((3, 5), dtype=int), alpha=0.7) == pytest.approx(0.7 * LOG4)


def test_partition_errors():
    with pytest.raises(InputError):
        partition_objective((2, 2), np.array([[0, 2], [2, 0]]))
    with pytest.raises(InputError):
        partition_objective((2, 3), np.zeros((2, 2), dtype=int))
    with pytest.raises(InputError):
        list(enumerate_partitions((5, 5)))


def test_exhaustive_optimum_has_minimal_border():
    best, args = best_partitions((2, 4))
    borders = [border_length(p) for p in enumerate_partitions((2, 4))]
    assert all(border_length(p) == min(borders) for p in args)
    assert best == pytest.approx(math.log(2) + LOG4 * 7 / 8)


def test_half_grid_from_border_counting():
    # the half split of an N x N grid blocks one move on each of 2N border cells
    for n in (2, 4, 6):
        labels = half_labels(n).reshape(n, n)
        assert blocked_moves(labels).sum() == 2 * n
        assert partition_objective((n, n), labels) == pytest.approx(math.log(2) + lemma2_closed_form(n)[0])


@given(st.integers(0, 2 ** 12 - 1))
def test_partition_objective_matches_exact_objective(code):
    # idealised partition skills are exact random walks when each class is connected
    labels = np.array([(code >> i) & 1 for i in range(12)]).reshape(3, 4)
    if labels.min() == labels.max():
        return
    g = _RectGrid(4, 3)
    flat = np.array([labels[x, y] for y in range(4) for x in range(3)])
    pols = partition_policies(g, flat)
    try:
        rep = exact_objective(g, pols, np.full(2, 0.5))
    except NumericError:
        return  # a class split into pieces has no unique stationary distribution
    assert rep.F_estimate == pytest.approx(partition_objective((3, 4), labels), abs=1e-9)


class _RectGrid:
    """Minimal non-square grid exposing what the oracle needs."""

    def __init__(self, ny, nx):
        self.nx, self.ny = nx, ny
        self.n_states = nx * ny
        self.n_actions = 4
        succ = np.empty((self.n_states, 4), dtype=int)
        for s in range(self.n_states):
            x, y = s % nx, s // nx
            for a, (dx, dy) in enumerate(((0, 1), (0, -1), (-1, 0), (1, 0))):
                x2, y2 = x + dx, y + dy
                succ[s, a] = y2 * nx + x2 if 0 <= x2 < nx and 0 <= y2 < ny else s
        self.successor = succ

    def transition_matrices(self):
        T = np.zeros((4, self.n_states, self.n_states))
        for a in range(4):
            T[a, np.arange(self.n_states), self.successor[:, a]] = 1.0
        return T

    def start_distribution(self):
        return np.full(self.n_states, 1.0 / self.n_states)


def test_even_partition_attains_unregularised_maximum():
    # alpha = 0: H[Z] - H[Z|S] can never exceed log 2, and the half split reaches it
    for n in (2, 4):
        g = GridWorld(n)
        rep = exact_objective(g, fig5_policies(n), np.full(2, 0.5))
        assert rep.H_Z - rep.H_Z_given_S == pytest.approx(math.log(2), abs=1e-9)
    g = GridWorld(2)
    for part in enumerate_partitions((2, 2)):
        pols = partition_policies(g, np.array([part[x, y] for y in range(2) for x in range(2)]))
        rep = exact_objective(g, pols, np.full(2, 0.5), init=g.start_distribution())
        assert rep.H_Z - rep.H_Z_given_S <= math.log(2) + 1e-12
    rng = np.random.default_rng(3)
    g = GridWorld(4)
    for _ in range(200):
        rep = exact_objective(g, random_policies(g, 2, rng), np.full(2, 0.5))
        assert rep.H_Z - rep.H_Z_given_S <= math.log(2) + 1e-12
