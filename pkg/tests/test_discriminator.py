import math

import numpy as np
import pytest
from _gradcheck import max_relative_error, numeric_grads, random_instances
from hypothesis import given
from hypothesis import strategies as st

from diayn.discriminator import (SoftmaxDiscriminator, TabularDiscriminator, disc_accuracy, disc_predict,
                                 disc_update, discriminator_from_state)
from diayn.errors import InputError


def test_tabular_unseen_state_is_uniform():
    np.testing.assert_allclose(disc_predict(TabularDiscriminator(5, 2), 3), [0.5, 0.5])


def test_tabular_formula():
    d = TabularDiscriminator(5, 2, smoothing=1.0)
    disc_update(d, 1, 0)
    np.testing.assert_allclose(disc_predict(d, 1), [2 / 3, 1 / 3])


@given(st.integers(2, 8), st.floats(0.1, 5.0), st.data())
def test_tabular_single_update(k, lam, data):
    z = data.draw(st.integers(0, k - 1))
    d = TabularDiscriminator(3, k, lam)
    disc_update(d, 2, z)
    assert disc_predict(d, 2)[z] == pytest.approx((1 + lam) / (1 + k * lam))


def test_update_rejects_bad_skill():
    with pytest.raises(InputError):
        disc_update(TabularDiscriminator(3, 2), 0, 2)
    with pytest.raises(InputError):
        TabularDiscriminator(3, 2, smoothing=0.0)


def test_softmax_zero_weights_is_uniform():
    d = SoftmaxDiscriminator([0, 0], [1, 1], 5, hidden=(4,), rng=None)
    np.testing.assert_allclose(disc_predict(d, [0.3, 0.7]), 0.2)


def test_softmax_zero_lr_unchanged():
    d = SoftmaxDiscriminator([0, 0], [1, 1], 3, hidden=(4,), lr=0.0, rng=np.random.default_rng(0))
    before = [p.copy() for p in d.net.params]
    disc_update(d, [0.2, 0.4], 1)
    for b, p in zip(before, d.net.params):
        np.testing.assert_array_equal(b, p)


def test_softmax_gradient_matches_finite_differences():
    for _, in_dim, hidden, batch, rng in random_instances(50, seed=13):
        k = int(rng.integers(2, 5))
        d = SoftmaxDiscriminator(np.zeros(in_dim), np.ones(in_dim), k, hidden=hidden, rng=rng)
        s = rng.uniform(size=(batch, in_dim))
        z = rng.integers(0, k, batch)
        _, analytic = d.loss_and_grads(s, z)
        numeric = numeric_grads(lambda: d.loss_and_grads(s, z)[0], d.net.params)
        assert max_relative_error(analytic, numeric) < 1e-4


@given(st.integers(0, 10_000))
def test_predictions_are_distributions(seed):
    rng = np.random.default_rng(seed)
    d = SoftmaxDiscriminator([0, 0], [1, 1], 4, hidden=(6,), rng=rng)
    p = d.predict(rng.uniform(-3, 3, size=(10, 2)))
    assert np.all(p >= 0) and np.max(np.abs(p.sum(axis=1) - 1)) < 1e-9
    t = TabularDiscriminator(6, 4, 0.5)
    t.update(rng.integers(0, 6, 30), rng.integers(0, 4, 30))
    assert np.max(np.abs(t.predict(np.arange(6)).sum(axis=1) - 1)) < 1e-9


@given(st.integers(1, 400), st.integers(2, 6), st.floats(0.1, 3.0), st.integers(0, 1000))
def test_tabular_smoothing_washes_out(n, k, lam, seed):
    rng = np.random.default_rng(seed)
    z = rng.integers(0, k, n)
    d = TabularDiscriminator(1, k, lam)
    d.update(np.zeros(n, dtype=int), z)
    freq = np.bincount(z, minlength=k) / n
    assert np.max(np.abs(d.predict([0])[0] - freq)) <= k * lam / (n + k * lam) + 1e-12


def test_accuracy_examples():
    d = TabularDiscriminator(4, 2)
    d.update([0, 1, 2, 3], [0, 0, 1, 1])
    assert disc_accuracy(d, [0, 1, 2, 3], [0, 0, 1, 1]) == 1.0
    # untrained: every prediction ties and goes to skill 0
    assert disc_accuracy(TabularDiscriminator(4, 2), [0, 1, 2, 3], [0, 1, 0, 1]) == 0.5
    with pytest.raises(InputError):
        disc_accuracy(d, [], [])


def test_accuracy_with_random_labels_is_chance():
    k, n = 4, 4000
    rng = np.random.default_rng(0)
    states = rng.integers(0, 50, n)
    d = TabularDiscriminator(50, k)
    d.update(states, rng.integers(0, k, n))
    acc = disc_accuracy(d, states, rng.permutation(rng.integers(0, k, n)))
    assert abs(acc - 1 / k) < 3 * math.sqrt(0.25 * 0.75 / n)


def test_trained_softmax_beats_chance_on_held_out():
    rng = np.random.default_rng(0)
    centres = np.array([[0.2, 0.2], [0.8, 0.2], [0.5, 0.8]])
    d = SoftmaxDiscriminator([0, 0], [1, 1], 3, hidden=(16,), lr=1e-2, rng=rng)
    for _ in range(500):
        z = rng.integers(0, 3, 64)
        d.update(centres[z] + rng.normal(0, 0.1, (64, 2)), z)
    z = rng.integers(0, 3, 500)
    loss, _ = d.loss_and_grads(centres[z] + rng.normal(0, 0.1, (500, 2)), z)
    assert loss < math.log(3)
    assert disc_accuracy(d, centres[z], z) == 1.0


def test_feature_projection_ignores_other_coordinates():
    d = SoftmaxDiscriminator([0, 0], [1, 1], 3, hidden=(4,), features=[1], rng=np.random.default_rng(0))
    np.testing.assert_allclose(d.predict([[0.1, 0.5]]), d.predict([[0.9, 0.5]]))
    with pytest.raises(InputError):
        SoftmaxDiscriminator([0, 0], [1, 1], 3, features=[2])


def test_state_roundtrip():
    rng = np.random.default_rng(0)
    d = SoftmaxDiscriminator([0, 0], [1, 1], 3, hidden=(4,), features=[0, 1], rng=rng)
    d.update(rng.uniform(size=(5, 2)), [0, 1, 2, 0, 1])
    back = discriminator_from_state(d.state())
    assert back.state() == d.state()
    t = TabularDiscriminator(4, 2)
    t.update([1, 2], [0, 1])
    assert discriminator_from_state(t.state()).state() == t.state()
    with pytest.raises(InputError):
        discriminator_from_state({"kind": "oracle"})
