import itertools
import math

import numpy as np
import pytest

from cfrobust.algorithms import NbParams, kde_fit
from cfrobust.algorithms.naive_bayes import FactoredMixture
from cfrobust.errors import AbsoluteContinuityViolation, TooLarge, ZeroEvidence
from cfrobust.oracle import DenseTypePmf, dense_condition, dense_kl, dense_mix, densify
from cfrobust.ratings import MISSING, RatingScale, RatingsVector, TrainingSet

from conftest import BINARY, FIVE, random_training_set


def random_mixture(rng, C, N, scale):
    eta = rng.dirichlet(np.ones(C))
    theta = rng.dirichlet(np.ones(scale.size), size=(C, N))
    return FactoredMixture(NbParams(scale, eta, theta, 0.1))


def test_single_component_single_product():
    model = random_mixture(np.random.default_rng(0), 1, 1, FIVE)
    np.testing.assert_array_equal(densify(model).probs, model.marginal_table()[0, 0])


def test_uniform_kernels_give_uniform_table():
    model = kde_fit(TrainingSet(BINARY, np.full((3, 4), MISSING)))
    np.testing.assert_allclose(densify(model).probs, 1 / 16, atol=1e-15)


def test_random_table_sums_to_one(rng):
    t = densify(random_mixture(rng, 3, 3, BINARY))
    assert abs(t.probs.sum() - 1) <= 1e-12


def test_table_entries_by_definition(rng):
    model = random_mixture(rng, 3, 3, FIVE)
    t = densify(model)
    theta = model.marginal_table()
    for x in itertools.product(range(5), repeat=3):
        expected = sum(model.weights[c] * math.prod(theta[c, n, x[n]] for n in range(3)) for c in range(3))
        assert t.probs[x] == pytest.approx(expected, abs=1e-15)


def test_size_guard():
    model = kde_fit(TrainingSet(FIVE, np.full((1, 11), MISSING)))
    with pytest.raises(TooLarge):
        densify(model)


def test_empty_history_gives_marginal(rng):
    model = random_mixture(rng, 2, 3, FIVE)
    t = densify(model)
    out = dense_condition(t, RatingsVector.empty(FIVE, 3), 1)
    np.testing.assert_allclose(out.probs, t.probs.sum(axis=(0, 2)), atol=1e-15)


def test_point_mass_table():
    probs = np.zeros((2, 2, 2))
    probs[1, 0, 1] = 1.0
    t = DenseTypePmf(BINARY, probs)
    out = dense_condition(t, RatingsVector(BINARY, 3, {0: 1}), 2)
    np.testing.assert_array_equal(out.probs, [0.0, 1.0])


def test_zero_evidence():
    probs = np.zeros((2, 2))
    probs[1, 1] = 1.0
    with pytest.raises(ZeroEvidence):
        dense_condition(DenseTypePmf(BINARY, probs), RatingsVector(BINARY, 2, {0: 0}), 1)


@pytest.mark.parametrize("seed", range(25))
def test_factored_conditioning_matches_dense(seed):
    rng = np.random.default_rng(seed)
    scale = RatingScale.evenly_spaced(int(rng.integers(2, 4)))
    N = int(rng.integers(2, 6))
    model = random_mixture(rng, int(rng.integers(1, 5)), N, scale)
    t = densify(model)
    for _ in range(4):
        history = RatingsVector.from_dense(scale, random_training_set(rng, 1, N, scale, 0.4).codes[0])
        product = int(rng.integers(0, N))
        np.testing.assert_allclose(model.predict_pmf(product, history).probs,
                                   dense_condition(t, history, product).probs, atol=1e-10)


def test_dense_kl_self():
    t = densify(random_mixture(np.random.default_rng(3), 2, 3, BINARY))
    assert dense_kl(t, t) == 0.0


def test_dense_kl_absolute_continuity():
    a = DenseTypePmf(BINARY, np.array([0.5, 0.5]))
    b = DenseTypePmf(BINARY, np.array([1.0, 0.0]))
    with pytest.raises(AbsoluteContinuityViolation):
        dense_kl(a, b)


@pytest.mark.parametrize("seed", range(10))
def test_kde_linearity_and_divergence_bound(seed):
    rng = np.random.default_rng(seed)
    M = 2 * int(rng.integers(1, 5))
    Y = random_training_set(rng, M // 2, 4)
    Z = random_training_set(rng, M // 2, 4)
    clean, both = densify(kde_fit(Y)), densify(kde_fit(Y.concat(Z)))
    mixed = dense_mix([(0.5, clean), (0.5, densify(kde_fit(Z)))])
    np.testing.assert_allclose(both.probs, mixed.probs, atol=1e-12)
    assert dense_kl(clean, both) <= math.log(2) + 1e-9
