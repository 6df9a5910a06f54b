import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfrobust.algorithms import kde_fit, kernel_component, mixture_predict_pmf
from cfrobust.algorithms.kde import KdeConfig
from cfrobust.attacks import build_block_toy
from cfrobust.errors import EmptyTrainingSet
from cfrobust.ratings import MISSING, RatingsVector, TrainingSet, pmf_mean

from conftest import BINARY, FIVE, random_training_set

K1_ONE = 1.0 / (1.0 + math.exp(-1.0 / 0.15))


def test_k1_closed_form():
    # k(1) / k(0) = e^{1/beta} with k(0) + k(1) = 1; value checked at 30 digits with mpmath
    assert K1_ONE == pytest.approx(0.998728984, abs=1e-9)
    p = kernel_component(1.0, BINARY, 0.15)
    assert p.probs[1] == pytest.approx(K1_ONE, abs=1e-15)
    assert p.probs[0] == pytest.approx(1 - K1_ONE, abs=1e-15)


def test_kernel_mirror():
    p0 = kernel_component(0.0, BINARY, 0.15)
    p1 = kernel_component(1.0, BINARY, 0.15)
    np.testing.assert_allclose(p0.probs, p1.probs[::-1], atol=1e-15)


def test_missing_kernel_uniform():
    np.testing.assert_allclose(kernel_component(None, FIVE).probs, [0.2] * 5, atol=1e-15)


def test_five_level_kernel():
    raw = np.exp(-np.array([10 / 3, 5 / 3, 0, 5 / 3, 10 / 3]))
    p = kernel_component(0.5, FIVE, 0.15)
    np.testing.assert_allclose(p.probs, raw / raw.sum(), atol=1e-15)
    assert abs(p.probs.sum() - 1) <= 1e-12
    assert int(np.argmax(p.probs)) == 2


@pytest.mark.parametrize("s", [0.0, 0.25, 0.75, 1.0])
def test_kernel_peaks_at_rating(s):
    assert FIVE.levels[int(np.argmax(kernel_component(s, FIVE).probs))] == s


def test_all_missing_vector_gives_uniform_component():
    model = kde_fit(TrainingSet(BINARY, [[MISSING, MISSING, MISSING]]))
    assert model.n_components == 1
    np.testing.assert_allclose(model.marginal_table(), 0.5, atol=1e-15)


def test_identical_vectors_give_identical_components():
    model = kde_fit(TrainingSet(BINARY, [[1, 0], [1, 0]]))
    np.testing.assert_array_equal(model.weights, [0.5, 0.5])
    table = model.marginal_table()
    np.testing.assert_array_equal(table[0], table[1])
    assert table[0, 0, 1] == pytest.approx(K1_ONE, abs=1e-15)


def test_empty_training_set():
    with pytest.raises(EmptyTrainingSet):
        kde_fit(TrainingSet.empty(BINARY, 3))


def test_beta_must_be_positive():
    with pytest.raises(ValueError):
        KdeConfig(beta=0.0)


def test_empty_history_is_prior_predictive(rng):
    W = random_training_set(rng, 6, 4, FIVE)
    model = kde_fit(W)
    expected = (model.weights[:, None] * model.marginal_table()[:, 2, :]).sum(0)
    out = mixture_predict_pmf(model, 2, RatingsVector.empty(FIVE, 4))
    np.testing.assert_allclose(out.probs, expected, atol=1e-15)


def test_block_toy_predictions():
    Y, Z = build_block_toy(3)
    empty = RatingsVector.empty(BINARY, 1)
    clean = mixture_predict_pmf(kde_fit(Y), 0, empty)
    assert clean.probs[1] == pytest.approx((K1_ONE + 0.5) / 2, abs=1e-15)
    assert clean.mean() == pytest.approx(0.7494, abs=1e-4)
    corrupt = mixture_predict_pmf(kde_fit(Y.concat(Z)), 0, empty)
    assert corrupt.probs[1] == pytest.approx(0.5, abs=1e-15)


def test_history_rating_for_target_product_is_ignored(rng):
    W = random_training_set(rng, 5, 3)
    model = kde_fit(W)
    h = RatingsVector(BINARY, 3, {0: 1})
    np.testing.assert_allclose(model.predict_pmf(1, h.with_rating(1, 0)).probs,
                               model.predict_pmf(1, h).probs, atol=1e-15)


def test_long_history_does_not_underflow():
    # 600 rated products push every raw likelihood far below the smallest double
    rng = np.random.default_rng(7)
    W = random_training_set(rng, 20, 600, FIVE, missing=0.0)
    model = kde_fit(W)
    history = RatingsVector(FIVE, 600, {n: int(W.codes[3, n]) for n in range(1, 600)})
    p = model.predict_pmf(0, history)
    assert np.all(np.isfinite(p.probs)) and abs(p.probs.sum() - 1) <= 1e-12
    # the posterior concentrates on the vector that produced the history
    assert p.probs[W.codes[3, 0]] == pytest.approx(kernel_component(FIVE.levels[W.codes[3, 0]], FIVE).probs.max())


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_scalar_is_pmf_mean(seed):
    rng = np.random.default_rng(seed)
    W = random_training_set(rng, int(rng.integers(1, 8)), 4, FIVE)
    model = kde_fit(W)
    history = RatingsVector.from_dense(FIVE, random_training_set(rng, 1, 4, FIVE).codes[0])
    for product in range(4):
        assert abs(model.predict_scalar(product, history) - pmf_mean(model.predict_pmf(product, history))) <= 1e-12


def test_kernels_strictly_positive(rng):
    model = kde_fit(random_training_set(rng, 10, 5, FIVE))
    assert np.all(model.marginal_table() > 0)


def test_predict_sequence_matches_pointwise(rng):
    W = random_training_set(rng, 8, 5, FIVE)
    model = kde_fit(W)
    order = [3, 0, 4, 1]
    codes = [2, 4, 0, 1]
    seq = model.predict_sequence(order, codes)
    for k, product in enumerate(order):
        h = RatingsVector(FIVE, 5, dict(zip(order[:k], codes[:k])))
        assert seq[k] == pytest.approx(model.predict_scalar(product, h), abs=1e-12)
