import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfrobust.algorithms import (
    KnnConfig,
    SimpleNN,
    agreement_similarity,
    knn_fit,
    knn_predict,
    knn_similarity,
    simple_nn_predict,
)
from cfrobust.attacks import build_block_toy, build_worst_case_instance
from cfrobust.errors import EmptyTrainingSet, NonBinaryScale
from cfrobust.ratings import MISSING, RatingsVector, TrainingSet

from conftest import BINARY, FIVE, random_training_set


def vec(scale, values):
    return RatingsVector.from_dense(scale, [MISSING if v is None else scale.code_of(v) for v in values])


# kNN ------------------------------------------------------------------------

def test_vector_mean_ignores_question_marks():
    model = knn_fit(TrainingSet.from_vectors([vec(BINARY, [1, None, 0])]))
    assert model.means[0] == 0.5


def test_all_missing_vector_never_a_neighbour():
    W = TrainingSet(BINARY, [[MISSING, MISSING, MISSING], [1, 0, 1]])
    model = knn_fit(W, KnnConfig(k=5))
    assert not model.usable[0]
    h = vec(BINARY, [1, 0, None])
    assert list(model.neighbours(2, model.similarities(h))) == [1]


def test_constant_vector_has_zero_similarity():
    w = vec(FIVE, [0.25, 0.25])
    model = knn_fit(TrainingSet.from_vectors([w]))
    assert model.means[0] == 0.25
    assert knn_similarity(w, vec(FIVE, [1.0, 0.0])) == 0.0


def test_constant_history_has_zero_similarity():
    assert knn_similarity(vec(FIVE, [1.0, 0.0, 0.5]), vec(FIVE, [0.5, 0.5, None])) == 0.0


def test_perfect_correlation():
    w = vec(FIVE, [1.0, 0.0, 0.5, None])
    assert knn_similarity(w, w) == pytest.approx(1.0, abs=1e-15)


def test_disjoint_support():
    assert knn_similarity(vec(BINARY, [None, None, 1, 0]), vec(BINARY, [1, 0, None, None])) == 0.0


def test_hand_computed_similarity():
    w = vec(BINARY, [1, 0, 1, 0])
    h = vec(BINARY, [1, 0, None, None])
    # covariance over the history's products, w's spread over all its ratings
    wv, xv = np.array([1, 0, 1, 0.0]), np.array([1, 0.0])
    num = np.dot(wv[:2] - wv.mean(), xv - xv.mean())
    expected = num / (np.linalg.norm(wv - wv.mean()) * np.linalg.norm(xv - xv.mean()))
    assert knn_similarity(w, h) == pytest.approx(expected, abs=1e-15)
    assert expected == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_cold_start_uses_product_mean():
    W = TrainingSet(FIVE, [[3, 0], [1, 4]])
    model = knn_fit(W)
    assert knn_predict(model, 0, RatingsVector.empty(FIVE, 2)) == 0.5
    assert knn_predict(model, 0, RatingsVector(FIVE, 2, {1: 2})) == 0.5


def test_cold_start_when_nobody_rated():
    model = knn_fit(TrainingSet(FIVE, [[MISSING, 1]]))
    assert knn_predict(model, 0, RatingsVector.empty(FIVE, 2)) == 1.0


def test_identical_neighbours_reproduce_rating():
    # each neighbour's own mean equals the history mean, so the offset is zero
    pattern = [1.0, 0.0, 0.5]
    W = TrainingSet.from_vectors([vec(FIVE, pattern)] * 4)
    model = knn_fit(W, KnnConfig(k=3))
    assert model.means[0] == 0.5
    assert knn_predict(model, 2, vec(FIVE, [1.0, 0.0, None])) == pytest.approx(0.5, abs=1e-15)


def test_block_toy_first_prediction():
    Y, Z = build_block_toy(4)
    empty = RatingsVector.empty(BINARY, 1)
    assert knn_predict(knn_fit(Y), 0, empty) == 1.0
    assert knn_predict(knn_fit(Y.concat(Z)), 0, empty) == 0.5


def test_ties_at_kth_slot_prefer_lower_index():
    W = TrainingSet(BINARY, [[1, 0, 1], [1, 0, 0], [1, 0, 1], [1, 0, 0]])
    model = knn_fit(W, KnnConfig(k=1))
    sims = model.similarities(vec(BINARY, [1, 0, None]), skip=2)
    assert list(model.neighbours(2, sims)) == [0]


def test_no_neighbour_rates_product_falls_back_to_history_mean():
    W = TrainingSet(FIVE, [[4, 0, MISSING]])
    model = knn_fit(W)
    assert knn_predict(model, 2, vec(FIVE, [1.0, 0.5, None])) == 0.75


def test_empty_training_set():
    with pytest.raises(EmptyTrainingSet):
        knn_fit(TrainingSet.empty(BINARY, 2))


def test_k_validation():
    with pytest.raises(ValueError):
        KnnConfig(k=0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_knn_prediction_is_clamped(seed, k):
    rng = np.random.default_rng(seed)
    W = random_training_set(rng, int(rng.integers(1, 12)), 5, FIVE, missing=0.3)
    model = knn_fit(W, KnnConfig(k=k))
    h = RatingsVector.from_dense(FIVE, random_training_set(rng, 1, 5, FIVE, missing=0.2).codes[0])
    for product in range(5):
        assert 0.0 <= knn_predict(model, product, h) <= 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_similarity_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    W = random_training_set(rng, 6, 6, FIVE, missing=0.3)
    h = RatingsVector.from_dense(FIVE, random_training_set(rng, 1, 6, FIVE, missing=0.3).codes[0])
    sims = knn_fit(W).similarities(h)
    assert np.all(np.abs(sims) <= 1 + 1e-12)


# agreement-count NN ---------------------------------------------------------

def test_agreement_similarity():
    a = np.array([[1, 0, MISSING, 1], [0, 0, 0, 0]])
    b = np.array([1, 1, 1, MISSING])
    assert list(agreement_similarity(a, b)) == [0, -3]


def test_nobody_rates_product():
    W = TrainingSet(BINARY, [[1, MISSING]])
    assert simple_nn_predict(W, 1, RatingsVector.empty(BINARY, 2)) == 1.0


def test_ties_all_kept():
    W = TrainingSet(BINARY, [[1, 1], [1, 0], [0, 0]])
    # the first two agree with the history on product 0, the third disagrees
    assert simple_nn_predict(W, 1, vec(BINARY, [1, None])) == 0.5


def test_non_binary_scale():
    with pytest.raises(NonBinaryScale):
        SimpleNN(TrainingSet(FIVE, [[1, 2]]))


@pytest.mark.parametrize("N", [4, 8, 12])
def test_worst_case_alternating_predictions(N):
    inst = build_worst_case_instance(N)
    W = inst.Y.concat(inst.Z)
    for k in range(N):
        expected = 2 / 3 if k % 2 == 0 else 0.0
        assert simple_nn_predict(W, k, inst.history(k)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("N", [4, 8])
def test_worst_case_clean_predictions_exact(N):
    inst = build_worst_case_instance(N)
    for k in range(N):
        assert simple_nn_predict(inst.Y, k, inst.history(k)) == inst.clean_type[k]
