import math

import numpy as np
import pytest
from scipy.stats import chisquare

from cfrobust.attacks import (
    PushAttackConfig,
    build_block_toy,
    build_worst_case_instance,
    empirical_marginals,
    generate_push_attack,
)
from cfrobust.errors import EmptyTrainingSet, OddN, TooLarge
from cfrobust.ratings import MISSING, TrainingSet

from conftest import BINARY, FIVE, random_training_set

Q = MISSING


def test_push_attack_promote_everything(rng):
    Y = random_training_set(rng, 30, 8, FIVE, missing=0.4)
    Z, promoted = generate_push_attack(Y, PushAttackConfig(20, 1.0, 3))
    assert list(promoted) == list(range(8))
    assert np.all((Z.codes == 4) | (Z.codes == MISSING))


def test_push_attack_without_question_marks(rng):
    Y = random_training_set(rng, 30, 8, FIVE, missing=0.0)
    Z, _ = generate_push_attack(Y, PushAttackConfig(25, 0.5, 1))
    assert not np.any(Z.codes == MISSING)


@pytest.mark.parametrize("missing", [0.3, 0.92])
def test_push_attack_matches_missing_fraction(rng, missing):
    Y = random_training_set(rng, 200, 50, FIVE, missing=missing)
    cfg = PushAttackConfig(37, 0.5, 7)
    Z, promoted = generate_push_attack(Y, cfg)
    assert abs(Z.missing_fraction() - Y.missing_fraction()) <= 1 / (cfg.count * Y.N)
    assert len(promoted) == 25
    rated = Z.codes[:, promoted]
    assert np.all(rated[rated != MISSING] == 4)


def test_push_attack_seeded(rng):
    Y = random_training_set(rng, 20, 6, FIVE)
    a = generate_push_attack(Y, PushAttackConfig(10, 0.5, 4))
    b = generate_push_attack(Y, PushAttackConfig(10, 0.5, 4))
    assert a[0] == b[0] and np.array_equal(a[1], b[1])


def test_filler_marginals_follow_honest_data():
    rng = np.random.default_rng(0)
    Y = random_training_set(rng, 400, 6, FIVE, missing=0.0)
    # skew one product so the check is not against a flat marginal
    codes = np.array(Y.codes)
    codes[:, 0] = rng.choice(5, size=400, p=[0.05, 0.1, 0.2, 0.3, 0.35])
    Y = TrainingSet(FIVE, codes)
    Z, promoted = generate_push_attack(Y, PushAttackConfig(10_000, 0.5, 11))
    expected = empirical_marginals(Y)
    for j in set(range(6)) - set(promoted.tolist()):
        counts = np.bincount(Z.codes[:, j], minlength=5)
        assert chisquare(counts, expected[j] * counts.sum()).pvalue > 1e-3


def test_unrated_product_marginal_is_uniform():
    Y = TrainingSet(FIVE, [[1, MISSING], [2, MISSING]])
    np.testing.assert_allclose(empirical_marginals(Y)[1], 0.2)


def test_push_attack_needs_honest_data():
    with pytest.raises(EmptyTrainingSet):
        generate_push_attack(TrainingSet.empty(FIVE, 3), PushAttackConfig(3))


@pytest.mark.parametrize("kwargs", [dict(count=0), dict(count=3, promote_fraction=0.0),
                                    dict(count=3, promote_fraction=1.5)])
def test_push_config_validation(kwargs):
    with pytest.raises(ValueError):
        PushAttackConfig(**kwargs)


# worst case instance --------------------------------------------------------

def test_worst_case_four_products():
    inst = build_worst_case_instance(4)
    assert sorted(map(tuple, inst.Y.codes.tolist())) == sorted(
        [(1, 0, 1, 0), (1, 0, Q, Q), (Q, Q, 1, 0), (Q, Q, Q, Q)])
    assert sorted(map(tuple, inst.Z.codes.tolist())) == sorted(
        [(1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1)])
    assert inst.r == 0.5
    assert list(inst.clean_type) == [1, 0, 1, 0]


@pytest.mark.parametrize("N", [2, 6, 10])
def test_worst_case_structure(N):
    inst = build_worst_case_instance(N)
    assert inst.Y.M == inst.Z.M == 2 ** (N // 2)
    assert len(set(map(tuple, inst.Y.codes.tolist()))) == inst.Y.M
    for y, z in zip(inst.Y.codes, inst.Z.codes):
        for i in range(0, N, 2):
            pair = tuple(y[i:i + 2])
            assert pair in ((1, 0), (Q, Q))
            assert tuple(z[i:i + 2]) == ((1, 0) if pair == (1, 0) else (0, 1))


@pytest.mark.parametrize("N", [4, 8, 12])
def test_tie_set_cardinalities(N):
    inst = build_worst_case_instance(N)
    W = inst.Y.concat(inst.Z)
    model = inst.corrupt_model()
    for k in range(0, N, 2):
        y1, z1, z2 = inst.tie_sets(k)
        size = 2 ** ((N - k) // 2 - 1)
        assert len(y1) == len(z1) == len(z2) == size
        neighbours = set(model.neighbours(k, inst.history(k)).tolist())
        assert neighbours == set(y1) | set(z1) | set(z2)
        assert np.all(W.codes[list(y1) + list(z1), k] == 1)
        assert np.all(W.codes[list(z2), k] == 0)


def test_worst_case_errors():
    with pytest.raises(OddN):
        build_worst_case_instance(5)
    with pytest.raises(TooLarge):
        build_worst_case_instance(26)


# block toy ------------------------------------------------------------------

def test_block_toy_smallest():
    Y, Z = build_block_toy(1)
    assert Y.codes.tolist() == [[1], [Q]]
    assert Z.codes.tolist() == [[0], [Q]]
    assert Y.scale == BINARY


def test_block_toy_wider():
    Y, Z = build_block_toy(3, N=4)
    assert (Y.M, Y.N) == (6, 4)
    assert np.all(Y.codes[:3] == 1) and np.all(Z.codes[:3] == 0)
    assert np.all(Y.codes[3:] == Q) and np.all(Z.codes[3:] == Q)
    assert math.isclose(Z.M / (Y.M + Z.M), 0.5)
