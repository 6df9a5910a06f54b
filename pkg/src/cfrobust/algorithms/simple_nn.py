"""Agreement-count nearest neighbour over binary ratings.

Similarity is the number of products both vectors rate identically minus the
number they rate differently.  Every vector rating the target product with
maximal similarity is a neighbour; the prediction is their mean rating.
"""
from __future__ import annotations

import numpy as np

from ..errors import EmptyTrainingSet, NonBinaryScale
from ..ratings import MISSING, RatingsVector, TrainingSet
from .base import Predictor


def agreement_similarity(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Similarity between dense code rows ``a`` (..., N) and ``b`` (N,)."""
    both = (a != MISSING) & (b != MISSING)
    return (both & (a == b)).sum(-1) - (both & (a != b)).sum(-1)


class SimpleNN(Predictor):
    def __init__(self, W: TrainingSet):
        if not W.scale.is_binary:
            raise NonBinaryScale("the agreement-count NN is defined for binary ratings only")
        if W.M == 0:
            raise EmptyTrainingSet("simple NN needs at least one training vector")
        self.scale = W.scale
        self.N = W.N
        self.W = W

    def neighbours(self, product: int, history: RatingsVector) -> np.ndarray:
        candidates = np.flatnonzero(self.W.codes[:, product] != MISSING)
        if candidates.size == 0:
            return candidates
        x = history.to_dense()
        x[product] = MISSING
        sims = agreement_similarity(self.W.codes[candidates], x)
        return candidates[sims == sims.max()]

    def predict_scalar(self, product: int, history: RatingsVector) -> float:
        nb = self.neighbours(product, history)
        if nb.size == 0:
            return 1.0
        return float(self.W.codes[nb, product].mean())


def simple_nn_predict(W: TrainingSet, product: int, history: RatingsVector) -> float:
    return SimpleNN(W).predict_scalar(product, history)


def simple_nn_algorithm():
    def fit(W: TrainingSet) -> SimpleNN:
        return SimpleNN(W)
    fit.__name__ = "simple-nn"
    return fit
