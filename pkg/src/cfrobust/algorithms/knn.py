"""User-based k nearest neighbour with a correlation-style similarity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyTrainingSet
from ..ratings import RatingsVector, TrainingSet
from .base import Predictor

KNN_GRID = tuple(range(1, 41))


@dataclass(frozen=True)
class KnnConfig:
    k: int = 10

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")


class KnnModel(Predictor):
    """Scalar predictions from the ``k`` most similar training vectors.

    With fewer than two past ratings the similarity is undefined and the
    prediction falls back to the product's training mean (``s_max`` when
    nobody rated it).  A zero denominator in the similarity makes it 0.
    """

    def __init__(self, W: TrainingSet, k: int = 10):
        if W.M == 0:
            raise EmptyTrainingSet("kNN needs at least one training vector")
        self.scale = W.scale
        self.N = W.N
        self.k = k
        self.W = W
        values = W.values()
        self.rated = W.rated_mask
        counts = self.rated.sum(1)
        self.usable = counts > 0
        with np.errstate(invalid="ignore"):
            means = np.nansum(values, axis=1) / counts
        self.means = np.where(self.usable, means, np.nan)
        # deviations from the vector's own mean, 0 at "?"
        self.dev = np.where(self.rated, values - self.means[:, None], 0.0)
        self.norms = np.sqrt((self.dev ** 2).sum(1))
        self.values = np.where(self.rated, values, 0.0)
        with np.errstate(invalid="ignore"):
            self.product_means = np.nansum(values, axis=0) / self.rated.sum(0)

    def _clamp(self, x: float) -> float:
        return float(min(self.scale.max, max(self.scale.min, x)))

    def cold_start(self, product: int) -> float:
        if not self.rated[:, product].any():
            return self.scale.max
        return self._clamp(self.product_means[product])

    def similarities(self, history: RatingsVector, skip: int | None = None) -> np.ndarray:
        """Similarity of every training vector to ``history`` (0 where undefined)."""
        products = [n for n in history.rated if n != skip]
        x = np.array([history.rating(n) for n in products])
        xdev = x - x.mean()
        xnorm = float(np.sqrt(xdev @ xdev))
        num = self.dev[:, products] @ xdev
        denom = self.norms * xnorm
        out = np.zeros(self.W.M)
        ok = denom > 0
        out[ok] = num[ok] / denom[ok]
        return out

    def neighbours(self, product: int, sims: np.ndarray) -> np.ndarray:
        candidates = np.flatnonzero(self.rated[:, product])
        # highest similarity first, lower training index on ties
        ranked = candidates[np.lexsort((candidates, -sims[candidates]))]
        return ranked[: self.k]

    def predict_scalar(self, product: int, history: RatingsVector) -> float:
        n_past = history.n_rated - (product in history.codes)
        if n_past < 2:
            return self.cold_start(product)
        sims = self.similarities(history, skip=product)
        x_mean = float(np.mean([history.rating(n) for n in history.rated if n != product]))
        nb = self.neighbours(product, sims)
        weight = np.abs(sims[nb]).sum()
        if nb.size == 0 or weight == 0:
            return self._clamp(x_mean)
        offset = sims[nb] @ (self.values[nb, product] - self.means[nb]) / weight
        return self._clamp(x_mean + offset)


def knn_fit(W: TrainingSet, cfg: KnnConfig = KnnConfig()) -> KnnModel:
    return KnnModel(W, cfg.k)


def knn_similarity(w: RatingsVector, history: RatingsVector) -> float:
    """Similarity between one ratings vector and an active user's history."""
    return float(KnnModel(TrainingSet.from_vectors([w]), 1).similarities(history)[0])


def knn_predict(model: KnnModel, product: int, history: RatingsVector) -> float:
    return model.predict_scalar(product, history)


def knn_algorithm(k: int = 10):
    def fit(W: TrainingSet) -> KnnModel:
        return KnnModel(W, k)
    fit.__name__ = f"knn(k={k})"
    return fit
