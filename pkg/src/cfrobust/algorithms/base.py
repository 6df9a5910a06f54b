"""Common predictor interface and the factored-mixture machinery shared by KDE and naive Bayes."""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from ..ratings import RatingPmf, RatingScale, RatingsVector, TrainingSet

Algorithm = Callable[[TrainingSet], "Predictor"]


class Predictor(ABC):
    """A fitted CF algorithm.

    ``predict_scalar(product, history)`` predicts the rating of ``product``
    for an active user whose past ratings are ``history``.  A rating that
    ``history`` holds for ``product`` itself is ignored.
    """

    scale: RatingScale
    N: int
    probabilistic = False

    @abstractmethod
    def predict_scalar(self, product: int, history: RatingsVector) -> float:
        ...

    def predict_sequence(self, order: Sequence[int], codes: Sequence[int]) -> np.ndarray:
        """Scalar predictions along a rating trajectory.

        Entry ``k`` predicts product ``order[k]`` after the user has rated
        ``order[:k]`` with level codes ``codes[:k]``.
        """
        history = RatingsVector.empty(self.scale, self.N)
        out = np.empty(len(order))
        for k, (n, c) in enumerate(zip(order, codes)):
            out[k] = self.predict_scalar(n, history)
            history = history.with_rating(n, c)
        return out


class ProbabilisticPredictor(Predictor):
    """A predictor that emits a full PMF; the scalar prediction is its mean.

    Trajectory-wise evaluation goes through an opaque *state* that absorbs
    one observed rating at a time, which lets exact enumeration share work
    between histories with a common prefix.
    """

    probabilistic = True

    @abstractmethod
    def initial_state(self):
        ...

    @abstractmethod
    def observe(self, state, product: int, code: int):
        """Return a new state that also conditions on ``product`` rated ``code``."""

    @abstractmethod
    def pmf_array(self, state, product: int) -> np.ndarray:
        ...

    def state_for(self, history: RatingsVector, skip: int | None = None):
        state = self.initial_state()
        for n, c in history.codes.items():
            if n != skip:
                state = self.observe(state, n, c)
        return state

    def predict_pmf(self, product: int, history: RatingsVector) -> RatingPmf:
        probs = self.pmf_array(self.state_for(history, skip=product), product)
        return RatingPmf(self.scale, probs)

    def predict_scalar(self, product: int, history: RatingsVector) -> float:
        return self.predict_pmf(product, history).mean()

    def predict_sequence(self, order, codes) -> np.ndarray:
        values = self.scale.values
        state = self.initial_state()
        out = np.empty(len(order))
        for k, (n, c) in enumerate(zip(order, codes)):
            out[k] = float(values @ self.pmf_array(state, n))
            state = self.observe(state, n, c)
        return out


class MixtureTypeModel(ProbabilisticPredictor):
    """PMF over complete rating types as a finite mixture of product-form components.

    Component ``c`` has weight ``weights[c]`` and independent per-product
    marginals; subclasses only need to supply the log marginals of every
    component at one product, shape ``(C, S)``.
    """

    weights: np.ndarray

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @abstractmethod
    def log_marginals(self, product: int) -> np.ndarray:
        ...

    def marginal(self, component: int, product: int) -> RatingPmf:
        return RatingPmf.normalized(self.scale, np.exp(self.log_marginals(product)[component]))

    def marginal_table(self) -> np.ndarray:
        """All component marginals, shape ``(C, N, S)``."""
        return np.stack([np.exp(self.log_marginals(n)) for n in range(self.N)], axis=1)

    def initial_state(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights)

    def observe(self, state: np.ndarray, product: int, code: int) -> np.ndarray:
        return state + self.log_marginals(product)[:, code]

    def posterior_weights(self, state: np.ndarray) -> np.ndarray:
        top = state.max()
        assert np.isfinite(top), "every component has zero likelihood"
        w = np.exp(state - top)
        return w / w.sum()

    def pmf_array(self, state: np.ndarray, product: int) -> np.ndarray:
        probs = self.posterior_weights(state) @ np.exp(self.log_marginals(product))
        return probs / probs.sum()

    def log_evidence(self, history: RatingsVector) -> float:
        return float(logsumexp(self.state_for(history)))


def mixture_predict_pmf(model: MixtureTypeModel, product: int, history: RatingsVector) -> RatingPmf:
    """Posterior-weighted mixture of the component marginals at ``product``."""
    return model.predict_pmf(product, history)
