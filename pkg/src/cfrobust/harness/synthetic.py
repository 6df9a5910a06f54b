"""Synthetic ratings drawn from a naive Bayes generative model."""
from __future__ import annotations

import numpy as np

from ..algorithms.naive_bayes import NbParams, nb_sample
from ..ratings import RatingScale, TrainingSet

TASTE_WIDTH = 0.2


def synthetic_params(n_components: int, n_products: int, scale: RatingScale, q: float, seed) -> NbParams:
    """Random user types with peaked per-product tastes.

    Each component prefers one random level per product; its rating PMF
    decays as ``exp(-|s - peak| / 0.2)`` away from that level.  Component
    weights come from a Dirichlet(5, ..., 5).
    """
    rng = np.random.default_rng(seed)
    eta = rng.dirichlet(np.full(n_components, 5.0))
    peaks = rng.integers(0, scale.size, size=(n_components, n_products))
    v = scale.values
    logits = -np.abs(v[None, None, :] - v[peaks][..., None]) / TASTE_WIDTH
    theta = np.exp(logits)
    theta /= theta.sum(-1, keepdims=True)
    return NbParams(scale, eta, theta, q)


def synthetic_ratings(n_users: int, n_products: int, scale: RatingScale, *, n_components: int = 4,
                      q: float = 0.5, seed=0) -> tuple[TrainingSet, NbParams]:
    ss = np.random.SeedSequence(seed)
    param_seed, sample_seed = ss.spawn(2)
    params = synthetic_params(n_components, n_products, scale, q, param_seed)
    return nb_sample(params, n_users, sample_seed), params
