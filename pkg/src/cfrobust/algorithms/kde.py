"""Kernel density estimation over discrete rating types.

Every training vector ``w`` contributes one product-form kernel whose
marginal at product ``n`` is ``k_{w_n}``: a PMF peaked at the observed level
with odds ``exp(-|s' - s| / beta)`` against it, or uniform when ``w_n`` is "?".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import EmptyTrainingSet
from ..ratings import RatingPmf, RatingScale, TrainingSet
from .base import MixtureTypeModel

DEFAULT_BETA = 0.15


@dataclass(frozen=True)
class KdeConfig:
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")


def log_kernel_table(scale: RatingScale, beta: float) -> np.ndarray:
    """Log kernels, shape ``(S + 1, S)``; row 0 is the "?" kernel, row ``c + 1`` the kernel at level ``c``."""
    v = scale.values
    logits = -np.abs(v[:, None] - v[None, :]) / beta
    table = np.empty((scale.size + 1, scale.size))
    table[0] = -np.log(scale.size)
    table[1:] = logits - logsumexp(logits, axis=1, keepdims=True)
    return table


def kernel_component(s: float | None, scale: RatingScale, beta: float = DEFAULT_BETA) -> RatingPmf:
    """The kernel ``k_s``; ``s=None`` stands for "?"."""
    row = 0 if s is None else scale.code_of(s) + 1
    return RatingPmf.normalized(scale, np.exp(log_kernel_table(scale, beta)[row]))


class KernelMixture(MixtureTypeModel):
    """Equal-weight mixture of one product kernel per training vector."""

    def __init__(self, W: TrainingSet, beta: float = DEFAULT_BETA):
        if W.M == 0:
            raise EmptyTrainingSet("KDE needs at least one training vector")
        self.scale = W.scale
        self.N = W.N
        self.beta = beta
        self.codes = W.codes
        self.weights = np.full(W.M, 1.0 / W.M)
        self._table = log_kernel_table(W.scale, beta)
        self._rows = W.codes.astype(np.intp) + 1

    def log_marginals(self, product: int) -> np.ndarray:
        return self._table[self._rows[:, product]]

    def observe(self, state, product, code):
        return state + self._table[self._rows[:, product], code]


def kde_fit(W: TrainingSet, cfg: KdeConfig = KdeConfig()) -> KernelMixture:
    return KernelMixture(W, cfg.beta)


def kde_algorithm(beta: float = DEFAULT_BETA):
    """Fit function ``TrainingSet -> KernelMixture`` for a fixed bandwidth."""
    def fit(W: TrainingSet) -> KernelMixture:
        return KernelMixture(W, beta)
    fit.__name__ = f"kde(beta={beta})"
    return fit


__all__ = ["KdeConfig", "KernelMixture", "kde_fit", "kernel_component", "log_kernel_table",
           "kde_algorithm"]
