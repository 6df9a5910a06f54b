"""Brute-force reference computations over explicitly enumerated rating types.

Everything here works on the full table of ``|S|^N`` type probabilities and
is only meant for tiny instances, as an independent check of the factored
computations in :mod:`cfrobust.algorithms`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algorithms.base import MixtureTypeModel
from .errors import AbsoluteContinuityViolation, ScaleMismatch, TooLarge, ZeroEvidence
from .ratings import RatingPmf, RatingScale, RatingsVector

MAX_TABLE = 10**7


@dataclass
class DenseTypePmf:
    """Probabilities of all complete types, as an ``N``-dimensional array with ``S`` entries per axis."""

    scale: RatingScale
    probs: np.ndarray

    def __post_init__(self):
        if self.probs.shape != (self.scale.size,) * self.probs.ndim:
            raise ValueError("every axis must have one entry per rating level")
        if abs(self.probs.sum() - 1.0) > 1e-10:
            raise ValueError("type probabilities must sum to 1")

    @property
    def N(self) -> int:
        return self.probs.ndim


def _guard(scale: RatingScale, N: int) -> None:
    if scale.size ** N > MAX_TABLE:
        raise TooLarge(f"{scale.size}^{N} types exceeds the {MAX_TABLE} limit")


def densify(model: MixtureTypeModel) -> DenseTypePmf:
    """Expand a product-form mixture into its full type table."""
    _guard(model.scale, model.N)
    marg = model.marginal_table()  # (C, N, S)
    table = np.zeros((model.scale.size,) * model.N)
    for w, rows in zip(model.weights, marg):
        if w == 0:
            continue
        comp = np.array(w)
        for row in rows:
            comp = np.multiply.outer(comp, row)
        table += comp
    return DenseTypePmf(model.scale, table)


def dense_condition(t: DenseTypePmf, history: RatingsVector, product: int) -> RatingPmf:
    """PMF of the rating of ``product`` given ``history``, by summing the table."""
    if history.scale != t.scale or history.length != t.N:
        raise ScaleMismatch("history does not match the type table")
    index = [slice(None)] * t.N
    for n, c in history.codes.items():
        if n != product:
            index[n] = slice(c, c + 1)
    sub = t.probs[tuple(index)]
    other = tuple(a for a in range(t.N) if a != product)
    weights = sub.sum(axis=other)
    total = weights.sum()
    if total <= 0:
        raise ZeroEvidence("the history has zero probability under the table")
    return RatingPmf(t.scale, weights / total)


def dense_kl(a: DenseTypePmf, b: DenseTypePmf) -> float:
    if a.scale != b.scale or a.probs.shape != b.probs.shape:
        raise ScaleMismatch("type tables differ in shape")
    p, q = a.probs.ravel(), b.probs.ravel()
    support = p > 0
    if np.any(q[support] <= 0):
        raise AbsoluteContinuityViolation("second table vanishes where the first has mass")
    ps, qs = p[support], q[support]
    return max(float(np.sum(ps * (np.log(ps) - np.log(qs)))), 0.0)


def dense_mix(parts: list[tuple[float, DenseTypePmf]]) -> DenseTypePmf:
    scale = parts[0][1].scale
    return DenseTypePmf(scale, sum(w * t.probs for w, t in parts))
