"""Constructors for manipulated training data.

* :func:`generate_push_attack`: profiles that rate a random half (by default)
  of the products at the top level and fill the rest from honest marginals.
* :func:`build_worst_case_instance`: honest and manipulated data on which
  the agreement-count NN keeps a constant RMS distortion however many
  products the active user rates.
* :func:`build_block_toy`: all-ones / all-zeros blocks padded with empty
  vectors, contrasting kNN with KDE at the very first prediction.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .algorithms.simple_nn import SimpleNN
from .errors import EmptyTrainingSet, OddN, TooLarge
from .ratings import MISSING, InspectionOrder, RatingScale, RatingsVector, TrainingSet

MAX_WORST_CASE_N = 24


@dataclass(frozen=True)
class PushAttackConfig:
    count: int
    promote_fraction: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if not 0.0 < self.promote_fraction <= 1.0:
            raise ValueError("promote_fraction must lie in (0, 1]")


def empirical_marginals(Y: TrainingSet) -> np.ndarray:
    """Per-product rating frequencies in ``Y``, shape (N, S); uniform where nobody rated."""
    S = Y.scale.size
    counts = np.stack([(Y.codes == s).sum(0) for s in range(S)], axis=1).astype(float)
    totals = counts.sum(1, keepdims=True)
    return np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 1.0 / S)


def generate_push_attack(Y: TrainingSet, cfg: PushAttackConfig) -> tuple[TrainingSet, np.ndarray]:
    """Return the attack profiles ``Z`` and the sorted promoted products."""
    if Y.M == 0:
        raise EmptyTrainingSet("the push attack samples fillers from honest data")
    rng = np.random.default_rng(cfg.rng_seed)
    N, S = Y.N, Y.scale.size
    promoted = np.sort(rng.choice(N, size=int(math.floor(cfg.promote_fraction * N)), replace=False))

    cdf = np.cumsum(empirical_marginals(Y), axis=1)
    u = rng.random((cfg.count, N))
    codes = np.minimum((u[..., None] >= cdf[None]).sum(-1), S - 1)
    codes[:, promoted] = S - 1

    cells = cfg.count * N
    n_hidden = int(round(Y.missing_fraction() * cells))
    hidden = rng.choice(cells, size=n_hidden, replace=False)
    codes.reshape(-1)[hidden] = MISSING
    return TrainingSet(Y.scale, codes), promoted


@dataclass
class WorstCaseInstance:
    N: int
    Y: TrainingSet
    Z: TrainingSet
    order: InspectionOrder
    clean_type: np.ndarray

    @property
    def r(self) -> float:
        return self.Z.M / (self.Y.M + self.Z.M)

    def clean_model(self) -> SimpleNN:
        return SimpleNN(self.Y)

    def corrupt_model(self) -> SimpleNN:
        return SimpleNN(self.Y.concat(self.Z))

    def history(self, k: int):
        """The clean active user's ratings after inspecting the first ``k`` products."""
        return RatingsVector(self.Y.scale, self.N, {j: int(self.clean_type[j]) for j in range(k)})

    def tie_sets(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """For even ``k``, the three groups of tied neighbours for product ``k`` (0-based).

        Row indices into ``(Y, Z)``: honest vectors rating every product up to
        and including ``k``, their manipulated partners, and the manipulated
        partners of honest vectors that rate everything before ``k`` but not ``k``.
        """
        rated = self.Y.codes != MISSING
        before = rated[:, :k].all(1)
        y1 = np.flatnonzero(before & rated[:, k])
        z2 = np.flatnonzero(before & ~rated[:, k]) + self.Y.M
        return y1, y1 + self.Y.M, z2


def build_worst_case_instance(N: int) -> WorstCaseInstance:
    """Honest data over every pattern in ``{(1,0), (?,?)}^(N/2)`` and its filled-in manipulated twin."""
    if N % 2:
        raise OddN(f"N must be even, got {N}")
    if N > MAX_WORST_CASE_N or N < 2:
        raise TooLarge(f"N must lie in [2, {MAX_WORST_CASE_N}]")
    pairs = N // 2
    y_rows, z_rows = [], []
    for keep in itertools.product((True, False), repeat=pairs):
        y, z = [], []
        for kept in keep:
            y += [1, 0] if kept else [MISSING, MISSING]
            z += [1, 0] if kept else [0, 1]
        y_rows.append(y)
        z_rows.append(z)
    scale = RatingScale.binary()
    clean = np.tile([1, 0], pairs)
    return WorstCaseInstance(N, TrainingSet(scale, np.array(y_rows)), TrainingSet(scale, np.array(z_rows)),
                             InspectionOrder.identity(N), clean)


def build_block_toy(K: int, N: int = 1) -> tuple[TrainingSet, TrainingSet]:
    """``Y``: K all-ones and K all-"?" vectors; ``Z``: K all-zeros and K all-"?" vectors."""
    if K < 1 or N < 1:
        raise ValueError("K and N must be positive")
    scale = RatingScale.binary()
    blank = np.full((K, N), MISSING)
    Y = TrainingSet(scale, np.vstack([np.ones((K, N), dtype=int), blank]))
    Z = TrainingSet(scale, np.vstack([np.zeros((K, N), dtype=int), blank]))
    return Y, Z


__all__ = [
    "PushAttackConfig", "empirical_marginals", "generate_push_attack", "WorstCaseInstance",
    "build_worst_case_instance", "build_block_toy",
]
