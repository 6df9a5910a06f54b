"""Ratings, rating scales, per-product PMFs and the elementary operations on them.

Ratings are carried around as *level codes*: the index of the rating inside
its :class:`RatingScale`.  A code of ``-1`` stands for an unrated product
("?").  Float rating values only appear at the edges (``RatingScale.levels``,
``RatingsVector.rating``) so that level comparisons are always exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    AbsoluteContinuityViolation,
    ScaleMismatch,
    WeightSumViolation,
)

MISSING = -1
PROB_ATOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RatingScale:
    """Finite, strictly increasing set of admissible rating values in [0, 1]."""

    levels: tuple[float, ...]

    def __post_init__(self):
        levels = tuple(float(v) for v in self.levels)
        if len(levels) < 2:
            raise ValueError("a rating scale needs at least 2 levels")
        if any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"levels must be strictly increasing: {levels}")
        if levels[0] < 0.0 or levels[-1] > 1.0:
            raise ValueError(f"levels must lie in [0, 1]: {levels}")
        object.__setattr__(self, "levels", levels)

    @classmethod
    def binary(cls) -> RatingScale:
        return cls((0.0, 1.0))

    @classmethod
    def evenly_spaced(cls, count: int) -> RatingScale:
        """``count`` levels ``0, 1/(count-1), ..., 1``; raw star ``i`` maps to level ``i-1``."""
        return cls(tuple(i / (count - 1) for i in range(count)))

    @classmethod
    def five_level(cls) -> RatingScale:
        return cls.evenly_spaced(5)

    @property
    def size(self) -> int:
        return len(self.levels)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.levels)

    @property
    def min(self) -> float:
        return self.levels[0]

    @property
    def max(self) -> float:
        return self.levels[-1]

    @property
    def is_binary(self) -> bool:
        return self.levels == (0.0, 1.0)

    def code_of(self, value: float) -> int:
        """Level code of an exact rating value."""
        try:
            return self.levels.index(float(value))
        except ValueError:
            raise ValueError(f"{value!r} is not a level of {self.levels}") from None

    def __len__(self) -> int:
        return len(self.levels)


@dataclass(frozen=True)
class RatingsVector:
    """Sparse ratings of ``length`` products; absent products are unrated."""

    scale: RatingScale
    length: int
    codes: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        codes = {}
        for n, c in dict(self.codes).items():
            n, c = int(n), int(c)
            if not 0 <= n < self.length:
                raise IndexError(f"product {n} outside [0, {self.length})")
            if not 0 <= c < self.scale.size:
                raise ValueError(f"level code {c} outside scale of size {self.scale.size}")
            codes[n] = c
        object.__setattr__(self, "codes", dict(sorted(codes.items())))

    @classmethod
    def from_values(cls, scale: RatingScale, length: int, values: Mapping[int, float]) -> RatingsVector:
        return cls(scale, length, {n: scale.code_of(v) for n, v in values.items()})

    @classmethod
    def from_dense(cls, scale: RatingScale, codes: Sequence[int]) -> RatingsVector:
        """Build from a dense code sequence where ``-1`` marks "?"."""
        return cls(scale, len(codes), {n: int(c) for n, c in enumerate(codes) if c != MISSING})

    @classmethod
    def empty(cls, scale: RatingScale, length: int) -> RatingsVector:
        return cls(scale, length, {})

    def code(self, n: int) -> int:
        return self.codes.get(n, MISSING)

    def rating(self, n: int) -> float | None:
        c = self.codes.get(n)
        return None if c is None else self.scale.levels[c]

    @property
    def rated(self) -> tuple[int, ...]:
        return tuple(self.codes)

    @property
    def n_rated(self) -> int:
        return len(self.codes)

    @property
    def n_missing(self) -> int:
        return self.length - len(self.codes)

    def with_rating(self, n: int, code: int) -> RatingsVector:
        codes = dict(self.codes)
        codes[n] = code
        return RatingsVector(self.scale, self.length, codes)

    def to_dense(self) -> np.ndarray:
        out = np.full(self.length, MISSING, dtype=np.int8)
        for n, c in self.codes.items():
            out[n] = c
        return out

    def __len__(self) -> int:
        return self.length


class TrainingSet:
    """An ordered collection of ratings vectors over a shared scale and product set.

    Stored as a dense ``(M, N)`` int8 code matrix (``-1`` for "?") so that
    fitting and neighbour search can be vectorised; :attr:`vectors` gives the
    sparse per-user view.
    """

    def __init__(self, scale: RatingScale, codes: np.ndarray):
        codes = np.array(codes, dtype=np.int8, copy=True)
        if codes.ndim != 2:
            raise ValueError("code matrix must be 2-D (M, N)")
        if codes.size and (codes.min() < MISSING or codes.max() >= scale.size):
            raise ValueError("code matrix holds values outside the scale")
        self.scale = scale
        self.codes = _frozen(codes)

    @classmethod
    def from_vectors(cls, vectors: Iterable[RatingsVector], scale: RatingScale | None = None,
                     n_products: int | None = None) -> TrainingSet:
        vectors = list(vectors)
        if vectors:
            scale = scale or vectors[0].scale
            n_products = vectors[0].length if n_products is None else n_products
            for v in vectors:
                if v.scale != scale or v.length != n_products:
                    raise ScaleMismatch("all vectors must share the scale and product count")
        if scale is None or n_products is None:
            raise ValueError("an empty training set needs an explicit scale and product count")
        codes = np.full((len(vectors), n_products), MISSING, dtype=np.int8)
        for m, v in enumerate(vectors):
            for n, c in v.codes.items():
                codes[m, n] = c
        return cls(scale, codes)

    @classmethod
    def empty(cls, scale: RatingScale, n_products: int) -> TrainingSet:
        return cls(scale, np.full((0, n_products), MISSING, dtype=np.int8))

    @property
    def M(self) -> int:
        return self.codes.shape[0]

    @property
    def N(self) -> int:
        return self.codes.shape[1]

    def __len__(self) -> int:
        return self.M

    def __getitem__(self, m: int) -> RatingsVector:
        return RatingsVector.from_dense(self.scale, self.codes[m])

    def __iter__(self) -> Iterator[RatingsVector]:
        return (self[m] for m in range(self.M))

    @property
    def vectors(self) -> list[RatingsVector]:
        return list(self)

    @property
    def rated_mask(self) -> np.ndarray:
        return self.codes != MISSING

    def values(self) -> np.ndarray:
        """Float rating matrix with NaN for "?"."""
        out = np.full(self.codes.shape, np.nan)
        mask = self.rated_mask
        out[mask] = self.scale.values[self.codes[mask]]
        return out

    def missing_fraction(self) -> float:
        if self.codes.size == 0:
            return 0.0
        return float(np.mean(self.codes == MISSING))

    def subset(self, rows: Sequence[int]) -> TrainingSet:
        return TrainingSet(self.scale, self.codes[np.asarray(rows, dtype=np.intp)])

    def concat(self, other: TrainingSet) -> TrainingSet:
        """The training set ``(self, other)``: rows of ``self`` followed by rows of ``other``."""
        if other.scale != self.scale or other.N != self.N:
            raise ScaleMismatch("cannot concatenate training sets over different products or scales")
        return TrainingSet(self.scale, np.vstack([self.codes, other.codes]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrainingSet):
            return NotImplemented
        return self.scale == other.scale and np.array_equal(self.codes, other.codes)

    def __repr__(self) -> str:
        return f"TrainingSet(M={self.M}, N={self.N}, levels={self.scale.levels})"


class RatingPmf:
    """A probability mass function over the levels of a rating scale."""

    __slots__ = ("scale", "probs")

    def __init__(self, scale: RatingScale, probs, *, atol: float = PROB_ATOL):
        p = np.array(probs, dtype=float, copy=True)
        if p.shape != (scale.size,):
            raise ValueError(f"expected {scale.size} probabilities, got shape {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError(f"probabilities must be finite and nonnegative: {p}")
        if abs(p.sum() - 1.0) > atol:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        self.scale = scale
        self.probs = _frozen(p)

    @classmethod
    def normalized(cls, scale: RatingScale, weights) -> RatingPmf:
        w = np.asarray(weights, dtype=float)
        return cls(scale, w / w.sum())

    @classmethod
    def uniform(cls, scale: RatingScale) -> RatingPmf:
        return cls(scale, np.full(scale.size, 1.0 / scale.size))

    @classmethod
    def point_mass(cls, scale: RatingScale, code: int) -> RatingPmf:
        p = np.zeros(scale.size)
        p[code] = 1.0
        return cls(scale, p)

    def mean(self) -> float:
        return pmf_mean(self)

    def __getitem__(self, code: int) -> float:
        return float(self.probs[code])

    def __eq__(self, other) -> bool:
        if not isinstance(other, RatingPmf):
            return NotImplemented
        return self.scale == other.scale and np.array_equal(self.probs, other.probs)

    def __repr__(self) -> str:
        return f"RatingPmf({np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True)
class InspectionOrder:
    """Order in which an active user inspects products; ``n`` is the prefix in use."""

    order: tuple[int, ...]
    n: int | None = None

    def __post_init__(self):
        order = tuple(int(i) for i in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValueError(f"{order} is not a permutation of 0..{len(order) - 1}")
        n = len(order) if self.n is None else int(self.n)
        if not 0 <= n <= len(order):
            raise ValueError(f"prefix length {n} exceeds N={len(order)}")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "n", n)

    @classmethod
    def identity(cls, N: int, n: int | None = None) -> InspectionOrder:
        return cls(tuple(range(N)), n)

    @property
    def N(self) -> int:
        return len(self.order)

    @property
    def prefix(self) -> tuple[int, ...]:
        return self.order[: self.n]


def _check_same_scale(p: RatingPmf, q: RatingPmf) -> None:
    if p.scale != q.scale:
        raise ScaleMismatch("PMFs are over different scales")


def kl_divergence(p: RatingPmf, q: RatingPmf) -> float:
    """Natural-log KL divergence D(p || q), with 0 ln(0/q) = 0."""
    _check_same_scale(p, q)
    return kl_from_arrays(p.probs, q.probs)


def kl_from_arrays(p: np.ndarray, q: np.ndarray) -> float:
    support = p > 0
    if np.any(q[support] <= 0):
        raise AbsoluteContinuityViolation("q vanishes where p has mass")
    ps, qs = p[support], q[support]
    return max(float(np.sum(ps * (np.log(ps) - np.log(qs)))), 0.0)


def pmf_mean(p: RatingPmf) -> float:
    return float(np.dot(p.scale.values, p.probs))


def l1_distance(p: RatingPmf, q: RatingPmf) -> float:
    _check_same_scale(p, q)
    return float(np.abs(p.probs - q.probs).sum())


def mix_pmfs(parts: Sequence[tuple[float, RatingPmf]]) -> RatingPmf:
    """Convex combination ``sum_i w_i p_i`` of PMFs over one scale."""
    if not parts:
        raise WeightSumViolation("nothing to mix")
    weights = np.array([w for w, _ in parts], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > PROB_ATOL:
        raise WeightSumViolation(f"weights must be nonnegative and sum to 1, got {weights}")
    scale = parts[0][1].scale
    for _, p in parts:
        if p.scale != scale:
            raise ScaleMismatch("cannot mix PMFs over different scales")
    probs = sum(w * p.probs for w, p in parts)
    # renormalise away accumulated rounding; the weight check above bounds the drift
    return RatingPmf(scale, probs / math.fsum(probs))
