"""Manipulation distortion: exact, Monte Carlo and empirical estimates, plus the closed-form bounds.

The exact and Monte Carlo measures follow a hypothetical active user who
inspects products in a fixed order and rates each one by sampling from a
*trajectory law*, by default the clean predictor's own PMF.  At step ``k`` the
clean and corrupted predictions for the next product are compared:

* ``kl``: KL divergence of the clean PMF from the corrupted PMF;
* ``rms``: squared difference of the scalar predictions (the reported value
  is the square root of the average);
* ``binary``: drop in the probability that the threshold prediction
  (``1`` iff ``p(1) >= 1/2``) matches a rating drawn from the clean PMF.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .algorithms.base import Algorithm, MixtureTypeModel, Predictor, ProbabilisticPredictor
from .errors import EnumerationTooLarge, InsufficientHistory, NonBinaryScale, UnsupportedMeasure
from .ratings import InspectionOrder, RatingsVector, TrainingSet, kl_from_arrays

MEASURES = ("kl", "rms", "binary")
MAX_ENUMERATION = 10**7


def kl_bound(n: int, r: float) -> float:
    """Worst-case KL distortion of a linear algorithm after ``n`` ratings with manipulated fraction ``r``."""
    if n < 1 or not 0.0 <= r < 1.0:
        raise ValueError("need n >= 1 and 0 <= r < 1")
    return -math.log1p(-r) / n


def rms_bound(n: int, r: float) -> float:
    return math.sqrt(kl_bound(n, r) / 2.0)


class DegenerateLaw(ProbabilisticPredictor):
    """Trajectory law that rates every product exactly as a scalar predictor predicts.

    Needed for scalar-only algorithms whose clean predictions are themselves
    rating levels, e.g. the agreement-count NN on its worst-case instance.
    """

    deterministic = True

    def __init__(self, predictor: Predictor):
        self.predictor = predictor
        self.scale = predictor.scale
        self.N = predictor.N

    def initial_state(self):
        return RatingsVector.empty(self.scale, self.N)

    def observe(self, state, product, code):
        return state.with_rating(product, code)

    def pmf_array(self, state, product):
        value = self.predictor.predict_scalar(product, state)
        probs = np.zeros(self.scale.size)
        probs[self.scale.code_of(value)] = 1.0
        return probs


class _Tracker:
    """Uniform state-passing view over probabilistic and scalar-only predictors."""

    def __init__(self, predictor: Predictor):
        self.predictor = predictor
        self.probabilistic = predictor.probabilistic
        self.values = predictor.scale.values

    def initial(self):
        if self.probabilistic:
            return self.predictor.initial_state()
        return RatingsVector.empty(self.predictor.scale, self.predictor.N)

    def observe(self, state, product, code):
        if self.probabilistic:
            return self.predictor.observe(state, product, code)
        return state.with_rating(product, code)

    def pmf(self, state, product) -> np.ndarray:
        return self.predictor.pmf_array(state, product)

    def scalar(self, state, product, pmf=None) -> float:
        if self.probabilistic:
            if pmf is None:
                pmf = self.pmf(state, product)
            return float(self.values @ pmf)
        return self.predictor.predict_scalar(product, state)


@dataclass
class DistortionResult:
    """Per-step expectations for one measure along one inspection order.

    ``per_step[k]`` is the expected integrand at step ``k + 1``;
    ``value`` is the distortion over all steps.  For ``rms`` the integrand
    is the squared difference and ``value`` the root of its average.
    """

    measure: str
    per_step: np.ndarray
    standard_error: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.per_step)

    def prefix_values(self) -> np.ndarray:
        """Distortion after ``n = 1, ..., len(per_step)`` ratings."""
        avg = np.cumsum(self.per_step) / np.arange(1, self.n + 1)
        if self.measure == "rms":
            return np.sqrt(np.maximum(avg, 0.0))
        return avg

    @property
    def value(self) -> float:
        return float(self.prefix_values()[-1])


def _check_measures(measures, clean: Predictor, corrupt: Predictor) -> None:
    for m in measures:
        if m not in MEASURES:
            raise ValueError(f"unknown measure {m!r}")
        if m in ("kl", "binary") and not (clean.probabilistic and corrupt.probabilistic):
            raise UnsupportedMeasure(f"{m} distortion needs PMF predictions from both models")
        if m == "binary" and not clean.scale.is_binary:
            raise NonBinaryScale("binary distortion is defined for the {0, 1} scale only")


def _resolve_law(clean: Predictor, law: ProbabilisticPredictor | None) -> ProbabilisticPredictor:
    if law is not None:
        return law
    if not clean.probabilistic:
        raise UnsupportedMeasure("a scalar-only clean model needs an explicit trajectory law")
    return clean


def _integrands(measures, pc, pz, xc, xz) -> dict[str, float]:
    out = {}
    for m in measures:
        if m == "kl":
            out[m] = kl_from_arrays(pc, pz)
        elif m == "rms":
            out[m] = (xc - xz) ** 2
        else:
            bc = 1 if pc[1] >= 0.5 else 0
            bz = 1 if pz[1] >= 0.5 else 0
            out[m] = pc[bc] - pc[bz]
    return out


def _as_order(order, n) -> tuple[tuple[int, ...], int]:
    if isinstance(order, InspectionOrder):
        seq, n = order.order, order.n if n is None else n
    else:
        seq = tuple(order)
        n = len(seq) if n is None else n
    if n > len(seq):
        raise ValueError("n exceeds the inspection order")
    return seq, n


def exact_distortions(clean: Predictor, corrupt: Predictor, order, n: int | None = None,
                      measures: Sequence[str] = ("kl", "rms", "binary"),
                      law: ProbabilisticPredictor | None = None) -> dict[str, DistortionResult]:
    """Exact expectations by depth-first enumeration of every rating history.

    Histories sharing a prefix share their model states, so the cost is one
    visit per reachable history of length ``< n``.
    """
    seq, n = _as_order(order, n)
    measures = tuple(measures)
    _check_measures(measures, clean, corrupt)
    law = _resolve_law(clean, law)
    S = clean.scale.size
    if not getattr(law, "deterministic", False) and S ** n > MAX_ENUMERATION:
        raise EnumerationTooLarge(f"{S}^{n} rating paths exceed {MAX_ENUMERATION}")

    tc, tz, tl = _Tracker(clean), _Tracker(corrupt), _Tracker(law)
    law_is_clean = law is clean
    totals = {m: np.zeros(n) for m in measures}

    def visit(depth, prob, sc, sz, sl):
        product = seq[depth]
        pc = tc.pmf(sc, product) if tc.probabilistic else None
        pz = tz.pmf(sz, product) if tz.probabilistic else None
        xc = tc.scalar(sc, product, pc)
        xz = tz.scalar(sz, product, pz)
        for m, v in _integrands(measures, pc, pz, xc, xz).items():
            totals[m][depth] += prob * v
        if depth + 1 == n:
            return
        pl = pc if law_is_clean else tl.pmf(sl, product)
        for code in range(S):
            w = pl[code]
            if w > 0:
                visit(depth + 1, prob * w,
                      tc.observe(sc, product, code),
                      tz.observe(sz, product, code),
                      sc if law_is_clean else tl.observe(sl, product, code))

    if n > 0:
        visit(0, 1.0, tc.initial(), tz.initial(), tl.initial())
    return {m: DistortionResult(m, totals[m]) for m in measures}


def kl_distortion_exact(clean, corrupt, order, n=None) -> DistortionResult:
    return exact_distortions(clean, corrupt, order, n, ("kl",))["kl"]


def rms_distortion_exact(clean, corrupt, order, n=None, law=None) -> DistortionResult:
    return exact_distortions(clean, corrupt, order, n, ("rms",), law=law)["rms"]


def binary_distortion_exact(clean, corrupt, order, n=None) -> DistortionResult:
    return exact_distortions(clean, corrupt, order, n, ("binary",))["binary"]


def _sample_codes(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    """One draw per row of ``probs`` (B, S) by inverse CDF."""
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(len(probs)) * cdf[:, -1]
    return np.minimum((u[:, None] >= cdf).sum(1), probs.shape[1] - 1)


def _batched_pmf(model: MixtureTypeModel, states: np.ndarray, product: int) -> np.ndarray:
    top = states.max(1, keepdims=True)
    w = np.exp(states - top)
    probs = w @ np.exp(model.log_marginals(product))
    return probs / probs.sum(1, keepdims=True)


def _batched_integrands(measure, values, pc, pz):
    if measure == "kl":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(pc > 0, pc * (np.log(pc) - np.log(pz)), 0.0)
        return np.maximum(terms.sum(1), 0.0)
    if measure == "rms":
        return (pc @ values - pz @ values) ** 2
    bc = (pc[:, 1] >= 0.5).astype(int)
    bz = (pz[:, 1] >= 0.5).astype(int)
    rows = np.arange(len(pc))
    return pc[rows, bc] - pc[rows, bz]


def distortion_monte_carlo(clean: Predictor, corrupt: Predictor, order, n: int | None = None,
                           samples: int = 10_000, seed=0, which: str = "rms",
                           law: ProbabilisticPredictor | None = None) -> DistortionResult:
    """Average the integrand over trajectories drawn from the trajectory law.

    Reports the plain sample standard error of every per-step mean.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    seq, n = _as_order(order, n)
    _check_measures((which,), clean, corrupt)
    law = _resolve_law(clean, law)
    rng = np.random.default_rng(seed)
    draws = np.zeros((samples, n))

    if all(isinstance(m, MixtureTypeModel) for m in (clean, corrupt, law)):
        values = clean.scale.values
        sc = np.tile(clean.initial_state(), (samples, 1))
        sz = np.tile(corrupt.initial_state(), (samples, 1))
        sl = sc if law is clean else np.tile(law.initial_state(), (samples, 1))
        for k, product in enumerate(seq[:n]):
            pc = _batched_pmf(clean, sc, product)
            pz = _batched_pmf(corrupt, sz, product)
            draws[:, k] = _batched_integrands(which, values, pc, pz)
            pl = pc if law is clean else _batched_pmf(law, sl, product)
            codes = _sample_codes(rng, pl)
            sc = sc + clean.log_marginals(product)[:, codes].T
            sz = sz + corrupt.log_marginals(product)[:, codes].T
            sl = sc if law is clean else sl + law.log_marginals(product)[:, codes].T
    else:
        tc, tz, tl = _Tracker(clean), _Tracker(corrupt), _Tracker(law)
        for i in range(samples):
            sc, sz, sl = tc.initial(), tz.initial(), tl.initial()
            for k, product in enumerate(seq[:n]):
                pc = tc.pmf(sc, product) if tc.probabilistic else None
                pz = tz.pmf(sz, product) if tz.probabilistic else None
                xc, xz = tc.scalar(sc, product, pc), tz.scalar(sz, product, pz)
                draws[i, k] = _integrands((which,), pc, pz, xc, xz)[which]
                pl = tl.pmf(sl, product)
                code = int(_sample_codes(rng, pl[None, :])[0])
                sc, sz, sl = (tc.observe(sc, product, code), tz.observe(sz, product, code),
                              tl.observe(sl, product, code))

    mean = draws.mean(0)
    se = draws.std(0, ddof=1) / math.sqrt(samples) if samples > 1 else np.full(n, np.nan)
    return DistortionResult(which, mean, se)


@dataclass
class DistortionReport:
    """Distortion after each prefix length in ``n_values`` next to the matching bounds."""

    n_values: list[int]
    r: float
    method: str
    kl: list[float] | None = None
    rms: list[float] | None = None
    binary: list[float] | None = None
    kl_bound: list[float] = field(default_factory=list)
    rms_bound: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.r < 1.0:
            raise ValueError("r must lie in [0, 1)")
        if not self.kl_bound:
            self.kl_bound = [kl_bound(n, self.r) for n in self.n_values]
        if not self.rms_bound:
            self.rms_bound = [rms_bound(n, self.r) for n in self.n_values]
        for series in (self.kl, self.rms, self.binary, self.kl_bound, self.rms_bound):
            if series is not None and len(series) != len(self.n_values):
                raise ValueError("every series needs one value per n")


def exact_report(clean: Predictor, corrupt: Predictor, order, r: float,
                 measures: Sequence[str] = ("kl", "rms", "binary"),
                 law: ProbabilisticPredictor | None = None) -> DistortionReport:
    seq, n = _as_order(order, None)
    results = exact_distortions(clean, corrupt, seq, n, measures, law)
    n_values = list(range(1, n + 1))
    series = {m: [float(v) for v in res.prefix_values()] for m, res in results.items()}
    return DistortionReport(n_values, r, "exact", **series)


# ---------------------------------------------------------------------------
# empirical measures over held-out users


def sample_orders(X: TrainingSet, n: int, seed) -> list[np.ndarray]:
    """For every user in ``X`` a uniformly random ordered sample of ``n`` of its rated products."""
    rng = np.random.default_rng(seed)
    orders = []
    for m in range(X.M):
        rated = np.flatnonzero(X.codes[m] != -1)
        if rated.size < n:
            raise InsufficientHistory(f"user {m} has {rated.size} ratings, fewer than n={n}")
        orders.append(rng.choice(rated, size=n, replace=False))
    return orders


def trajectory_predictions(predictor: Predictor, X: TrainingSet, orders) -> np.ndarray:
    """Scalar predictions ``(|X|, n)`` along each user's own rating order."""
    n = len(orders[0]) if orders else 0
    out = np.empty((X.M, n))
    for m, order in enumerate(orders):
        out[m] = predictor.predict_sequence(order, X.codes[m, order])
    return out


def true_ratings(X: TrainingSet, orders) -> np.ndarray:
    return np.array([X.scale.values[X.codes[m, o]] for m, o in enumerate(orders)]).reshape(X.M, -1)


def rms_over_prefixes(sq: np.ndarray) -> np.ndarray:
    """``sqrt(mean_x (1/n) sum_{k<=n} sq[x, k])`` for every ``n``."""
    if sq.size == 0:
        return np.zeros(sq.shape[1])
    n = sq.shape[1]
    per_user = np.cumsum(sq, axis=1) / np.arange(1, n + 1)
    return np.sqrt(per_user.mean(0))


def _orders_for(X, n, seed, orders):
    if orders is None:
        return sample_orders(X, n, seed)
    orders = [np.asarray(o)[:n] for o in orders]
    if any(len(o) < n for o in orders):
        raise InsufficientHistory("a supplied order is shorter than n")
    return orders


def empirical_rms_distortion(algo: Algorithm, X: TrainingSet, Y: TrainingSet, Z: TrainingSet,
                             n: int, orders=None, seed=0) -> float:
    """RMS change of predictions on held-out trajectories when ``Z`` joins ``Y``."""
    orders = _orders_for(X, n, seed, orders)
    clean = trajectory_predictions(algo(Y), X, orders)
    corrupt = trajectory_predictions(algo(Y.concat(Z)), X, orders)
    return float(rms_over_prefixes((clean - corrupt) ** 2)[-1])


def empirical_rms_prediction_error(algo: Algorithm, X: TrainingSet, Y: TrainingSet, n: int,
                                   orders=None, seed=0) -> float:
    orders = _orders_for(X, n, seed, orders)
    pred = trajectory_predictions(algo(Y), X, orders)
    return float(rms_over_prefixes((true_ratings(X, orders) - pred) ** 2)[-1])
