"""Naive Bayes mixture fitted by MAP expectation-maximization.

Generative model: pick component ``l`` with probability ``eta[l]``, draw each
product's rating independently from ``theta[l, n]``, then hide every rating
independently with probability ``q``.  Priors are geometric on ``L``
(``exp(-tau L)``), Dirichlet(2, ..., 2) on ``eta`` and on each ``theta[l, n]``,
and Beta(2, 2) on ``q``.

Since the missingness factor does not involve ``(L, eta, theta)``, ``q`` has
the closed form MAP ``(#? + 1) / (M N + 2)`` and EM only runs over the mixture.
``L`` is chosen by fitting every ``L`` in ``1..L_max`` and keeping the one with
the highest posterior log density.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from ..errors import EmptyTrainingSet
from ..ratings import MISSING, RatingScale, TrainingSet
from .base import MixtureTypeModel

logger = logging.getLogger(__name__)

TAU_GRID = (1.0, 10.0, 100.0, 1000.0, 10000.0, 100000.0)


@dataclass(frozen=True)
class NbConfig:
    tau: float = 10000.0
    L_max: int = 6
    em_max_iters: int = 200
    em_tol: float = 1e-6
    restarts: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if not self.tau > 0 or not self.em_tol > 0:
            raise ValueError("tau and em_tol must be positive")
        if self.L_max < 1 or self.em_max_iters < 1 or self.restarts < 1:
            raise ValueError("L_max, em_max_iters and restarts must be positive")


@dataclass
class NbParams:
    """Mixture weights ``eta`` (L,), per-component rating PMFs ``theta`` (L, N, S), hiding rate ``q``."""

    scale: RatingScale
    eta: np.ndarray
    theta: np.ndarray
    q: float

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float)
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.ndim != 3 or self.theta.shape[0] != len(self.eta) or self.theta.shape[2] != self.scale.size:
            raise ValueError("theta must have shape (L, N, S) matching eta and the scale")
        if abs(self.eta.sum() - 1.0) > 1e-10 or np.any(self.eta < 0):
            raise ValueError("eta must lie on the simplex")
        if np.any(np.abs(self.theta.sum(-1) - 1.0) > 1e-10) or np.any(self.theta < 0):
            raise ValueError("every theta[l, n] must be a PMF")
        if not 0.0 <= self.q < 1.0:
            raise ValueError("q must lie in [0, 1)")

    @property
    def L(self) -> int:
        return len(self.eta)

    @property
    def N(self) -> int:
        return self.theta.shape[1]


@dataclass
class EmRun:
    """Outcome of EM for one ``L`` and one initialisation."""

    L: int
    seed: int
    eta: np.ndarray
    theta: np.ndarray
    objective: float
    trace: list[float] = field(default_factory=list)
    converged: bool = False
    iterates: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)


def map_missing_rate(W: TrainingSet) -> float:
    n_missing = int(np.count_nonzero(W.codes == MISSING))
    return (n_missing + 1) / (W.codes.size + 2)


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _level_masks(W: TrainingSet) -> np.ndarray:
    """One-hot ratings, shape (S, M, N)."""
    return np.stack([(W.codes == s).astype(float) for s in range(W.scale.size)])


def _component_loglik(masks: np.ndarray, log_theta: np.ndarray) -> np.ndarray:
    """``sum_{n rated} log theta[l, n, w_n]`` for every vector and component, shape (M, L)."""
    return sum(masks[s] @ log_theta[:, :, s].T for s in range(masks.shape[0]))


def _missing_terms(W: TrainingSet, q: float) -> float:
    """Prior and likelihood terms in ``q``; constant during EM."""
    n_missing = int(np.count_nonzero(W.codes == MISSING))
    n_rated = W.codes.size - n_missing
    out = _log(q) + _log(1 - q)
    if n_missing:
        out += n_missing * _log(q)
    if n_rated:
        out += n_rated * _log(1 - q)
    return out


def _structure_terms(L: int, N: int, S: int, tau: float) -> float:
    """Terms that depend on ``L`` only: the geometric prior and the Dirichlet normalisers."""
    return -tau * L + float(gammaln(2 * L)) + L * N * float(gammaln(2 * S))


def _mixture_terms(loglik: np.ndarray, eta: np.ndarray, theta_log: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        log_eta = np.log(eta)
    joint = loglik + log_eta
    return float(logsumexp(joint, axis=1).sum() + log_eta.sum() + theta_log.sum())


def nb_posterior_logdensity(params: NbParams, W: TrainingSet, cfg: NbConfig) -> float:
    """Log posterior density of ``params`` given ``W``.

    Excludes the normalisers of the ``L`` and ``q`` priors and of the
    posterior itself; keeps the Dirichlet normalisers of ``eta`` and ``theta``
    because they change with ``L``.
    """
    if W.N != params.N or W.scale != params.scale:
        raise ValueError("params and training set disagree on products or scale")
    with np.errstate(divide="ignore"):
        log_theta = np.log(params.theta)
    structure = _structure_terms(params.L, params.N, params.scale.size, cfg.tau)
    missing = _missing_terms(W, params.q)
    if W.M == 0:
        mixture = float(np.log(params.eta).sum() + log_theta.sum())
    else:
        mixture = _mixture_terms(_component_loglik(_level_masks(W), log_theta), params.eta, log_theta)
    return structure + missing + mixture


def run_em(W: TrainingSet, L: int, cfg: NbConfig, seed: int, masks: np.ndarray | None = None,
           keep_iterates: bool = False) -> EmRun:
    """MAP-EM for fixed ``L`` from one random start.

    ``trace`` holds the part of the log posterior that varies with
    ``(eta, theta)`` at the initial point and after every M-step; it differs
    from :func:`nb_posterior_logdensity` by a constant for fixed ``L``.
    """
    if masks is None:
        masks = _level_masks(W)
    S, M, N = masks.shape
    rng = np.random.default_rng(seed)
    eta = np.full(L, 1.0 / L)
    theta = rng.dirichlet(np.ones(S), size=(L, N))
    rated = masks.sum(0)

    log_theta = np.log(theta)
    loglik = _component_loglik(masks, log_theta)
    objective = _mixture_terms(loglik, eta, log_theta)
    trace = [objective]
    iterates = [(eta, theta)] if keep_iterates else []
    converged = False
    for _ in range(cfg.em_max_iters):
        joint = loglik + np.log(eta)
        resp = np.exp(joint - logsumexp(joint, axis=1, keepdims=True))

        eta = (resp.sum(0) + 1.0) / (M + L)
        counts = np.stack([resp.T @ masks[s] for s in range(S)], axis=-1)
        theta = (counts + 1.0) / ((resp.T @ rated)[..., None] + S)

        log_theta = np.log(theta)
        loglik = _component_loglik(masks, log_theta)
        new = _mixture_terms(loglik, eta, log_theta)
        trace.append(new)
        if keep_iterates:
            iterates.append((eta, theta))
        gain = new - objective
        objective = new
        if gain < cfg.em_tol:
            converged = True
            break
    return EmRun(L, seed, eta, theta, objective, trace, converged, iterates)


def _em_seeds(cfg: NbConfig, L: int) -> list[int]:
    restarts = 1 if L == 1 else cfg.restarts
    children = np.random.SeedSequence(entropy=cfg.rng_seed, spawn_key=(L,)).spawn(restarts)
    return [int(c.generate_state(1)[0]) for c in children]


def nb_fit_path(W: TrainingSet, cfg: NbConfig) -> list[EmRun]:
    """Best EM run (over restarts) for each ``L`` in ``1..L_max``."""
    if W.M == 0:
        raise EmptyTrainingSet("naive Bayes needs at least one training vector")
    masks = _level_masks(W)
    path = []
    for L in range(1, cfg.L_max + 1):
        best = None
        for seed in _em_seeds(cfg, L):
            run = run_em(W, L, cfg, seed, masks)
            if best is None or run.objective > best.objective:
                best = run
        logger.debug("L=%d objective=%.6f", L, best.objective)
        path.append(best)
    return path


def nb_select(path: list[EmRun], W: TrainingSet, tau: float) -> tuple[NbParams, "FactoredMixture"]:
    """Pick the ``L`` with the largest posterior log density under ``tau``."""
    S = W.scale.size

    def score(run: EmRun) -> float:
        return run.objective + _structure_terms(run.L, W.N, S, tau)

    best = max(path, key=score)  # first maximum wins, so ties go to the smaller L
    params = NbParams(W.scale, best.eta, best.theta, map_missing_rate(W))
    return params, FactoredMixture(params)


def nb_fit(W: TrainingSet, cfg: NbConfig = NbConfig()) -> tuple[NbParams, "FactoredMixture"]:
    return nb_select(nb_fit_path(W, cfg), W, cfg.tau)


def nb_sample(params: NbParams, m: int, rng_seed) -> TrainingSet:
    """Draw ``m`` i.i.d. ratings vectors from the generative model."""
    rng = np.random.default_rng(rng_seed)
    comp = rng.choice(params.L, size=m, p=params.eta)
    cdf = np.cumsum(params.theta[comp], axis=-1)
    u = rng.random((m, params.N))
    codes = (u[..., None] >= cdf).sum(-1)
    codes = np.minimum(codes, params.scale.size - 1)
    hidden = rng.random((m, params.N)) < params.q
    codes[hidden] = MISSING
    return TrainingSet(params.scale, codes)


class FactoredMixture(MixtureTypeModel):
    """The type PMF ``sum_l eta_l prod_n theta[l, n]`` implied by fitted parameters."""

    def __init__(self, params: NbParams):
        self.params = params
        self.scale = params.scale
        self.N = params.N
        self.weights = params.eta
        with np.errstate(divide="ignore"):
            self._log_theta = np.log(params.theta)

    def log_marginals(self, product: int) -> np.ndarray:
        return self._log_theta[:, product, :]

    def marginal_table(self) -> np.ndarray:
        return self.params.theta


class NbFamily:
    """Naive Bayes indexed by ``tau``, sharing the per-``L`` EM path between values.

    EM for a fixed ``L`` does not depend on ``tau``, so a cross-validation
    sweep over ``tau`` only needs one path per training set.
    """

    def __init__(self, cfg: NbConfig = NbConfig()):
        self.cfg = cfg
        self._cache: dict[int, tuple[TrainingSet, list[EmRun]]] = {}

    def path(self, W: TrainingSet) -> list[EmRun]:
        hit = self._cache.get(id(W))
        if hit is None or hit[0] is not W:
            hit = (W, nb_fit_path(W, self.cfg))
            self._cache[id(W)] = hit
        return hit[1]

    def __call__(self, tau: float):
        def fit(W: TrainingSet) -> FactoredMixture:
            return nb_select(self.path(W), W, tau)[1]
        fit.__name__ = f"nb(tau={tau:g})"
        return fit


def nb_algorithm(cfg: NbConfig = NbConfig()):
    def fit(W: TrainingSet) -> FactoredMixture:
        return nb_fit(W, cfg)[1]
    fit.__name__ = f"nb(tau={cfg.tau:g})"
    return fit
