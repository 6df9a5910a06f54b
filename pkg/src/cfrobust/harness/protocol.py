"""The empirical robustness protocol: split, attack, cross-validate, predict, tabulate.

For every replication the honest users ``Y`` and held-out users ``X`` are
resampled, a push attack ``Z`` is generated for every attack size, and each
algorithm is cross-validated and fitted on ``Y`` and on ``(Y, Z)``.  Predictions
along random rating orders of the ``X`` users give the empirical RMS
distortion and prediction error for ``n = 1..n_max``; both are averaged over
replications and written as plot tables.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..algorithms import (
    KNN_GRID,
    TAU_GRID,
    NbConfig,
    NbFamily,
    kde_algorithm,
    knn_algorithm,
    simple_nn_algorithm,
)
from ..algorithms.base import Algorithm
from ..attacks import PushAttackConfig, generate_push_attack
from ..distortion import (
    rms_bound,
    rms_over_prefixes,
    sample_orders,
    trajectory_predictions,
    true_ratings,
)
from ..errors import InsufficientData
from ..ratings import MISSING, RatingScale, TrainingSet
from .io import PlotTable, ensure_dir, format_value, load_ratings, write_plot_table
from .seeds import derive_seed
from .synthetic import synthetic_ratings

logger = logging.getLogger(__name__)

Family = Callable[[float], Algorithm]


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment run.  Defaults are the full-scale protocol."""

    data_path: str | None = None
    levels: int = 5
    synthetic_products: int = 100
    synthetic_components: int = 4
    synthetic_missing: float = 0.5
    honest_count: int = 4000
    test_count: int = 1000
    attack_fractions: tuple[float, ...] = (0.1, 0.3, 0.5)
    attack_counts: tuple[int, ...] = ()
    promote_fraction: float = 0.5
    n_max: int = 40
    algorithms: tuple[str, ...] = ("kde", "nb", "knn")
    kde_beta: float = 0.15
    knn_k: int = 10
    knn_grid: tuple[int, ...] = KNN_GRID
    nb_tau: float = 10000.0
    tau_grid: tuple[float, ...] = TAU_GRID
    nb_l_max: int = 6
    nb_restarts: int = 3
    nb_em_max_iters: int = 200
    nb_em_tol: float = 1e-6
    cross_validate: bool = True
    replications: int = 5
    seed: int = 0

    def __post_init__(self):
        if min(self.honest_count, self.test_count, self.n_max, self.replications) < 1:
            raise ValueError("counts, n_max and replications must be positive")
        if self.attack_counts and len(self.attack_counts) != len(self.attack_fractions):
            raise ValueError("attack_counts needs one entry per attack fraction")
        for r in self.attack_fractions:
            if not 0.0 <= r < 1.0:
                raise ValueError(f"attack fraction {r} outside [0, 1)")

    @classmethod
    def desk(cls, **overrides) -> ExperimentConfig:
        """Small synthetic run used by the regression snapshot."""
        base = dict(synthetic_products=30, honest_count=480, test_count=120, attack_fractions=(0.3,),
                    n_max=10, replications=2, seed=2024)
        base.update(overrides)
        return cls(**base)

    @property
    def scale(self) -> RatingScale:
        return RatingScale.evenly_spaced(self.levels)

    def counts(self) -> list[int]:
        if self.attack_counts:
            return [int(c) for c in self.attack_counts]
        return [int(round(r * self.honest_count / (1.0 - r))) for r in self.attack_fractions]

    def attack_labels(self) -> list[str]:
        """Table suffixes: the requested fraction, or the nominal ratio of an explicit count."""
        if self.attack_counts:
            return [r_label(c / (self.honest_count + c)) for c in self.counts()]
        return [r_label(r) for r in self.attack_fractions]

    def nb_config(self, tau: float | None = None) -> NbConfig:
        return NbConfig(tau=self.nb_tau if tau is None else tau, L_max=self.nb_l_max,
                        em_max_iters=self.nb_em_max_iters, em_tol=self.nb_em_tol,
                        restarts=self.nb_restarts, rng_seed=derive_seed(self.seed, "nb-em"))

    # key=value config files -------------------------------------------------

    @classmethod
    def from_file(cls, path, **overrides) -> ExperimentConfig:
        values = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key=value")
                key, value = (s.strip() for s in line.split("=", 1))
                values[key.replace("-", "_")] = value
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_strings(values)

    @classmethod
    def from_strings(cls, values: dict) -> ExperimentConfig:
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in fields:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _coerce(fields[key].type, value)
        return cls(**kwargs)

    def to_lines(self) -> list[str]:
        out = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(format_value(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                v = format_value(v)
            out.append(f"{f.name}={'' if v is None else v}")
        return out


def _coerce(annotation: str, value):
    if not isinstance(value, str):
        return value
    text = value.strip()
    if annotation.startswith("tuple"):
        if not text:
            return ()
        conv = float if "float" in annotation else (int if "int" in annotation else str)
        return tuple(conv(p.strip()) for p in text.split(",") if p.strip())
    if annotation.startswith("bool"):
        return text.lower() in ("1", "true", "yes", "on")
    if annotation.startswith("int"):
        return int(text)
    if annotation.startswith("float"):
        return float(text)
    if "None" in annotation and text in ("", "none", "None"):
        return None
    return text


def r_label(r: float) -> str:
    # rounded so that a ratio such as 300/1000 still reads "0.3"
    return "%.10g" % r


# ---------------------------------------------------------------------------
# data and splits


def load_experiment_data(config: ExperimentConfig) -> TrainingSet:
    if config.data_path:
        return load_ratings(config.data_path, config.scale)
    W, _ = synthetic_ratings(config.honest_count + config.test_count, config.synthetic_products, config.scale,
                             n_components=config.synthetic_components, q=config.synthetic_missing,
                             seed=derive_seed(config.seed, "synthetic-data"))
    return W


def sample_protocol_split(data: TrainingSet, config: ExperimentConfig, seed) -> tuple[TrainingSet, TrainingSet]:
    """Sample honest users ``Y`` and test users ``X`` without replacement.

    Test users with fewer than ``n_max`` ratings are dropped from ``X``.
    """
    need = config.honest_count + config.test_count
    if data.M < need:
        raise InsufficientData(f"{data.M} users available, {need} requested")
    rng = np.random.default_rng(seed)
    users = rng.permutation(data.M)[:need]
    Y = data.subset(users[: config.honest_count])
    X = data.subset(users[config.honest_count:])
    keep = (X.codes != MISSING).sum(1) >= config.n_max
    if not keep.any():
        raise InsufficientData(f"no test user has at least {config.n_max} ratings")
    return Y, X.subset(np.flatnonzero(keep))


# ---------------------------------------------------------------------------
# cross validation


def validation_split(M: int, seed, fraction: float = 0.2) -> tuple[np.ndarray, np.ndarray]:
    """Indices of (training, validation) users; validation is ``fraction`` of ``M`` (at least 1)."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(M)
    n_val = max(1, int(round(fraction * M)))
    val, train = np.sort(perm[:n_val]), np.sort(perm[n_val:])
    assert not np.intersect1d(val, train).size
    return train, val


def cross_validation_scores(family: Family, grid: Sequence[float], W: TrainingSet, n: int, seed) -> list[float]:
    if W.M < 5:
        raise InsufficientData("cross validation needs at least 5 users")
    train_idx, val_idx = validation_split(W.M, seed)
    V = W.subset(val_idx)
    V = V.subset(np.flatnonzero((V.codes != MISSING).sum(1) >= n))
    if V.M == 0:
        raise InsufficientData(f"no validation user has at least {n} ratings")
    train = W.subset(train_idx)
    orders = sample_orders(V, n, derive_seed(int(seed) if not isinstance(seed, np.random.SeedSequence) else 0, "cv-orders"))
    truth = true_ratings(V, orders)
    scores = []
    for gamma in grid:
        pred = trajectory_predictions(family(gamma)(train), V, orders)
        scores.append(float(rms_over_prefixes((truth - pred) ** 2)[-1]))
    return scores


def cross_validate(family: Family, grid: Sequence[float], W: TrainingSet, n: int, seed):
    """Grid value with the lowest validation RMS prediction error (first one on ties)."""
    grid = list(grid)
    scores = cross_validation_scores(family, grid, W, n, seed)
    best = int(np.argmin(scores))
    return grid[best]


# ---------------------------------------------------------------------------
# experiment


@dataclass
class AlgorithmSpec:
    name: str
    family: Family | None
    grid: tuple
    default: float


def algorithm_specs(config: ExperimentConfig) -> dict[str, AlgorithmSpec]:
    specs = {
        "kde": AlgorithmSpec("kde", kde_algorithm, (), config.kde_beta),
        "knn": AlgorithmSpec("knn", lambda k: knn_algorithm(int(k)), tuple(config.knn_grid), config.knn_k),
        "nb": AlgorithmSpec("nb", NbFamily(config.nb_config()), tuple(config.tau_grid), config.nb_tau),
        "simple-nn": AlgorithmSpec("simple-nn", lambda _: simple_nn_algorithm(), (), 0),
    }
    unknown = set(config.algorithms) - set(specs)
    if unknown:
        raise ValueError(f"unknown algorithms: {sorted(unknown)}")
    return specs


def choose_parameter(spec: AlgorithmSpec, config: ExperimentConfig, W: TrainingSet, seed) -> float:
    if not config.cross_validate or len(spec.grid) <= 1:
        return spec.grid[0] if len(spec.grid) == 1 else spec.default
    return cross_validate(spec.family, spec.grid, W, config.n_max, seed)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    distortions: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    errors: dict[str, np.ndarray] = field(default_factory=dict)
    bounds: dict[str, np.ndarray] = field(default_factory=dict)
    realized_r: dict[str, float] = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)


def run_protocol(config: ExperimentConfig, data: TrainingSet | None = None) -> ExperimentResult:
    """Run every replication and average the per-``n`` series."""
    specs = algorithm_specs(config)
    data = load_experiment_data(config) if data is None else data
    counts = config.counts()
    labels = config.attack_labels()
    n_max = config.n_max
    out = ExperimentResult(config)
    out.summary += [f"config.{line}" for line in config.to_lines()]
    out.summary.append(f"data.users={data.M}")
    out.summary.append(f"data.products={data.N}")
    out.summary.append(f"data.missing_fraction={format_value(data.missing_fraction())}")

    dist_acc = {(a, lab): np.zeros(n_max) for a in config.algorithms for lab in labels}
    err_acc = {a: np.zeros(n_max) for a in config.algorithms}
    r_acc = {lab: 0.0 for lab in labels}

    for rep in range(config.replications):
        split_seed = derive_seed(config.seed, rep, "split")
        order_seed = derive_seed(config.seed, rep, "orders")
        Y, X = sample_protocol_split(data, config, split_seed)
        orders = sample_orders(X, n_max, order_seed)
        truth = true_ratings(X, orders)
        out.summary += [f"rep{rep}.split_seed={split_seed}", f"rep{rep}.order_seed={order_seed}",
                        f"rep{rep}.honest={Y.M}", f"rep{rep}.test={X.M}"]

        attacked = []
        for lab, count in zip(labels, counts):
            attack_seed = derive_seed(config.seed, rep, "attack", lab)
            if count > 0:
                Z, _ = generate_push_attack(Y, PushAttackConfig(count, config.promote_fraction, attack_seed))
            else:
                Z = TrainingSet.empty(Y.scale, Y.N)
            r = Z.M / (Y.M + Z.M)
            r_acc[lab] += r / config.replications
            attacked.append((lab, Y.concat(Z)))
            out.summary.append(f"rep{rep}.attack[{lab}].seed={attack_seed}")
            out.summary.append(f"rep{rep}.attack[{lab}].count={Z.M}")

        for name in config.algorithms:
            spec = specs[name]
            cv_seed = derive_seed(config.seed, rep, "cv", name)
            t0 = time.perf_counter()
            gamma = choose_parameter(spec, config, Y, cv_seed)
            clean = trajectory_predictions(spec.family(gamma)(Y), X, orders)
            err_acc[name] += rms_over_prefixes((truth - clean) ** 2) / config.replications
            out.summary.append(f"rep{rep}.{name}.param[clean]={format_value(float(gamma))}")
            for lab, W in attacked:
                g = choose_parameter(spec, config, W, cv_seed)
                corrupt = trajectory_predictions(spec.family(g)(W), X, orders)
                dist_acc[(name, lab)] += rms_over_prefixes((clean - corrupt) ** 2) / config.replications
                out.summary.append(f"rep{rep}.{name}.param[{lab}]={format_value(float(g))}")
            logger.info("replication %d: %s done in %.1fs", rep, name, time.perf_counter() - t0)

    out.distortions = dist_acc
    out.errors = err_acc
    out.realized_r = r_acc
    n_values = np.arange(1, n_max + 1)
    for lab in labels:
        r = r_acc[lab]
        out.bounds[lab] = np.array([rms_bound(int(n), r) if r < 1 else np.inf for n in n_values])
        out.summary.append(f"attack[{lab}].mean_r={format_value(r)}")
    return out


def table_rows(values: np.ndarray) -> list[tuple[int, float]]:
    return [(k + 1, float(v)) for k, v in enumerate(values)]


def write_report(result: ExperimentResult, out_dir) -> Path:
    out = ensure_dir(out_dir)
    for lab, bound in result.bounds.items():
        write_plot_table(PlotTable(f"bnd_{lab}", table_rows(bound)), out)
    for (name, lab), series in result.distortions.items():
        write_plot_table(PlotTable(f"{name}_distortions_{lab}", table_rows(series)), out)
    for name, series in result.errors.items():
        write_plot_table(PlotTable(f"{name}_errors", table_rows(series)), out)
    with open(out / "summary.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(result.summary) + "\n")
    return out


def run_experiment(config: ExperimentConfig, out_dir, data: TrainingSet | None = None) -> Path:
    return write_report(run_protocol(config, data), out_dir)
