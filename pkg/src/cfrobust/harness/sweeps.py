"""Randomized tiny instances and the numerical bound checks run over them.

Every instance is small enough for exact enumeration over all inspection
orders, so each check is a statement about exact expectations rather than
sampled estimates.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..algorithms import kde_fit
from ..distortion import exact_distortions, kl_bound, rms_bound
from ..oracle import densify, dense_kl
from ..ratings import MISSING, RatingScale, TrainingSet
from .seeds import rng_for

SWEEP_N = (3, 4, 5)
SWEEP_M = (4, 8, 12)
SWEEP_R = (0.25, 0.5)
Z_KINDS = ("random", "copy", "anti", "constant", "mixed")
TOL = 1e-9


@dataclass
class SweepInstance:
    index: int
    Y: TrainingSet
    Z: TrainingSet
    z_kind: str

    @property
    def r(self) -> float:
        return self.Z.M / (self.Y.M + self.Z.M)

    @property
    def N(self) -> int:
        return self.Y.N


def _random_binary(rng, rows, cols, missing=0.3):
    codes = rng.integers(0, 2, (rows, cols))
    return np.where(rng.random((rows, cols)) < missing, MISSING, codes)


def sweep_instance(index: int, seed: int = 0) -> SweepInstance:
    """Instance ``index`` of the sweep; the grid cycles over N, then M, then r."""
    N = SWEEP_N[index % 3]
    M = SWEEP_M[(index // 3) % 3]
    r = SWEEP_R[(index // 9) % 2]
    kind = Z_KINDS[index % len(Z_KINDS)]
    rng = rng_for(seed, "sweep", index)
    n_z = int(round(r * M))
    Y = _random_binary(rng, M - n_z, N)
    picks = Y[rng.integers(0, Y.shape[0], n_z)]
    if kind == "random":
        Z = _random_binary(rng, n_z, N)
    elif kind == "copy":
        Z = picks
    elif kind == "anti":
        Z = np.where(picks == MISSING, MISSING, 1 - picks)
    elif kind == "constant":
        Z = np.full((n_z, N), int(rng.integers(0, 2)))
    else:
        # copies with every missing entry filled by 0
        Z = np.where(picks == MISSING, 0, picks)
    scale = RatingScale.binary()
    return SweepInstance(index, TrainingSet(scale, Y), TrainingSet(scale, Z), kind)


@dataclass
class CheckTally:
    name: str
    description: str
    checked: int = 0
    violations: int = 0
    worst_excess: float = -math.inf

    def record(self, lhs: float, rhs: float) -> None:
        self.checked += 1
        excess = lhs - rhs
        self.worst_excess = max(self.worst_excess, excess)
        if excess > TOL:
            self.violations += 1

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: {self.description}; {self.violations}/{self.checked} violations, "
                f"worst excess {self.worst_excess:.3g}")


CHECKS = {
    "kl-bound": "kde exact KL distortion <= ln(1/(1-r))/n",
    "rms-bound": "kde exact RMS distortion <= sqrt(ln(1/(1-r))/(2n))",
    "pinsker": "RMS distortion <= sqrt(KL distortion / 2)",
    "binary-vs-rms": "binary distortion <= RMS distortion",
    "binary-vs-2rms": "binary distortion <= 2 * RMS distortion",
    "chain-rule": "KL distortion <= D(dense clean || dense corrupt) / n",
    "linear-divergence": "D(dense clean || dense corrupt) <= ln(1/(1-r))",
}


@dataclass
class SweepReport:
    tallies: dict[str, CheckTally] = field(default_factory=dict)
    instances: int = 0
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.tallies.values())

    def lines(self) -> list[str]:
        return [t.line() for t in self.tallies.values()]


def check_instance(inst: SweepInstance, tallies: dict[str, CheckTally]) -> None:
    clean = kde_fit(inst.Y)
    corrupt = kde_fit(inst.Y.concat(inst.Z))
    r = inst.r
    type_kl = dense_kl(densify(clean), densify(corrupt))
    tallies["linear-divergence"].record(type_kl, math.log(1.0 / (1.0 - r)))
    for perm in itertools.permutations(range(inst.N)):
        res = exact_distortions(clean, corrupt, perm)
        kl = res["kl"].prefix_values()
        rms = res["rms"].prefix_values()
        binary = res["binary"].prefix_values()
        for n in range(1, inst.N + 1):
            k, d, b = kl[n - 1], rms[n - 1], binary[n - 1]
            tallies["kl-bound"].record(k, kl_bound(n, r))
            tallies["rms-bound"].record(d, rms_bound(n, r))
            tallies["pinsker"].record(d, math.sqrt(k / 2.0))
            tallies["binary-vs-rms"].record(b, d)
            tallies["binary-vs-2rms"].record(b, 2.0 * d)
            tallies["chain-rule"].record(k, type_kl / n)


def run_sweep(count: int = 200, seed: int = 0, checks=None) -> SweepReport:
    names = list(CHECKS) if checks is None else list(checks)
    report = SweepReport({name: CheckTally(name, CHECKS[name]) for name in CHECKS})
    t0 = time.perf_counter()
    for i in range(count):
        check_instance(sweep_instance(i, seed), report.tallies)
    report.instances = count
    report.seconds = time.perf_counter() - t0
    report.tallies = {name: report.tallies[name] for name in names}
    return report
