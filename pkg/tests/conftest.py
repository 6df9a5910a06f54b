import numpy as np
import pytest
from hypothesis import strategies as st

from cfrobust.ratings import MISSING, RatingScale, TrainingSet

BINARY = RatingScale.binary()
FIVE = RatingScale.five_level()


def random_training_set(rng, M, N, scale=BINARY, missing=0.3) -> TrainingSet:
    codes = rng.integers(0, scale.size, (M, N))
    codes = np.where(rng.random((M, N)) < missing, MISSING, codes)
    return TrainingSet(scale, codes)


def pmf_arrays(size, positive=False):
    lo = 1e-3 if positive else 0.0
    return (st.lists(st.floats(lo, 1.0, allow_nan=False), min_size=size, max_size=size)
            .filter(lambda w: sum(w) > 1e-6)
            .map(lambda w: np.asarray(w) / sum(w)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, repeated at the end of the run so they survive output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
