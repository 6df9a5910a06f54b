"""Ratings CSV ingestion, the binary cache, and plot tables."""
from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import EmptyTrainingSet, FormatError, ParseError, UnknownRatingValue
from ..ratings import MISSING, RatingScale, TrainingSet

logger = logging.getLogger(__name__)


@dataclass
class RatingsData:
    """A training set plus the external ids its rows and columns came from."""

    ratings: TrainingSet
    user_ids: list[str] = field(default_factory=list)
    item_ids: list[str] = field(default_factory=list)
    duplicates: int = 0


def _sort_ids(ids) -> list[str]:
    ids = list(ids)
    if all(i.lstrip("-").isdigit() for i in ids):
        return sorted(ids, key=int)
    return sorted(ids)


def read_ratings_csv(path, scale: RatingScale) -> RatingsData:
    """Parse ``user_id,item_id,raw_rating`` lines; raw ratings are ``1..levels``.

    Raw rating ``i`` maps to level code ``i - 1``.  Users and items are indexed
    in sorted id order.  A repeated (user, item) pair keeps the last rating.
    """
    entries: dict[tuple[str, str], int] = {}
    duplicates = 0
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise ParseError(lineno, f"expected 3 fields, got {len(row)}")
            user, item, raw = (f.strip() for f in row)
            if lineno == 1 and not raw.lstrip("-").isdigit():
                continue  # header
            try:
                stars = int(raw)
            except ValueError:
                raise ParseError(lineno, f"rating {raw!r} is not an integer") from None
            if not 1 <= stars <= scale.size:
                raise UnknownRatingValue(lineno, f"rating {stars} outside 1..{scale.size}")
            if (user, item) in entries:
                duplicates += 1
            entries[(user, item)] = stars - 1
    if not entries:
        raise EmptyTrainingSet(f"{path} holds no ratings")
    if duplicates:
        logger.warning("%d duplicate (user, item) pairs in %s; kept the last of each", duplicates, path)
    users = _sort_ids({u for u, _ in entries})
    items = _sort_ids({i for _, i in entries})
    urow = {u: k for k, u in enumerate(users)}
    icol = {i: k for k, i in enumerate(items)}
    codes = np.full((len(users), len(items)), MISSING, dtype=np.int8)
    for (u, i), c in entries.items():
        codes[urow[u], icol[i]] = c
    return RatingsData(TrainingSet(scale, codes), users, items, duplicates)


def ingest_csv(path, scale: RatingScale) -> TrainingSet:
    return read_ratings_csv(path, scale).ratings


def write_ratings_csv(path, W: TrainingSet, user_ids: Sequence[str] | None = None,
                      item_ids: Sequence[str] | None = None) -> None:
    """Inverse of :func:`read_ratings_csv` (raw ratings ``code + 1``)."""
    user_ids = user_ids or [str(m) for m in range(W.M)]
    item_ids = item_ids or [str(n) for n in range(W.N)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        for m, n in zip(*np.nonzero(W.codes != MISSING)):
            out.writerow([user_ids[m], item_ids[n], int(W.codes[m, n]) + 1])


def save_cache(path, data: RatingsData) -> None:
    np.savez_compressed(path, codes=data.ratings.codes, levels=np.asarray(data.ratings.scale.levels),
                        user_ids=np.asarray(data.user_ids, dtype=str),
                        item_ids=np.asarray(data.item_ids, dtype=str))


def load_cache(path) -> RatingsData:
    with np.load(path) as z:
        scale = RatingScale(tuple(z["levels"].tolist()))
        return RatingsData(TrainingSet(scale, z["codes"]), z["user_ids"].tolist(), z["item_ids"].tolist())


def load_ratings(path, scale: RatingScale) -> TrainingSet:
    """Load either a ratings CSV or a ``.npz`` cache written by :func:`save_cache`."""
    if str(path).endswith(".npz"):
        return load_cache(path).ratings
    return ingest_csv(path, scale)


# ---------------------------------------------------------------------------
# plot tables


@dataclass
class PlotTable:
    name: str
    rows: list[tuple[int, float]]

    def __post_init__(self):
        ns = [n for n, _ in self.rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise FormatError(f"{self.name}: n must be strictly increasing")

    @property
    def n(self) -> list[int]:
        return [n for n, _ in self.rows]

    @property
    def values(self) -> list[float]:
        return [v for _, v in self.rows]


def format_value(v: float) -> str:
    # shortest round-trip repr: exact on read-back and locale independent
    return repr(float(v))


def write_plot_table(series: PlotTable, path) -> Path:
    path = Path(path)
    if path.is_dir():
        path = path / f"{series.name}.table"
    lines = [f"{int(n)} {format_value(float(v))}\n" for n, v in series.rows]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.writelines(lines)
    return path


def read_plot_table(path) -> PlotTable:
    path = Path(path)
    rows = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected '<n> <value>'")
            try:
                rows.append((int(parts[0]), float(parts[1])))
            except ValueError:
                raise FormatError(f"{path}:{lineno}: malformed number") from None
    name = path.name[: -len(".table")] if path.name.endswith(".table") else path.stem
    return PlotTable(name, rows)


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
