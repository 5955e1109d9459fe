"""Week-normalized citation z-scores and the stable z-score ranking.

A paper's z-score compares its citation count with every paper first
submitted in the same 7-day week.  Because the result depends on which
weekday a week starts on, z is computed under all seven weekday-anchored
partitions; the stable z-score is the mean of those seven values minus
their standard deviation, so papers whose standing swings with the
partition are penalised.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Mapping, Sequence

import numpy as np

from .citations import SnapshotSet
from .errors import DataIntegrityError, ValidationError
from .model import Corpus

WEEKDAYS = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")
STD_CONVENTIONS = {"population": 0, "sample": 1}
CANONICAL_SPLIT_DAY = "sun"
DEFAULT_TOP_N = 40


class RankingWarning(UserWarning):
    pass


def parse_weekday(value) -> int:
    """Accept 0-6 (Monday=0) or a weekday name/prefix such as ``"sun"``."""
    if isinstance(value, int) and 0 <= value <= 6:
        return value
    key = str(value).strip().lower()[:3]
    if key in WEEKDAYS:
        return WEEKDAYS.index(key)
    raise ValidationError(f"unknown weekday {value!r}")


def ddof_for(std_convention: str) -> int:
    try:
        return STD_CONVENTIONS[std_convention]
    except KeyError:
        raise ValidationError(
            f"std convention must be one of {sorted(STD_CONVENTIONS)}, got {std_convention!r}"
        ) from None


@dataclass(frozen=True)
class SplitSpec:
    """Partition of the calendar into 7-day weeks starting on ``start_weekday``.

    Week 0 starts on the latest ``start_weekday`` on or before ``epoch``.
    """

    start_weekday: int
    epoch: date

    def __post_init__(self):
        object.__setattr__(self, "start_weekday", parse_weekday(self.start_weekday))

    @property
    def origin(self) -> date:
        return self.epoch - timedelta(days=(self.epoch.weekday() - self.start_weekday) % 7)

    @property
    def name(self) -> str:
        return WEEKDAYS[self.start_weekday]

    def week_bounds(self, index: int) -> tuple[date, date]:
        start = self.origin + timedelta(days=7 * index)
        return start, start + timedelta(days=6)


def all_splits(epoch: date) -> list[SplitSpec]:
    """The seven splits, Monday first."""
    return [SplitSpec(d, epoch) for d in range(7)]


def assign_week(day: date, split: SplitSpec) -> int:
    return (day - split.origin).days // 7


def week_label(day: date, split: SplitSpec) -> tuple[date, date]:
    return split.week_bounds(assign_week(day, split))


@dataclass(frozen=True)
class ZScoreRecord:
    base_id: str
    per_split_z: tuple[float, ...]
    mean_z: float
    std_z: float
    stable_z: float


@dataclass(frozen=True)
class RankedEntry:
    rank: int
    base_id: str
    citation_count: int
    stable_z: float
    primary_category: str
    week_label: tuple[date, date]
    title: str = ""

    @property
    def link(self) -> str:
        return f"https://arxiv.org/abs/{self.base_id}"


def group_zscores(groups: np.ndarray, counts: np.ndarray, ddof: int = 0) -> np.ndarray:
    """z-score of each count within its group label.

    Groups whose spread is zero (or undefined, for a sample std on a
    single member) give z = 0 to every member.
    """
    counts = np.asarray(counts, dtype=np.float64)
    _, inv, sizes = np.unique(groups, return_inverse=True, return_counts=True)
    means = np.bincount(inv, weights=counts) / sizes
    dev = counts - means[inv]
    denom = sizes - ddof
    sq = np.bincount(inv, weights=dev * dev)
    with np.errstate(divide="ignore", invalid="ignore"):
        std = np.where(denom > 0, np.sqrt(sq / np.maximum(denom, 1)), 0.0)
    s = std[inv]
    out = np.zeros_like(counts)
    ok = s > 0
    out[ok] = dev[ok] / s[ok]
    return out


def _inputs(corpus: Corpus, snapshot: SnapshotSet | Mapping[str, int]):
    counts = snapshot.counts() if isinstance(snapshot, SnapshotSet) else dict(snapshot)
    ids = sorted(corpus.records)
    missing = [i for i in ids if i not in counts]
    if missing:
        raise DataIntegrityError(
            f"{len(missing)} papers have no citation snapshot: {', '.join(missing)}"
        )
    ordinals = np.array([corpus.records[i].submitted_date.toordinal() for i in ids], dtype=np.int64)
    values = np.array([counts[i] for i in ids], dtype=np.float64)
    return ids, ordinals, values


def _split_weeks(ordinals: np.ndarray, split: SplitSpec) -> np.ndarray:
    return (ordinals - split.origin.toordinal()) // 7


def zscores_for_split(
    corpus: Corpus,
    snapshot: SnapshotSet | Mapping[str, int],
    split: SplitSpec,
    std_convention: str = "population",
) -> dict[str, float]:
    ids, ordinals, values = _inputs(corpus, snapshot)
    if not ids:
        return {}
    z = group_zscores(_split_weeks(ordinals, split), values, ddof_for(std_convention))
    return dict(zip(ids, z.tolist()))


def _row_moments(mat: np.ndarray, ddof: int) -> tuple[np.ndarray, np.ndarray]:
    # Sorting first makes the result independent of split order, so papers
    # whose seven z values are permutations of each other tie exactly.
    ordered = np.sort(mat, axis=1)
    return ordered.mean(axis=1), ordered.std(axis=1, ddof=ddof)


def stable_zscore(per_split_z: Sequence[float], std_convention: str = "population") -> float:
    values = np.asarray(per_split_z, dtype=np.float64)
    if values.shape != (7,):
        raise ValidationError(f"stable z-score needs exactly 7 split values, got {values.size}")
    mean, std = _row_moments(values[None, :], ddof_for(std_convention))
    return float(mean[0] - std[0])


def split_matrix(ordinals: np.ndarray, values: np.ndarray, epoch: date, ddof: int) -> np.ndarray:
    """(papers x 7) matrix of z-scores, columns ordered Monday..Sunday."""
    out = np.empty((len(values), 7))
    for split in all_splits(epoch):
        out[:, split.start_weekday] = group_zscores(_split_weeks(ordinals, split), values, ddof)
    return out


def compute_zscores(
    corpus: Corpus,
    snapshot: SnapshotSet | Mapping[str, int],
    epoch: date | None = None,
    std_convention: str = "population",
) -> dict[str, ZScoreRecord]:
    ddof = ddof_for(std_convention)
    ids, ordinals, values = _inputs(corpus, snapshot)
    if not ids:
        return {}
    mat = split_matrix(ordinals, values, epoch or corpus.window[0], ddof)
    mean, std = _row_moments(mat, ddof)
    stable = mean - std
    return {
        i: ZScoreRecord(i, tuple(mat[k].tolist()), float(mean[k]), float(std[k]), float(stable[k]))
        for k, i in enumerate(ids)
    }


def scores(
    corpus: Corpus,
    snapshot: SnapshotSet | Mapping[str, int],
    split_day=None,
    epoch: date | None = None,
    std_convention: str = "population",
) -> dict[str, float]:
    """Stable z-scores, or single-split z-scores when ``split_day`` is given."""
    epoch = epoch or corpus.window[0]
    if split_day is not None:
        return zscores_for_split(corpus, snapshot, SplitSpec(split_day, epoch), std_convention)
    return {k: r.stable_z for k, r in compute_zscores(corpus, snapshot, epoch, std_convention).items()}


def order_ids(score: Mapping[str, float], counts: Mapping[str, int]) -> list[str]:
    """Score descending, then citation count descending, then id ascending."""
    return sorted(score, key=lambda i: (-score[i], -counts[i], i))


def rank_top_n(
    corpus: Corpus,
    snapshot: SnapshotSet | Mapping[str, int],
    n: int = DEFAULT_TOP_N,
    split_day=None,
    epoch: date | None = None,
    std_convention: str = "population",
    label_split_day=CANONICAL_SPLIT_DAY,
) -> list[RankedEntry]:
    """Rank papers by stable z-score (or single-split z) and keep the top ``n``.

    Week labels use ``split_day`` in single-split mode, else ``label_split_day``.
    """
    if not isinstance(n, int) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    epoch = epoch or corpus.window[0]
    score = scores(corpus, snapshot, split_day, epoch, std_convention)
    counts = snapshot.counts() if isinstance(snapshot, SnapshotSet) else dict(snapshot)
    if n > len(score):
        warnings.warn(
            f"requested top {n} but the corpus holds {len(score)} papers", RankingWarning, stacklevel=2
        )
    label_split = SplitSpec(split_day if split_day is not None else label_split_day, epoch)
    out = []
    for rank, base_id in enumerate(order_ids(score, counts)[:n], start=1):
        rec = corpus.records[base_id]
        out.append(RankedEntry(
            rank=rank,
            base_id=base_id,
            citation_count=int(counts[base_id]),
            stable_z=score[base_id],
            primary_category=rec.primary_category,
            week_label=week_label(rec.submitted_date, label_split),
            title=rec.title,
        ))
    return out


def rank_delta(current: Sequence, previous: Sequence) -> dict[str, int | str]:
    """Positions gained since ``previous`` (positive = moved up), or ``"new"``.

    Accepts RankedEntry lists or plain id lists in rank order.
    """
    cur = _rank_map(current)
    prev = _rank_map(previous)
    return {i: (prev[i] - r if i in prev else "new") for i, r in cur.items()}


def _rank_map(entries: Sequence) -> dict[str, int]:
    out = {}
    for pos, e in enumerate(entries, start=1):
        if isinstance(e, RankedEntry):
            out[e.base_id] = e.rank
        else:
            out[str(e)] = pos
    return out
