"""Descriptive corpus statistics: weekly citation moments, category mix,
comment keyword shares."""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import date
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .citations import SnapshotSet
from .errors import DataIntegrityError, ValidationError
from .model import Corpus
from .zscore import CANONICAL_SPLIT_DAY, SplitSpec, assign_week

DEFAULT_REPORT_CATEGORIES = ("cs.CL", "cs.LG", "cs.CV")
OTHERS = "others"
MATH_PHYSICS = "math+physics"
BAND_FACTOR = 0.5


@lru_cache(maxsize=1)
def math_physics_prefixes() -> tuple[str, ...]:
    text = resources.files("citetrend").joinpath("data/math_physics.txt").read_text("utf-8")
    return tuple(
        ln.split("#", 1)[0].strip() for ln in text.splitlines() if ln.split("#", 1)[0].strip()
    )


def main_category(category: str, prefixes: Sequence[str] | None = None) -> str:
    for p in math_physics_prefixes() if prefixes is None else prefixes:
        if category == p or (p[-1] in ".-" and category.startswith(p)) or category.startswith(p + "."):
            return MATH_PHYSICS
    return category


def category_distribution(corpus: Corpus, prefixes: Sequence[str] | None = None) -> dict[str, float]:
    """Percent of papers per primary category, math/physics archives merged.

    Ordered by share descending, then name.
    """
    if not len(corpus):
        raise ValidationError("category_distribution needs a non-empty corpus")
    counts = Counter(main_category(r.primary_category, prefixes) for r in corpus)
    total = len(corpus)
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return {k: 100.0 * v / total for k, v in ordered}


@dataclass(frozen=True)
class WeeklyStatsRow:
    week_label: tuple[date, date]
    papers: int
    overall_mean: float | None
    overall_std: float | None
    per_category_means: dict[str, float | None]

    @property
    def upper_band(self) -> float | None:
        if self.overall_mean is None:
            return None
        return self.overall_mean + BAND_FACTOR * self.overall_std


def weekly_mean_std(
    corpus: Corpus,
    snapshot: SnapshotSet | Mapping[str, int],
    split: SplitSpec | None = None,
    categories: Sequence[str] = DEFAULT_REPORT_CATEGORIES,
) -> list[WeeklyStatsRow]:
    """Per-week mean and population std of citation counts, plus the mean per
    listed primary category and for all remaining papers (``others``).

    Every week between the first and last populated week gets a row; empty
    cells are ``None``.
    """
    counts = snapshot.counts() if isinstance(snapshot, SnapshotSet) else dict(snapshot)
    missing = [i for i in corpus.records if i not in counts]
    if missing:
        raise DataIntegrityError(f"papers without citation snapshot: {', '.join(sorted(missing))}")
    if not len(corpus):
        return []
    split = split or SplitSpec(CANONICAL_SPLIT_DAY, corpus.window[0])
    listed = tuple(categories)
    weeks: dict[int, list] = defaultdict(list)
    for rec in corpus:
        weeks[assign_week(rec.submitted_date, split)].append(rec)
    rows = []
    for w in range(min(weeks), max(weeks) + 1):
        recs = weeks.get(w, [])
        values = np.array([counts[r.base_id] for r in recs], dtype=np.float64)
        per_cat: dict[str, float | None] = {}
        for cat in listed + (OTHERS,):
            sel = [
                counts[r.base_id] for r in recs
                if (r.primary_category == cat if cat != OTHERS else r.primary_category not in listed)
            ]
            per_cat[cat] = float(np.mean(sel)) if sel else None
        rows.append(WeeklyStatsRow(
            week_label=split.week_bounds(w),
            papers=len(recs),
            overall_mean=float(values.mean()) if len(recs) else None,
            overall_std=float(values.std()) if len(recs) else None,
            per_category_means=per_cat,
        ))
    return rows


@dataclass(frozen=True)
class CommentShare:
    matching: int
    with_comments: int
    total: int

    @property
    def percent_of_total(self) -> float:
        return 100.0 * self.matching / self.total if self.total else 0.0

    @property
    def percent_of_commented(self) -> float:
        return 100.0 * self.matching / self.with_comments if self.with_comments else 0.0


def comment_keyword_share(
    corpus: Corpus, week: date, keyword: str, split: SplitSpec | None = None
) -> CommentShare:
    """Count papers in the week containing ``week`` whose comment mentions ``keyword``."""
    if not keyword:
        raise ValidationError("keyword must be non-empty")
    keyword = keyword.lower()
    split = split or SplitSpec(CANONICAL_SPLIT_DAY, corpus.window[0])
    target = assign_week(week, split)
    matching = with_comments = total = 0
    for rec in corpus:
        if assign_week(rec.submitted_date, split) != target:
            continue
        total += 1
        if rec.comment:
            with_comments += 1
            matching += keyword in rec.comment.lower()
    return CommentShare(matching, with_comments, total)
