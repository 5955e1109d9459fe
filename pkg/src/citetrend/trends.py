"""Keyword topics, weekly topic-share series and Savitzky-Golay smoothing."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import date
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .model import Corpus, PaperRecord
from .zscore import CANONICAL_SPLIT_DAY, RankedEntry, SplitSpec, assign_week

DEFAULT_WINDOW = 8
DEFAULT_ORDER = 3


@dataclass(frozen=True)
class TopicRule:
    name: str
    patterns: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "patterns", tuple(self.patterns))
        if not self.patterns:
            raise ValidationError(f"topic {self.name!r} has no patterns")
        for p in self.patterns:
            if not p or p != p.lower():
                raise ValidationError(f"topic {self.name!r}: pattern {p!r} must be non-empty lowercase")


@dataclass(frozen=True)
class TrendSeries:
    """Weekly share of matching papers; ``None`` marks a week with no papers."""

    topic: str
    week_starts: tuple[date, ...]
    raw_percent: tuple[float | None, ...]
    smoothed_percent: tuple[float | None, ...] | None = None


def builtin_topics() -> list[TopicRule]:
    return [
        TopicRule("LLM", ("llm", "llms", "large language model", "large language models")),
        TopicRule("ChatGPT", ("chatgpt", "chat-gpt")),
        TopicRule("GPT", ("gpt",)),
        TopicRule("LLaMA", ("llama",)),
        TopicRule("Multimodality", (
            "multimodal", "multimodality", "multi-modal", "multi-modality",
            "text-to-image", "visual-language", "captioning", "image-to-text",
        )),
    ]


def load_topic_rules(path) -> list[TopicRule]:
    """Read ``{"topic": ["pattern", ...], ...}`` from a JSON file."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid topic rules: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: topic rules must be an object of name -> pattern list")
    return [TopicRule(name, tuple(p.lower() for p in pats)) for name, pats in data.items()]


def select_topics(spec: str | Sequence[str] | None) -> list[TopicRule]:
    """Resolve built-in topic names (case-insensitive) or a rules-file path."""
    builtins = {r.name.lower(): r for r in builtin_topics()}
    if spec is None:
        return list(builtins.values())
    names = spec.split(",") if isinstance(spec, str) else list(spec)
    if len(names) == 1 and Path(names[0]).is_file():
        return load_topic_rules(names[0])
    out = []
    for name in names:
        key = name.strip().lower()
        if key not in builtins:
            raise ValidationError(f"unknown topic {name!r}; built-ins: {sorted(builtins)}")
        out.append(builtins[key])
    return out


def matches_topic(record: PaperRecord, rule: TopicRule) -> bool:
    title = (record.title or "").lower()
    abstract = (record.abstract or "").lower()
    return any(p in title or p in abstract for p in rule.patterns)


def weekly_topic_share(
    corpus: Corpus, rule: TopicRule, split: SplitSpec | None = None
) -> TrendSeries:
    """Percentage of each week's papers matching ``rule``, every week from the
    first to the last populated one."""
    if not len(corpus):
        raise ValidationError("weekly_topic_share needs a non-empty corpus")
    split = split or SplitSpec(CANONICAL_SPLIT_DAY, corpus.window[0])
    totals: dict[int, int] = {}
    hits: dict[int, int] = {}
    for rec in corpus:
        w = assign_week(rec.submitted_date, split)
        totals[w] = totals.get(w, 0) + 1
        hits[w] = hits.get(w, 0) + matches_topic(rec, rule)
    weeks = range(min(totals), max(totals) + 1)
    return TrendSeries(
        topic=rule.name,
        week_starts=tuple(split.week_bounds(w)[0] for w in weeks),
        raw_percent=tuple(100.0 * hits[w] / totals[w] if w in totals else None for w in weeks),
    )


@lru_cache(maxsize=64)
def _sg_weights(window: int, order: int) -> np.ndarray:
    """Row k holds the weights that evaluate the least-squares polynomial at
    window position k."""
    pos = np.arange(window, dtype=np.float64)
    rows = []
    for k in range(window):
        vander = np.vander(pos - k, order + 1, increasing=True)
        rows.append(np.linalg.pinv(vander)[0])
    weights = np.array(rows)
    weights.flags.writeable = False
    return weights


def savitzky_golay(series: Sequence[float], window: int = DEFAULT_WINDOW, order: int = DEFAULT_ORDER) -> list[float]:
    """Sliding least-squares polynomial smoothing evaluated at each sample.

    The window holds ``window // 2`` samples before the target and
    ``(window - 1) // 2`` after it, so odd windows are centred and even
    windows lean one sample to the past.  Near the ends the window is
    shifted inward to stay inside the series.
    """
    x = np.asarray(series, dtype=np.float64)
    n = x.size
    if not (isinstance(window, int) and isinstance(order, int)) or order < 0 or not order < window <= n:
        raise ValidationError(
            f"need 0 <= order < window <= len(series); got order={order}, window={window}, len={n}"
        )
    weights = _sg_weights(window, order)
    left = window // 2
    out = np.empty(n)
    for i in range(n):
        start = min(max(i - left, 0), n - window)
        out[i] = weights[i - start] @ x[start : start + window]
    return out.tolist()


def _fill_gaps(values: Sequence[float | None]) -> list[float]:
    known = [(i, v) for i, v in enumerate(values) if v is not None]
    xs = [i for i, _ in known]
    ys = [v for _, v in known]
    return np.interp(range(len(values)), xs, ys).tolist()


def smooth_series(series: TrendSeries, window: int = DEFAULT_WINDOW, order: int = DEFAULT_ORDER) -> TrendSeries:
    """Attach smoothed values; gap weeks are linearly interpolated for the
    filter input only and stay gaps in the output.  Series shorter than the
    window are left unsmoothed."""
    raw = series.raw_percent
    if len(raw) < window:
        return series
    smoothed = savitzky_golay(_fill_gaps(raw), window, order)
    return TrendSeries(
        series.topic,
        series.week_starts,
        raw,
        tuple(s if r is not None else None for s, r in zip(smoothed, raw)),
    )


def topic_trends(
    corpus: Corpus,
    rules: Iterable[TopicRule],
    split: SplitSpec | None = None,
    window: int = DEFAULT_WINDOW,
    order: int = DEFAULT_ORDER,
) -> list[TrendSeries]:
    return [smooth_series(weekly_topic_share(corpus, r, split), window, order) for r in rules]


def topic_share_of_list(
    ranked: Sequence[RankedEntry | str], corpus: Corpus, rules: Iterable[TopicRule]
) -> dict[str, float]:
    """Percentage of the listed papers matching each topic."""
    ids = [e.base_id if isinstance(e, RankedEntry) else str(e) for e in ranked]
    missing = [i for i in ids if i not in corpus]
    if missing:
        raise ValidationError(f"ranked ids not in corpus: {', '.join(missing)}")
    out = {}
    for rule in rules:
        if not ids:
            out[rule.name] = math.nan
            continue
        hits = sum(matches_topic(corpus.records[i], rule) for i in ids)
        out[rule.name] = 100.0 * hits / len(ids)
    return out
