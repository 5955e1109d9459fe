"""Domain types, arXiv identifier handling and corpus persistence.

Corpus files are JSON lines: one header object carrying the schema version,
collection window, query categories and retrieval time, then one object per
paper in base_id order.  Exclusion files are plain text, one id per line,
``#`` starting a comment.
"""
from __future__ import annotations

import json
import re
import warnings
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping

from . import CORPUS_SCHEMA
from .errors import DataIntegrityError, ParseError, ValidationError

_NEW_STYLE = r"\d{4}\.\d{4,5}"
_OLD_STYLE = r"[a-z][a-z\-]*(?:\.[A-Za-z\-]+)?/\d{7}"
_ID_RE = re.compile(rf"^(?P<base>{_NEW_STYLE}|{_OLD_STYLE})(?P<ver>v\d*)?$")
_PREFIXES = ("https://arxiv.org/abs/", "http://arxiv.org/abs/", "arxiv:")


class ExclusionWarning(UserWarning):
    """An excluded id was not present in the corpus."""


def normalize_arxiv_id(raw: str) -> str:
    """Strip URL/``arXiv:`` prefixes and any ``vN`` suffix from an arXiv id.

    >>> normalize_arxiv_id("2303.08774v3")
    '2303.08774'
    """
    if not isinstance(raw, str) or not raw.strip():
        raise ParseError(f"empty arXiv identifier: {raw!r}")
    text = raw.strip()
    lowered = text.lower()
    for prefix in _PREFIXES:
        if lowered.startswith(prefix):
            text = text[len(prefix):]
            break
    m = _ID_RE.match(text)
    if m is None:
        raise ParseError(f"malformed arXiv identifier: {raw!r}")
    ver = m.group("ver")
    if ver is not None and (len(ver) == 1 or int(ver[1:]) < 1):
        raise ParseError(f"malformed version suffix in arXiv identifier: {raw!r}")
    return m.group("base")


def utc(dt: datetime) -> datetime:
    """Return ``dt`` as an aware UTC datetime (naive input is taken as UTC)."""
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_ts(dt: datetime) -> str:
    return utc(dt).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_ts(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        return utc(datetime.fromisoformat(text))
    except ValueError as exc:
        raise ParseError(f"bad timestamp {text!r}") from exc


@dataclass(frozen=True)
class AuthorRef:
    name: str
    affiliation_ids: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "affiliation_ids", tuple(self.affiliation_ids))
        if len(set(self.affiliation_ids)) != len(self.affiliation_ids):
            raise ValidationError(f"duplicate affiliation ids for author {self.name!r}")


@dataclass(frozen=True)
class PaperRecord:
    base_id: str
    title: str
    abstract: str
    primary_category: str
    categories: tuple[str, ...]
    first_submitted: datetime
    comment: str | None = None
    authors: tuple[AuthorRef, ...] = ()

    def __post_init__(self):
        if normalize_arxiv_id(self.base_id) != self.base_id:
            raise ValidationError(f"base_id carries a version suffix: {self.base_id!r}")
        cats = tuple(dict.fromkeys(self.categories))
        object.__setattr__(self, "categories", cats)
        object.__setattr__(self, "authors", tuple(self.authors))
        object.__setattr__(self, "first_submitted", utc(self.first_submitted))
        if self.primary_category not in cats:
            raise ValidationError(
                f"{self.base_id}: primary category {self.primary_category!r} not in {cats}"
            )

    @property
    def submitted_date(self) -> date:
        return self.first_submitted.date()

    @property
    def link(self) -> str:
        return f"https://arxiv.org/abs/{self.base_id}"

    def to_json(self) -> dict:
        return {
            "base_id": self.base_id,
            "title": self.title,
            "abstract": self.abstract,
            "primary_category": self.primary_category,
            "categories": list(self.categories),
            "first_submitted": format_ts(self.first_submitted),
            "comment": self.comment,
            "authors": [
                {"name": a.name, "affiliation_ids": list(a.affiliation_ids)}
                for a in self.authors
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "PaperRecord":
        return cls(
            base_id=obj["base_id"],
            title=obj["title"],
            abstract=obj["abstract"],
            primary_category=obj["primary_category"],
            categories=tuple(obj["categories"]),
            first_submitted=parse_ts(obj["first_submitted"]),
            comment=obj.get("comment"),
            authors=tuple(
                AuthorRef(a["name"], tuple(a.get("affiliation_ids", ())))
                for a in obj.get("authors", ())
            ),
        )


@dataclass(frozen=True)
class Corpus:
    records: dict[str, PaperRecord]
    window: tuple[date, date]
    query_categories: frozenset[str]
    retrieval_time: datetime

    def __post_init__(self):
        object.__setattr__(self, "query_categories", frozenset(self.query_categories))
        object.__setattr__(self, "retrieval_time", utc(self.retrieval_time))
        start, end = self.window
        if start > end:
            raise ValidationError(f"window start {start} after end {end}")
        for key, rec in self.records.items():
            if key != rec.base_id:
                raise DataIntegrityError(f"record keyed {key!r} has base_id {rec.base_id!r}")
            if self.query_categories and not self.query_categories.intersection(rec.categories):
                raise DataIntegrityError(
                    f"{key}: categories {rec.categories} miss the query categories"
                )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records.values())

    def __contains__(self, base_id) -> bool:
        return base_id in self.records

    def in_window(self, rec: PaperRecord) -> bool:
        return self.window[0] <= rec.submitted_date <= self.window[1]

    def replace_records(self, records: Iterable[PaperRecord]) -> "Corpus":
        return Corpus(
            {r.base_id: r for r in records}, self.window, self.query_categories, self.retrieval_time
        )


def build_corpus(
    records: Iterable[PaperRecord],
    window: tuple[date, date],
    query_categories: Iterable[str],
    retrieval_time: datetime,
) -> Corpus:
    """Assemble a corpus, keeping the earliest-seen record per base_id and
    dropping papers whose first submission falls outside ``window``."""
    start, end = window
    kept: dict[str, PaperRecord] = {}
    for rec in records:
        if rec.base_id in kept:
            continue
        if start <= rec.submitted_date <= end:
            kept[rec.base_id] = rec
    return Corpus(dict(sorted(kept.items())), window, frozenset(query_categories), retrieval_time)


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def save_corpus(corpus: Corpus, path) -> None:
    header = {
        "schema": CORPUS_SCHEMA,
        "window": [corpus.window[0].isoformat(), corpus.window[1].isoformat()],
        "query_categories": sorted(corpus.query_categories),
        "retrieval_time": format_ts(corpus.retrieval_time),
        "count": len(corpus),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_dumps(header) + "\n")
        for key in sorted(corpus.records):
            fh.write(_dumps(corpus.records[key].to_json()) + "\n")


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise DataIntegrityError(f"{path}: empty corpus file (missing header)")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: bad header: {exc}") from exc
    if header.get("schema") != CORPUS_SCHEMA:
        raise DataIntegrityError(
            f"{path}: schema {header.get('schema')!r} does not match {CORPUS_SCHEMA!r}"
        )
    records: dict[str, PaperRecord] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = PaperRecord.from_json(json.loads(line))
        except (json.JSONDecodeError, KeyError) as exc:
            raise ParseError(f"{path}:{lineno}: bad record: {exc}") from exc
        if rec.base_id in records:
            raise DataIntegrityError(f"{path}:{lineno}: duplicate base_id {rec.base_id}")
        records[rec.base_id] = rec
    start, end = (date.fromisoformat(d) for d in header["window"])
    return Corpus(
        records, (start, end), frozenset(header["query_categories"]), parse_ts(header["retrieval_time"])
    )


def read_id_list(path) -> list[str]:
    """Read a newline-separated id file; ``#`` begins a comment."""
    ids = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        text = line.split("#", 1)[0].strip()
        if text:
            ids.append(normalize_arxiv_id(text))
    return ids


def load_exclusions(path) -> set[str]:
    return set(read_id_list(path))


def apply_exclusions(corpus: Corpus, exclusions: Iterable[str]) -> Corpus:
    """Drop excluded ids; ids not in the corpus raise an ExclusionWarning."""
    excluded = {normalize_arxiv_id(x) for x in exclusions}
    for missing in sorted(excluded - corpus.records.keys()):
        warnings.warn(f"excluded id {missing} is not in the corpus", ExclusionWarning, stacklevel=2)
    return corpus.replace_records(r for k, r in corpus.records.items() if k not in excluded)
