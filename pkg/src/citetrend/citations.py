"""Citation-count snapshots: fetching, persistence and cross-source comparison."""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import SNAPSHOT_SCHEMA
from ._http import CachedClient
from .errors import DataIntegrityError, NetworkError, ParseError, ValidationError
from .model import format_ts, normalize_arxiv_id, parse_ts, utc

logger = logging.getLogger(__name__)

S2_BATCH_URL = "https://api.semanticscholar.org/graph/v1/paper/batch"
S2_API_KEY_ENV = "S2_API_KEY"
DEFAULT_BATCH_SIZE = 100
MAX_BATCH_SIZE = 500
DEFAULT_INTERVAL = 1.0


class Source(str, Enum):
    SEMANTIC_SCHOLAR = "semantic_scholar"
    GOOGLE_SCHOLAR = "google_scholar"
    MANUAL = "manual"


FETCHABLE = frozenset({Source.SEMANTIC_SCHOLAR})


def parse_source(value) -> Source:
    try:
        return Source(value)
    except ValueError:
        raise ValidationError(
            f"unknown citation source {value!r}; expected one of {[s.value for s in Source]}"
        ) from None


@dataclass(frozen=True)
class CitationSnapshot:
    base_id: str
    count: int
    source: Source
    retrieved_at: datetime
    found: bool = True

    def __post_init__(self):
        if self.count < 0:
            raise ValidationError(f"{self.base_id}: negative citation count {self.count}")
        object.__setattr__(self, "retrieved_at", utc(self.retrieved_at))


@dataclass(frozen=True)
class SnapshotSet:
    snapshots: dict[str, CitationSnapshot]
    source: Source
    retrieved_at: datetime
    complete: bool = True

    def __post_init__(self):
        object.__setattr__(self, "retrieved_at", utc(self.retrieved_at))
        for key, snap in self.snapshots.items():
            if key != snap.base_id or snap.source != self.source:
                raise DataIntegrityError(f"snapshot entry {key!r} does not belong to this set")

    def __len__(self):
        return len(self.snapshots)

    def __contains__(self, base_id):
        return base_id in self.snapshots

    def count(self, base_id: str) -> int:
        return self.snapshots[base_id].count

    def counts(self) -> dict[str, int]:
        return {k: s.count for k, s in self.snapshots.items()}

    def not_found(self) -> list[str]:
        return sorted(k for k, s in self.snapshots.items() if not s.found)


def make_snapshot_set(
    counts: Mapping[str, int],
    source=Source.MANUAL,
    retrieved_at: datetime | None = None,
    not_found: Iterable[str] = (),
    complete: bool = True,
) -> SnapshotSet:
    """Build a SnapshotSet from a plain id -> count mapping."""
    source = parse_source(source)
    retrieved_at = utc(retrieved_at or datetime.now(timezone.utc).replace(microsecond=0))
    missing = set(not_found)
    snaps = {
        k: CitationSnapshot(k, int(c), source, retrieved_at, found=k not in missing)
        for k, c in sorted(counts.items())
    }
    return SnapshotSet(snaps, source, retrieved_at, complete)


def snapshot_filename(source: Source, retrieved_at: datetime) -> str:
    return f"{source.value}-{utc(retrieved_at):%Y%m%dT%H%M%SZ}.jsonl"


def save_snapshot(snapshots: SnapshotSet, snapshot_dir) -> Path:
    """Write a new dated snapshot file; existing snapshot files are never overwritten."""
    snapshot_dir = Path(snapshot_dir)
    snapshot_dir.mkdir(parents=True, exist_ok=True)
    path = snapshot_dir / snapshot_filename(snapshots.source, snapshots.retrieved_at)
    if path.exists():
        raise DataIntegrityError(f"snapshot {path} already exists; snapshots are immutable")
    write_snapshot(snapshots, path)
    return path


def write_snapshot(snapshots: SnapshotSet, path) -> None:
    header = {
        "schema": SNAPSHOT_SCHEMA,
        "source": snapshots.source.value,
        "retrieved_at": format_ts(snapshots.retrieved_at),
        "count": len(snapshots),
        "complete": snapshots.complete,
    }
    dumps = lambda o: json.dumps(o, sort_keys=True, separators=(",", ":"))  # noqa: E731
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(header) + "\n")
        for key in sorted(snapshots.snapshots):
            s = snapshots.snapshots[key]
            fh.write(dumps({"base_id": s.base_id, "count": s.count, "found": s.found}) + "\n")


def load_snapshot(path) -> SnapshotSet:
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        raise DataIntegrityError(f"{path}: empty snapshot file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: bad header: {exc}") from exc
    if header.get("schema") != SNAPSHOT_SCHEMA:
        raise DataIntegrityError(
            f"{path}: schema {header.get('schema')!r} does not match {SNAPSHOT_SCHEMA!r}"
        )
    source = parse_source(header["source"])
    retrieved_at = parse_ts(header["retrieved_at"])
    snaps: dict[str, CitationSnapshot] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
            snap = CitationSnapshot(
                normalize_arxiv_id(obj["base_id"]), int(obj["count"]), source, retrieved_at,
                bool(obj.get("found", True)),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ParseError(f"{path}:{lineno}: bad snapshot record: {exc}") from exc
        if snap.base_id in snaps:
            raise DataIntegrityError(f"{path}:{lineno}: duplicate base_id {snap.base_id}")
        snaps[snap.base_id] = snap
    return SnapshotSet(snaps, source, retrieved_at, bool(header.get("complete", True)))


def _chunks(seq: Sequence, size: int):
    for i in range(0, len(seq), size):
        yield seq[i : i + size]


def _parse_batch(data: bytes, batch: Sequence[str]) -> dict[str, int | None]:
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"citation API returned invalid JSON: {exc}") from exc
    if not isinstance(payload, list) or len(payload) != len(batch):
        raise DataIntegrityError(
            f"citation API returned {len(payload) if isinstance(payload, list) else 'non-list'} "
            f"results for {len(batch)} ids"
        )
    out: dict[str, int | None] = {}
    for base_id, item in zip(batch, payload):
        if item is None or item.get("citationCount") is None:
            out[base_id] = None
        else:
            out[base_id] = int(item["citationCount"])
    return out


def fetch_citations(
    ids: Sequence[str],
    source=Source.SEMANTIC_SCHOLAR,
    snapshot_dir=None,
    client: CachedClient | None = None,
    batch_size: int = DEFAULT_BATCH_SIZE,
    retrieved_at: datetime | None = None,
    base_url: str = S2_BATCH_URL,
    cache_dir=None,
    replay_dir=None,
) -> SnapshotSet:
    """Fetch citation counts for ``ids`` in batches.

    Ids unknown upstream get count 0 and ``found=False``.  The snapshot is
    written to ``snapshot_dir`` (when given) before returning; on a transport
    failure the partial set is written and a NetworkError lists missing ids.
    """
    source = parse_source(source)
    if not ids:
        raise ValidationError("fetch_citations needs at least one id")
    if source not in FETCHABLE:
        raise ValidationError(f"source {source.value!r} can only be loaded from snapshot files")
    if not 1 <= batch_size <= MAX_BATCH_SIZE:
        raise ValidationError(f"batch_size must be in [1, {MAX_BATCH_SIZE}]")
    ids = sorted({normalize_arxiv_id(i) for i in ids})
    if client is None:
        headers = {"Content-Type": "application/json"}
        if os.environ.get(S2_API_KEY_ENV):
            headers["x-api-key"] = os.environ[S2_API_KEY_ENV]
        client = CachedClient(
            cache_dir=cache_dir, replay_dir=replay_dir, min_interval=DEFAULT_INTERVAL, headers=headers
        )
    retrieved_at = utc(retrieved_at or datetime.now(timezone.utc).replace(microsecond=0))
    url = f"{base_url}?fields=citationCount"

    found: dict[str, int | None] = {}
    failure: NetworkError | None = None
    for batch in _chunks(ids, batch_size):
        body = json.dumps({"ids": [f"ARXIV:{i}" for i in batch]}).encode()
        try:
            data = client.post(url, body)
        except NetworkError as exc:
            failure = exc
            break
        found.update(_parse_batch(data, batch))

    snaps = {
        k: CitationSnapshot(k, v if v is not None else 0, source, retrieved_at, found=v is not None)
        for k, v in sorted(found.items())
    }
    result = SnapshotSet(snaps, source, retrieved_at, complete=failure is None)
    path = save_snapshot(result, snapshot_dir) if snapshot_dir is not None else None
    if failure is not None:
        missing = [i for i in ids if i not in found]
        raise NetworkError(
            f"citation fetch failed with {len(missing)} ids outstanding "
            f"(partial snapshot: {path}): {failure}; missing: {', '.join(missing)}",
            failure.status,
            {"missing": missing, "partial_snapshot": str(path) if path else None},
        )
    if result.not_found():
        logger.warning("%d ids unknown to %s", len(result.not_found()), source.value)
    return result


def relative_discrepancy(reference_count: int, other_count: int) -> float:
    """``|reference - other| / reference``; the reference count is the denominator."""
    if reference_count < 0 or other_count < 0:
        raise ValidationError("citation counts must be non-negative")
    if reference_count == 0:
        raise ValidationError("relative discrepancy is undefined for a zero reference count")
    return abs(reference_count - other_count) / reference_count


def compare_snapshots(reference: SnapshotSet, other: SnapshotSet) -> list[dict]:
    """Per-paper discrepancy for ids present in both sets with a non-zero reference."""
    rows = []
    for key in sorted(reference.snapshots.keys() & other.snapshots.keys()):
        ref, oth = reference.count(key), other.count(key)
        rows.append({
            "base_id": key,
            "reference": ref,
            "other": oth,
            "relative_discrepancy": relative_discrepancy(ref, oth) if ref > 0 else None,
        })
    return rows
