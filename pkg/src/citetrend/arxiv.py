"""arXiv Atom API client: query construction, feed parsing, paginated fetch."""
from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from typing import Iterable
from urllib.parse import urlencode

from ._http import CachedClient
from .errors import NetworkError, ParseError, ValidationError
from .model import AuthorRef, Corpus, PaperRecord, build_corpus, normalize_arxiv_id, parse_ts

logger = logging.getLogger(__name__)

API_URL = "http://export.arxiv.org/api/query"
DEFAULT_INTERVAL = 3.0
MAX_PAGE_SIZE = 2000

NS = {
    "atom": "http://www.w3.org/2005/Atom",
    "arxiv": "http://arxiv.org/schemas/atom",
    "opensearch": "http://a9.com/-/spec/opensearch/1.1/",
}


@dataclass(frozen=True)
class QuerySpec:
    categories: frozenset[str]
    window: tuple[date, date]
    page_size: int = 500
    max_retries: int = 5

    def __post_init__(self):
        object.__setattr__(self, "categories", frozenset(self.categories))
        if not self.categories:
            raise ValidationError("at least one category is required")
        if self.window[0] > self.window[1]:
            raise ValidationError(f"window start {self.window[0]} after end {self.window[1]}")
        if not 1 <= self.page_size <= MAX_PAGE_SIZE:
            raise ValidationError(f"page_size must be in [1, {MAX_PAGE_SIZE}], got {self.page_size}")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be non-negative")


def build_query(spec: QuerySpec) -> str:
    cats = " OR ".join(f"cat:{c}" for c in sorted(spec.categories))
    start, end = spec.window
    return f"({cats}) AND submittedDate:[{start:%Y%m%d}0000 TO {end:%Y%m%d}2359]"


def page_url(spec: QuerySpec, start: int, base_url: str = API_URL) -> str:
    params = {
        "search_query": build_query(spec),
        "start": start,
        "max_results": spec.page_size,
        "sortBy": "submittedDate",
        "sortOrder": "ascending",
    }
    return f"{base_url}?{urlencode(params)}"


@dataclass
class FeedPage:
    records: list[PaperRecord]
    errors: list[str] = field(default_factory=list)
    total_results: int = 0
    start_index: int = 0
    items_per_page: int = 0
    entry_count: int = 0

    @property
    def next_start(self) -> int | None:
        """Offset of the next page, or None once the result set is exhausted."""
        nxt = self.start_index + self.entry_count
        if self.entry_count == 0 or nxt >= self.total_results:
            return None
        return nxt


def _clean(text: str | None) -> str:
    return " ".join((text or "").split())


def _byte_offset(data: bytes, line: int, col: int) -> int:
    lines = data.split(b"\n")
    return sum(len(ln) + 1 for ln in lines[: max(line - 1, 0)]) + col


def _int(root, path: str) -> int:
    text = root.findtext(path, namespaces=NS)
    try:
        return int(text) if text is not None else 0
    except ValueError:
        return 0


def _parse_entry(entry) -> PaperRecord:
    raw_id = entry.findtext("atom:id", namespaces=NS)
    if not raw_id:
        raise ValueError("entry without <id>")
    base_id = normalize_arxiv_id(raw_id)
    published = entry.findtext("atom:published", namespaces=NS)
    if not published:
        raise ValueError(f"{base_id}: missing <published>")
    title = _clean(entry.findtext("atom:title", namespaces=NS))
    if not title:
        raise ValueError(f"{base_id}: missing <title>")
    cats = [c.get("term") for c in entry.findall("atom:category", NS) if c.get("term")]
    prim = entry.find("arxiv:primary_category", NS)
    primary = prim.get("term") if prim is not None else None
    if not primary:
        if not cats:
            raise ValueError(f"{base_id}: no categories")
        primary = cats[0]
    if primary not in cats:
        cats.insert(0, primary)
    comment = entry.findtext("arxiv:comment", namespaces=NS)
    authors = tuple(
        AuthorRef(_clean(a.findtext("atom:name", namespaces=NS)))
        for a in entry.findall("atom:author", NS)
    )
    return PaperRecord(
        base_id=base_id,
        title=title,
        abstract=_clean(entry.findtext("atom:summary", namespaces=NS)),
        primary_category=primary,
        categories=tuple(cats),
        first_submitted=parse_ts(published),
        comment=_clean(comment) if comment is not None else None,
        authors=authors,
    )


def parse_feed(feed_bytes: bytes) -> FeedPage:
    """Parse one page of the arXiv query API.

    Entries that lack required fields are reported in ``errors`` and skipped;
    malformed XML raises ParseError with the byte offset of the fault.
    """
    try:
        root = ET.fromstring(feed_bytes)
    except ET.ParseError as exc:
        line, col = exc.position
        offset = _byte_offset(feed_bytes, line, col)
        raise ParseError(f"malformed Atom feed at byte {offset}: {exc}", offset=offset) from exc

    entries = root.findall("atom:entry", NS)
    records, errors = [], []
    for entry in entries:
        entry_id = entry.findtext("atom:id", default="", namespaces=NS)
        if "arxiv.org/api/errors" in entry_id:
            raise NetworkError(
                f"arXiv API error: {_clean(entry.findtext('atom:summary', namespaces=NS))}"
            )
        try:
            records.append(_parse_entry(entry))
        except (ValueError, ParseError, ValidationError) as exc:
            errors.append(str(exc))
    return FeedPage(
        records=records,
        errors=errors,
        total_results=_int(root, "opensearch:totalResults"),
        start_index=_int(root, "opensearch:startIndex"),
        items_per_page=_int(root, "opensearch:itemsPerPage"),
        entry_count=len(entries),
    )


def fetch_pages(spec: QuerySpec, client: CachedClient, base_url: str = API_URL) -> Iterable[FeedPage]:
    start = 0
    while True:
        data = client.get(page_url(spec, start, base_url))
        page = parse_feed(data)
        if page.start_index != start:
            logger.warning("page requested at %d reports startIndex %d", start, page.start_index)
            page.start_index = start
        yield page
        nxt = page.next_start
        if nxt is None:
            if page.entry_count == 0 and start < page.total_results:
                logger.warning("empty page at offset %d of %d; stopping", start, page.total_results)
            return
        start = nxt


def fetch_corpus(
    spec: QuerySpec,
    client: CachedClient | None = None,
    base_url: str = API_URL,
    retrieval_time: datetime | None = None,
    cache_dir=None,
    replay_dir=None,
) -> Corpus:
    """Fetch every page for ``spec`` and assemble a deduplicated corpus.

    Records are kept only when their version-1 date lies in the window and
    one of their categories is an exact match for a query category.
    """
    if client is None:
        client = CachedClient(
            cache_dir=cache_dir,
            replay_dir=replay_dir,
            min_interval=DEFAULT_INTERVAL,
            max_retries=spec.max_retries,
        )
    if retrieval_time is None:
        retrieval_time = datetime.now(timezone.utc).replace(microsecond=0)
    collected: list[PaperRecord] = []
    pages = 0
    try:
        for page in fetch_pages(spec, client, base_url):
            pages += 1
            for err in page.errors:
                logger.warning("skipped entry: %s", err)
            collected.extend(r for r in page.records if spec.categories.intersection(r.categories))
    except NetworkError as exc:
        exc.progress = {"pages": pages, "records": len(collected)}
        raise NetworkError(
            f"{exc} (after {pages} pages, {len(collected)} records)", exc.status, exc.progress
        ) from exc
    return build_corpus(collected, spec.window, spec.categories, retrieval_time)
