"""Institution-level credit on papers and its aggregation by sector and region.

Inputs are curated JSON-lines files:

* registry: ``{"institution_id", "display_name", "sector", "country", "region"?}``
* affiliation map: ``{"base_id", "authors": [[institution_id, ...], ...]}`` with
  one inner list per author, in author order.

A line carrying a ``"schema"`` key is treated as a header and checked.
"""
from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from pathlib import Path
from statistics import fmean, pstdev
from typing import Iterable, Mapping, Sequence

from . import AFFILIATION_SCHEMA
from .errors import DataIntegrityError, ParseError, ValidationError
from .model import normalize_arxiv_id

SECTORS = ("academia", "industry", "other")
REGIONS = ("US", "CN", "Europe", "Rest")
GROUP_BY = ("sector", "region", "country", "institution")
METRICS = ("fractional", "proportional")
COLLABORATION_CLASSES = (
    "industry-independent",
    "academia-independent",
    "industry-with-academia",
    "academia-with-academia",
    "industry-with-industry",
)
EXCLUDED = "excluded"


@lru_cache(maxsize=1)
def _region_table() -> dict:
    text = resources.files("citetrend").joinpath("data/country_regions.json").read_text("utf-8")
    return json.loads(text)


def region_for_country(country: str) -> str:
    table = _region_table()
    return table["countries"].get(country.upper(), table["default"])


@dataclass(frozen=True)
class AffiliationRecord:
    institution_id: str
    display_name: str
    sector: str
    country: str
    region: str = ""

    def __post_init__(self):
        if self.sector not in SECTORS:
            raise ValidationError(f"{self.institution_id}: sector {self.sector!r} not in {SECTORS}")
        country = self.country.upper()
        object.__setattr__(self, "country", country)
        expected = region_for_country(country)
        if not self.region:
            object.__setattr__(self, "region", expected)
        elif self.region not in REGIONS:
            raise ValidationError(f"{self.institution_id}: region {self.region!r} not in {REGIONS}")
        elif self.region != expected:
            raise ValidationError(
                f"{self.institution_id}: region {self.region!r} inconsistent with country {country}"
            )


@dataclass(frozen=True)
class PaperAffiliationMap:
    base_id: str
    author_affiliations: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        authors = tuple(tuple(a) for a in self.author_affiliations)
        object.__setattr__(self, "author_affiliations", authors)
        if not authors:
            raise ValidationError(f"{self.base_id}: no authors")
        for k, affs in enumerate(authors, start=1):
            if not affs:
                raise ValidationError(f"{self.base_id}: author {k} has no affiliation (curation gap)")
            if len(set(affs)) != len(affs):
                raise ValidationError(f"{self.base_id}: author {k} lists an affiliation twice")

    @property
    def author_count(self) -> int:
        return len(self.author_affiliations)

    def institutions(self) -> list[str]:
        """Distinct institutions in first-appearance order."""
        return list(dict.fromkeys(i for affs in self.author_affiliations for i in affs))


def _read_jsonl(path) -> list[dict]:
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        if "schema" in obj:
            if obj["schema"] != AFFILIATION_SCHEMA:
                raise DataIntegrityError(f"{path}: schema {obj['schema']!r} != {AFFILIATION_SCHEMA!r}")
            continue
        rows.append(obj)
    return rows


def load_registry(path) -> dict[str, AffiliationRecord]:
    out: dict[str, AffiliationRecord] = {}
    for obj in _read_jsonl(path):
        try:
            rec = AffiliationRecord(
                obj["institution_id"], obj.get("display_name", obj["institution_id"]),
                obj["sector"], obj["country"], obj.get("region", ""),
            )
        except KeyError as exc:
            raise ParseError(f"{path}: registry record missing {exc}") from exc
        if rec.institution_id in out:
            raise DataIntegrityError(f"{path}: duplicate institution_id {rec.institution_id}")
        out[rec.institution_id] = rec
    return out


def load_affiliation_maps(path) -> dict[str, PaperAffiliationMap]:
    out: dict[str, PaperAffiliationMap] = {}
    for obj in _read_jsonl(path):
        try:
            pmap = PaperAffiliationMap(normalize_arxiv_id(obj["base_id"]), obj["authors"])
        except KeyError as exc:
            raise ParseError(f"{path}: affiliation record missing {exc}") from exc
        if pmap.base_id in out:
            raise DataIntegrityError(f"{path}: duplicate base_id {pmap.base_id}")
        out[pmap.base_id] = pmap
    return out


def _fractional(pmap: PaperAffiliationMap) -> dict[str, Fraction]:
    share = Fraction(1, pmap.author_count)
    scores: dict[str, Fraction] = defaultdict(Fraction)
    for affs in pmap.author_affiliations:
        for inst in affs:
            scores[inst] += share / len(affs)
    return dict(scores)


def fractional_scores(pmap: PaperAffiliationMap) -> dict[str, float]:
    """Each author is worth 1/authors, split equally over their affiliations."""
    return {k: float(v) for k, v in _fractional(pmap).items()}


def proportional_counts(pmap: PaperAffiliationMap) -> dict[str, float]:
    """Each distinct institution on the paper gets 1/(distinct institutions)."""
    insts = pmap.institutions()
    return {i: 1.0 / len(insts) for i in insts}


def _exact_metric(pmap: PaperAffiliationMap, metric: str) -> dict[str, Fraction]:
    if metric == "fractional":
        return _fractional(pmap)
    if metric == "proportional":
        insts = pmap.institutions()
        return {i: Fraction(1, len(insts)) for i in insts}
    raise ValidationError(f"metric must be one of {METRICS}, got {metric!r}")


def _check_resolvable(maps: Iterable[PaperAffiliationMap], registry: Mapping[str, AffiliationRecord]):
    unknown = sorted({i for m in maps for i in m.institutions() if i not in registry})
    if unknown:
        raise DataIntegrityError(f"institution ids missing from the registry: {', '.join(unknown)}")


def _group_key(rec: AffiliationRecord, group_by: str) -> str:
    if group_by == "sector":
        return rec.sector
    if group_by == "region":
        return rec.region
    if group_by == "country":
        return rec.country
    if group_by == "institution":
        return rec.institution_id
    raise ValidationError(f"group_by must be one of {GROUP_BY}, got {group_by!r}")


@dataclass(frozen=True)
class AggregateRow:
    group: str
    score: float
    papers: int
    percent: float


def aggregate(
    maps: Sequence[PaperAffiliationMap],
    registry: Mapping[str, AffiliationRecord],
    metric: str = "proportional",
    group_by: str = "sector",
) -> list[AggregateRow]:
    """Sum per-paper credit by group; ``papers`` counts each paper once per group.

    Rows are ordered by score descending, then group name.
    """
    maps = list(maps)
    _check_resolvable(maps, registry)
    totals: dict[str, Fraction] = defaultdict(Fraction)
    papers: dict[str, set] = defaultdict(set)
    for pmap in maps:
        for inst, value in _exact_metric(pmap, metric).items():
            key = _group_key(registry[inst], group_by)
            totals[key] += value
            papers[key].add(pmap.base_id)
    grand = sum(totals.values(), Fraction(0))
    rows = [
        AggregateRow(g, float(v), len(papers[g]), float(100 * v / grand) if grand else 0.0)
        for g, v in totals.items()
    ]
    rows.sort(key=lambda r: (-r.score, r.group))
    return rows


@dataclass(frozen=True)
class SectorRegionTable:
    """Percent shares by (sector, region) over academia + industry credit.

    Credit held by sector ``other`` is left out of the percentages and
    reported separately as ``excluded_score``.
    """

    cells: dict[tuple[str, str], float]
    sector_totals: dict[str, float]
    region_totals: dict[str, float]
    excluded_score: float
    grand_score: float

    def rows(self) -> list[list]:
        out = []
        for sector in ("academia", "industry"):
            out.append([sector, self.sector_totals[sector]] + [self.cells[(sector, r)] for r in REGIONS])
        out.append(["region total", sum(self.sector_totals.values())] + [self.region_totals[r] for r in REGIONS])
        return out


def sector_region_table(
    maps: Sequence[PaperAffiliationMap],
    registry: Mapping[str, AffiliationRecord],
    metric: str = "proportional",
) -> SectorRegionTable:
    maps = list(maps)
    _check_resolvable(maps, registry)
    cells: dict[tuple[str, str], Fraction] = defaultdict(Fraction)
    excluded = Fraction(0)
    for pmap in maps:
        for inst, value in _exact_metric(pmap, metric).items():
            rec = registry[inst]
            if rec.sector == "other":
                excluded += value
            else:
                cells[(rec.sector, rec.region)] += value
    grand = sum(cells.values(), Fraction(0))

    def pct(v: Fraction) -> float:
        return float(100 * v / grand) if grand else 0.0

    sectors = ("academia", "industry")
    return SectorRegionTable(
        cells={(s, r): pct(cells[(s, r)]) for s in sectors for r in REGIONS},
        sector_totals={s: pct(sum((cells[(s, r)] for r in REGIONS), Fraction(0))) for s in sectors},
        region_totals={r: pct(sum((cells[(s, r)] for s in sectors), Fraction(0))) for r in REGIONS},
        excluded_score=float(excluded),
        grand_score=float(grand),
    )


def classify_paper(pmap: PaperAffiliationMap, registry: Mapping[str, AffiliationRecord]) -> str:
    """Collaboration class of one paper.

    Institutions of sector ``other`` are set aside; a paper left with a single
    institution is independent research of that institution's sector, and
    otherwise the class follows the sectors present.
    """
    insts = [i for i in pmap.institutions() if registry[i].sector != "other"]
    if not insts:
        return EXCLUDED
    sectors = {registry[i].sector for i in insts}
    if len(insts) == 1:
        return f"{sectors.pop()}-independent"
    if sectors == {"industry", "academia"}:
        return "industry-with-academia"
    sector = sectors.pop()
    return f"{sector}-with-{sector}"


def collaboration_breakdown(
    maps: Sequence[PaperAffiliationMap], registry: Mapping[str, AffiliationRecord]
) -> dict[str, int]:
    maps = list(maps)
    _check_resolvable(maps, registry)
    counts = {c: 0 for c in COLLABORATION_CLASSES}
    counts[EXCLUDED] = 0
    for pmap in maps:
        counts[classify_paper(pmap, registry)] += 1
    return counts


@dataclass(frozen=True)
class AuthorStats:
    papers: int
    mean: float
    std: float


def author_count_stats(
    maps: Sequence[PaperAffiliationMap], registry: Mapping[str, AffiliationRecord]
) -> dict[str, AuthorStats]:
    """Mean and population std of author counts per collaboration class;
    classes without papers are omitted."""
    maps = list(maps)
    _check_resolvable(maps, registry)
    by_class: dict[str, list[int]] = defaultdict(list)
    for pmap in maps:
        by_class[classify_paper(pmap, registry)].append(pmap.author_count)
    order = COLLABORATION_CLASSES + (EXCLUDED,)
    return {
        c: AuthorStats(len(by_class[c]), fmean(by_class[c]), pstdev(by_class[c]))
        for c in order
        if by_class.get(c)
    }
