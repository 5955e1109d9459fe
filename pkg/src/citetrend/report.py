"""Report bundle: ranking CSVs, per-figure CSVs and a Markdown summary.

Bundle layout (all files always present, header-only when there is no data)::

    report.md  topN.csv  weekly_stats.csv  categories.csv
    trends.csv  institutions.csv  correlations.csv
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Mapping, Sequence

from . import REPORT_SCHEMA, __version__
from .affiliations import REGIONS, AuthorStats, SectorRegionTable, COLLABORATION_CLASSES, EXCLUDED
from .errors import ParseError
from .model import format_ts, normalize_arxiv_id
from .rankcorr import CorrelationPoint
from .stats import BAND_FACTOR, OTHERS, WeeklyStatsRow
from .trends import TrendSeries
from .zscore import RankedEntry

RANKING_COLUMNS = ("rank", "title", "category", "link", "week", "citations", "stable_z", "delta")
SINGLE_SPLIT_SCORE = "z_score"
BUNDLE_FILES = (
    "report.md", "topN.csv", "weekly_stats.csv", "categories.csv",
    "trends.csv", "institutions.csv", "correlations.csv",
)


def fmt(value, digits: int = 6) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def fmt_week(label: tuple[date, date]) -> str:
    return f"{label[0].isoformat()}/{label[1].isoformat()}"


def fmt_delta(delta) -> str:
    if delta is None:
        return ""
    if delta == "new":
        return "new"
    return f"+{delta}" if delta > 0 else str(delta)


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def ranking_rows(ranking: Sequence[RankedEntry], deltas: Mapping | None = None) -> list[list]:
    return [
        [e.rank, e.title, e.primary_category, e.link, fmt_week(e.week_label),
         e.citation_count, e.stable_z, fmt_delta(deltas.get(e.base_id)) if deltas else ""]
        for e in ranking
    ]


def ranking_csv(ranking: Sequence[RankedEntry], deltas: Mapping | None = None, single_split: bool = False) -> str:
    header = list(RANKING_COLUMNS)
    if single_split:
        header[6] = SINGLE_SPLIT_SCORE
    return csv_text(header, ranking_rows(ranking, deltas))


def write_ranking_csv(path, ranking, deltas=None, single_split: bool = False) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(ranking_csv(ranking, deltas, single_split), encoding="utf-8")


@dataclass(frozen=True)
class RankingRow:
    rank: int
    base_id: str
    score: float
    citations: int


def read_ranking_csv(path) -> list[RankingRow]:
    """Read a ranking CSV written by :func:`write_ranking_csv`; rows come back in rank order."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        score_col = "stable_z" if "stable_z" in cols else SINGLE_SPLIT_SCORE
        if score_col not in cols or "link" not in cols or "rank" not in cols:
            raise ParseError(f"{path}: not a ranking CSV (columns {cols})")
        rows = []
        for line in reader:
            try:
                rows.append(RankingRow(
                    int(line["rank"]), normalize_arxiv_id(line["link"].rstrip("/").rsplit("/abs/", 1)[-1]),
                    float(line[score_col]), int(line.get("citations") or 0),
                ))
            except (ValueError, KeyError) as exc:
                raise ParseError(f"{path}: bad ranking row {line}: {exc}") from exc
    rows.sort(key=lambda r: r.rank)
    return rows


def weekly_stats_csv(rows: Sequence[WeeklyStatsRow], categories: Sequence[str]) -> str:
    cats = list(categories) + [OTHERS]
    header = ["week_start", "week_end", "papers", "mean", "std", f"mean_plus_{BAND_FACTOR}std"] + [
        f"mean_{c}" for c in cats
    ]
    body = [
        [r.week_label[0].isoformat(), r.week_label[1].isoformat(), r.papers, r.overall_mean,
         r.overall_std, r.upper_band] + [r.per_category_means.get(c) for c in cats]
        for r in rows
    ]
    return csv_text(header, body)


def categories_csv(dist: Mapping[str, float]) -> str:
    return csv_text(["category", "percent"], [[k, v] for k, v in dist.items()])


def trends_csv(series: Sequence[TrendSeries]) -> str:
    body = []
    for s in series:
        smoothed = s.smoothed_percent or (None,) * len(s.raw_percent)
        for wk, raw, sm in zip(s.week_starts, s.raw_percent, smoothed):
            body.append([wk.isoformat(), s.topic, raw, sm])
    return csv_text(["week_start", "topic", "raw_percent", "smoothed_percent"], body)


def institutions_csv(table: SectorRegionTable | None) -> str:
    header = ["sector", "sector_total"] + list(REGIONS)
    return csv_text(header, table.rows() if table else [])


def correlations_csv(points: Sequence[CorrelationPoint]) -> str:
    return csv_text(["n", "kendall_tau", "spearman_rho"], [[p.n, p.kendall_tau, p.spearman_rho] for p in points])


@dataclass
class ReportBundle:
    generated_at: datetime
    corpus_window: tuple[date, date] | None = None
    query_categories: tuple[str, ...] = ()
    corpus_size: int = 0
    excluded_ids: tuple[str, ...] = ()
    snapshot_source: str | None = None
    snapshot_retrieved_at: datetime | None = None
    not_found_ids: tuple[str, ...] = ()
    std_convention: str = "population"
    ranking: list[RankedEntry] = field(default_factory=list)
    deltas: dict | None = None
    weekly_stats: list[WeeklyStatsRow] = field(default_factory=list)
    report_categories: tuple[str, ...] = ()
    categories: dict[str, float] = field(default_factory=dict)
    trends: list[TrendSeries] = field(default_factory=list)
    top_list_topic_share: dict[str, float] = field(default_factory=dict)
    correlations: list[CorrelationPoint] = field(default_factory=list)
    overlap: tuple[int, int] | None = None
    sector_region: SectorRegionTable | None = None
    collaboration: dict[str, int] | None = None
    author_stats: dict[str, AuthorStats] | None = None


def _md_escape(text: str) -> str:
    return str(text).replace("|", "\\|")


def _md_table(header: Sequence[str], rows: Sequence[Sequence]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(_md_escape(fmt(v, 2) if isinstance(v, float) else fmt(v)) for v in row) + " |")
    return lines


def render_markdown(b: ReportBundle) -> str:
    out = ["# Citation trend report", ""]
    out.append(f"- Report schema: `{REPORT_SCHEMA}` (citetrend {__version__})")
    out.append(f"- Generated: {format_ts(b.generated_at)}")
    if b.snapshot_retrieved_at is not None:
        out.append(f"- **Citation counts as of {format_ts(b.snapshot_retrieved_at)}** (source: {b.snapshot_source})")
    if b.corpus_window is not None:
        out.append(f"- Corpus window: {b.corpus_window[0]} to {b.corpus_window[1]}; "
                   f"categories: {', '.join(b.query_categories)}; papers: {b.corpus_size}")
    out.append(f"- Standard deviation convention: {b.std_convention}")
    if b.excluded_ids:
        out.append(f"- Manually excluded: {', '.join(b.excluded_ids)}")
    out.append("")

    out += [f"## Top {len(b.ranking)} papers by stable z-score" if b.ranking else "## Top papers", ""]
    if b.ranking:
        header = ["No.", "Title", "Cat.", "Link", "Week", "Cit", "z-score", "Δ"]
        rows = []
        for r in ranking_rows(b.ranking, b.deltas):
            rows.append(r[:6] + [round(r[6], 2), r[7]])
        out += _md_table(header, rows)
        flagged = [e.base_id for e in b.ranking if e.base_id in set(b.not_found_ids)]
        if flagged:
            out += ["", f"Not found at the citation source (ranked with 0 citations): {', '.join(flagged)}"]
    else:
        out.append("No data.")
    out.append("")

    out += ["## Primary category distribution", ""]
    out += _md_table(["Category", "%"], [[k, v] for k, v in b.categories.items()]) if b.categories else ["No data."]
    out.append("")

    out += ["## Weekly citation statistics", ""]
    if b.weekly_stats:
        cats = list(b.report_categories) + [OTHERS]
        rows = [[fmt_week(r.week_label), r.papers, r.overall_mean, r.overall_std]
                + [r.per_category_means.get(c) for c in cats] for r in b.weekly_stats]
        out += _md_table(["Week", "Papers", "Mean", "Std"] + cats, rows)
    else:
        out.append("No data.")
    out.append("")

    out += ["## Keyword topics", ""]
    if b.top_list_topic_share:
        out += _md_table(["Topic", "% of top list"], [[k, v] for k, v in b.top_list_topic_share.items()])
        out += ["", "Weekly shares and smoothed curves are in `trends.csv`."]
    else:
        out.append("No data.")
    out.append("")

    out += ["## Single-split vs stable z-score", ""]
    if b.correlations:
        out += _md_table(["n", "Kendall tau", "Spearman rho"],
                         [[p.n, round(p.kendall_tau, 4), round(p.spearman_rho, 4)] for p in b.correlations])
        if b.overlap is not None:
            out += ["", f"Top-{b.overlap[1]} overlap: {b.overlap[0]} of {b.overlap[1]} papers appear in both lists."]
    else:
        out.append("No data.")
    out.append("")

    out += ["## Institutions", ""]
    if b.sector_region is not None:
        out += _md_table(["Sector", "Sector total"] + list(REGIONS), b.sector_region.rows())
        if b.sector_region.excluded_score:
            out += ["", f"Credit from sector 'other' left out: {b.sector_region.excluded_score:.2f}"]
        out.append("")
    if b.collaboration is not None:
        rows = [[c, b.collaboration.get(c, 0)] for c in COLLABORATION_CLASSES + (EXCLUDED,)]
        if b.author_stats:
            rows = [r + ([b.author_stats[r[0]].mean, b.author_stats[r[0]].std] if r[0] in b.author_stats else [None, None])
                    for r in rows]
        out += _md_table(["Contribution", "Papers", "Mean authors", "Std authors"], rows)
    if b.sector_region is None and b.collaboration is None:
        out.append("No data.")
    out.append("")
    return "\n".join(out)


def emit_report(bundle: ReportBundle, destination) -> dict[str, Path]:
    """Write every bundle file under ``destination``; returns name -> path."""
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    contents = {
        "report.md": render_markdown(bundle),
        "topN.csv": ranking_csv(bundle.ranking, bundle.deltas),
        "weekly_stats.csv": weekly_stats_csv(bundle.weekly_stats, bundle.report_categories),
        "categories.csv": categories_csv(bundle.categories),
        "trends.csv": trends_csv(bundle.trends),
        "institutions.csv": institutions_csv(bundle.sector_region),
        "correlations.csv": correlations_csv(bundle.correlations),
    }
    paths = {}
    for name in BUNDLE_FILES:
        path = dest / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(contents[name])
        paths[name] = path
    return paths
