"""Command-line front end.

Subcommands: fetch, snapshot, rank, correlate, trends, institutions,
report, discrepancy.  Every option may also come from a YAML file given
with ``--config``; flags win.  Failures print a one-line JSON error object
on stderr and exit 2 (validation), 3 (network) or 4 (data integrity).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

from . import AFFILIATION_SCHEMA, CORPUS_SCHEMA, REPORT_SCHEMA, SNAPSHOT_SCHEMA, __version__
from .affiliations import (
    GROUP_BY,
    METRICS,
    aggregate,
    load_affiliation_maps,
    load_registry,
    sector_region_table,
)
from .arxiv import API_URL, QuerySpec, fetch_corpus
from .citations import (
    S2_BATCH_URL,
    compare_snapshots,
    fetch_citations,
    load_snapshot,
    snapshot_filename,
)
from .config import RunConfig, build_config, field_names, load_config_file
from .errors import CitetrendError, DataIntegrityError, ValidationError
from .model import apply_exclusions, load_corpus, load_exclusions, save_corpus
from .pipeline import build_report
from .rankcorr import default_n_grid, prefix_sweep
from .report import (
    correlations_csv,
    csv_text,
    emit_report,
    institutions_csv,
    read_ranking_csv,
    trends_csv,
    write_ranking_csv,
)
from .trends import select_topics, topic_trends
from .zscore import CANONICAL_SPLIT_DAY, SplitSpec, rank_delta, rank_top_n

logger = logging.getLogger("citetrend")

# flag -> RunConfig field
OPTION_FLAGS = {
    "--categories": ("categories", "comma-separated arXiv category codes"),
    "--from": ("date_from", "first submission date, YYYY-MM-DD"),
    "--to": ("date_to", "last submission date, YYYY-MM-DD"),
    "--page-size": ("page_size", "arXiv results per request (1-2000)"),
    "--max-retries": ("max_retries", "transport retries before giving up"),
    "--top-n": ("top_n", "ranking length (default 40)"),
    "--std-convention": ("std_convention", "population or sample standard deviation"),
    "--split-day": ("split_day", "single-split mode: weekday the week starts on"),
    "--epoch": ("epoch", "week anchoring date (default: window start)"),
    "--topics": ("topics", "comma-separated built-in topics, or a JSON rules file"),
    "--window": ("sg_window", "Savitzky-Golay window length (default 8)"),
    "--order": ("sg_order", "Savitzky-Golay polynomial order (default 3)"),
    "--report-categories": ("report_categories", "primary categories for weekly stats"),
    "--source": ("source", "citation source label"),
    "--batch-size": ("batch_size", "ids per citation request"),
    "--corpus": ("corpus", "corpus JSONL file"),
    "--snapshot": ("snapshot", "citation snapshot JSONL file"),
    "--previous": ("previous", "previous ranking CSV, for rank deltas"),
    "--exclusions": ("exclusions", "file of base ids to exclude"),
    "--affiliations": ("affiliations", "paper -> per-author affiliation JSONL"),
    "--registry": ("registry", "institution registry JSONL"),
    "--cache-dir": ("cache_dir", "raw response cache directory"),
    "--snapshot-dir": ("snapshot_dir", "directory for dated snapshot files"),
    "--output-dir": ("output_dir", "report bundle directory"),
    "--replay-dir": ("replay_dir", "serve requests from this cache only (offline)"),
    "--timestamp": ("timestamp", "pinned UTC timestamp for retrieval/report times"),
    "--arxiv-url": ("arxiv_url", "arXiv query endpoint"),
    "--citation-url": ("citation_url", "citation batch endpoint"),
    "--n-values": ("n_values", "comma-separated prefix sizes for correlation sweeps"),
    "--metric": ("metric", f"institution metric: {', '.join(METRICS)}"),
    "--group-by": ("group_by", f"grouping: {', '.join(GROUP_BY + ('sector-region',))}"),
    "--out": ("out", "output file"),
}
assert {f for f, _ in OPTION_FLAGS.values()} == set(field_names())


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML config file")
    common.add_argument("-v", "--verbose", action="store_true")
    for flag, (dest, help_text) in OPTION_FLAGS.items():
        common.add_argument(flag, dest=dest, default=None, help=help_text)

    parser = argparse.ArgumentParser(prog="citetrend", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=_version_text())
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fetch", parents=[common], help="fetch arXiv metadata into a corpus file")
    sub.add_parser("snapshot", parents=[common], help="fetch citation counts for a corpus")
    sub.add_parser("rank", parents=[common], help="rank papers by stable z-score")
    p = sub.add_parser("correlate", parents=[common], help="rank correlation of two ranking CSVs")
    p.add_argument("single_split_csv", type=Path)
    p.add_argument("stable_csv", type=Path)
    sub.add_parser("trends", parents=[common], help="weekly keyword-topic shares")
    p = sub.add_parser("institutions", parents=[common], help="institution credit by group")
    p.add_argument("--ranking", type=Path, help="restrict to papers in this ranking CSV")
    sub.add_parser("report", parents=[common], help="write the full report bundle")
    p = sub.add_parser("discrepancy", parents=[common], help="compare two snapshot files")
    p.add_argument("reference", type=Path)
    p.add_argument("other", type=Path)
    return parser


def _version_text() -> str:
    return (f"citetrend {__version__} ({CORPUS_SCHEMA}, {SNAPSHOT_SCHEMA}, "
            f"{AFFILIATION_SCHEMA}, {REPORT_SCHEMA})")


def _now(cfg: RunConfig) -> datetime:
    return cfg.timestamp or datetime.now(timezone.utc).replace(microsecond=0)


def _need(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        flags = {v[0]: k for k, v in OPTION_FLAGS.items()}
        raise ValidationError("missing required option(s): " + ", ".join(flags[n] for n in missing))


def _load_corpus(cfg: RunConfig):
    corpus = load_corpus(cfg.corpus)
    excluded = []
    if cfg.exclusions is not None:
        ids = load_exclusions(cfg.exclusions)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            corpus = apply_exclusions(corpus, ids)
        for w in caught:
            logger.warning("%s", w.message)
        excluded = sorted(ids)
    return corpus, excluded


def cmd_fetch(cfg: RunConfig, args) -> int:
    _need(cfg, "out")
    spec = QuerySpec(frozenset(cfg.categories), (cfg.date_from, cfg.date_to), cfg.page_size, cfg.max_retries)
    corpus = fetch_corpus(
        spec,
        base_url=cfg.arxiv_url or API_URL,
        retrieval_time=_now(cfg),
        cache_dir=cfg.cache_dir,
        replay_dir=cfg.replay_dir,
    )
    save_corpus(corpus, cfg.out)
    print(f"fetch: {len(corpus)} papers -> {cfg.out}")
    return 0


def cmd_snapshot(cfg: RunConfig, args) -> int:
    _need(cfg, "corpus", "snapshot_dir")
    corpus = load_corpus(cfg.corpus)
    if not len(corpus):
        raise ValidationError("corpus is empty; nothing to snapshot")
    snaps = fetch_citations(
        sorted(corpus.records),
        cfg.source,
        snapshot_dir=cfg.snapshot_dir,
        batch_size=cfg.batch_size,
        retrieved_at=_now(cfg),
        base_url=cfg.citation_url or S2_BATCH_URL,
        cache_dir=cfg.cache_dir,
        replay_dir=cfg.replay_dir,
    )
    path = Path(cfg.snapshot_dir) / snapshot_filename(snaps.source, snaps.retrieved_at)
    print(f"snapshot: {len(snaps)} counts ({len(snaps.not_found())} not found) -> {path}")
    return 0


def cmd_rank(cfg: RunConfig, args) -> int:
    _need(cfg, "corpus", "snapshot", "out")
    corpus, _ = _load_corpus(cfg)
    snaps = load_snapshot(cfg.snapshot)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ranking = rank_top_n(corpus, snaps, cfg.top_n, split_day=cfg.split_day,
                             epoch=cfg.epoch, std_convention=cfg.std_convention)
    for w in caught:
        logger.warning("%s", w.message)
    deltas = None
    if cfg.previous is not None:
        deltas = rank_delta(ranking, [r.base_id for r in read_ranking_csv(cfg.previous)])
    write_ranking_csv(cfg.out, ranking, deltas, single_split=cfg.split_day is not None)
    print(f"rank: {len(ranking)} rows -> {cfg.out}")
    return 0


def cmd_correlate(cfg: RunConfig, args) -> int:
    _need(cfg, "out")
    single = {r.base_id: r.score for r in read_ranking_csv(args.single_split_csv)}
    stable = {r.base_id: r.score for r in read_ranking_csv(args.stable_csv)}
    missing = sorted(set(stable) - set(single))
    if missing:
        raise DataIntegrityError(
            f"{len(missing)} ids of the stable ranking are absent from the single-split ranking: "
            + ", ".join(missing)
        )
    points = prefix_sweep(single, stable, cfg.n_values or default_n_grid(len(stable)))
    Path(cfg.out).write_text(correlations_csv(points), encoding="utf-8")
    print(f"correlate: {len(points)} points -> {cfg.out}")
    return 0


def cmd_trends(cfg: RunConfig, args) -> int:
    _need(cfg, "corpus", "out")
    corpus, _ = _load_corpus(cfg)
    split = SplitSpec(cfg.split_day or CANONICAL_SPLIT_DAY, cfg.epoch or corpus.window[0])
    series = topic_trends(corpus, select_topics(cfg.topics), split, cfg.sg_window, cfg.sg_order)
    Path(cfg.out).write_text(trends_csv(series), encoding="utf-8")
    print(f"trends: {len(series)} topics -> {cfg.out}")
    return 0


def cmd_institutions(cfg: RunConfig, args) -> int:
    _need(cfg, "affiliations", "registry", "out")
    maps = load_affiliation_maps(cfg.affiliations)
    registry = load_registry(cfg.registry)
    if args.ranking is not None:
        ids = [r.base_id for r in read_ranking_csv(args.ranking)]
        missing = [i for i in ids if i not in maps]
        if missing:
            logger.warning("ranked papers without affiliation data: %s", ", ".join(missing))
        selected = [maps[i] for i in ids if i in maps]
    else:
        selected = [maps[k] for k in sorted(maps)]
    if cfg.group_by == "sector-region":
        text = institutions_csv(sector_region_table(selected, registry, cfg.metric))
    else:
        rows = aggregate(selected, registry, cfg.metric, cfg.group_by)
        text = csv_text(["group", "score", "papers", "percent"],
                         [[r.group, r.score, r.papers, r.percent] for r in rows])
    Path(cfg.out).write_text(text, encoding="utf-8")
    print(f"institutions: {len(selected)} papers -> {cfg.out}")
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    _need(cfg, "corpus", "snapshot", "output_dir")
    corpus, excluded = _load_corpus(cfg)
    snaps = load_snapshot(cfg.snapshot)
    previous = None
    if cfg.previous is not None:
        previous = [r.base_id for r in read_ranking_csv(cfg.previous)]
    maps = registry = None
    if cfg.affiliations is not None or cfg.registry is not None:
        _need(cfg, "affiliations", "registry")
        maps = load_affiliation_maps(cfg.affiliations)
        registry = load_registry(cfg.registry)
    bundle = build_report(
        corpus,
        snaps,
        generated_at=_now(cfg),
        top_n=cfg.top_n,
        std_convention=cfg.std_convention,
        epoch=cfg.epoch,
        compare_split_day=cfg.split_day or CANONICAL_SPLIT_DAY,
        previous_ranking=previous,
        topics=select_topics(cfg.topics),
        sg_window=cfg.sg_window,
        sg_order=cfg.sg_order,
        report_categories=cfg.report_categories,
        affiliation_maps=maps,
        registry=registry,
        excluded_ids=excluded,
        n_values=cfg.n_values,
    )
    paths = emit_report(bundle, cfg.output_dir)
    print(f"report: {len(paths)} files -> {cfg.output_dir}")
    return 0


def cmd_discrepancy(cfg: RunConfig, args) -> int:
    _need(cfg, "out")
    rows = compare_snapshots(load_snapshot(args.reference), load_snapshot(args.other))
    text = csv_text(["base_id", "reference", "other", "relative_discrepancy"],
                     [[r["base_id"], r["reference"], r["other"], r["relative_discrepancy"]] for r in rows])
    Path(cfg.out).write_text(text, encoding="utf-8")
    print(f"discrepancy: {len(rows)} shared papers -> {cfg.out}")
    return 0


COMMANDS = {
    "fetch": cmd_fetch,
    "snapshot": cmd_snapshot,
    "rank": cmd_rank,
    "correlate": cmd_correlate,
    "trends": cmd_trends,
    "institutions": cmd_institutions,
    "report": cmd_report,
    "discrepancy": cmd_discrepancy,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        file_values = load_config_file(args.config) if args.config else {}
        overrides = {dest: getattr(args, dest) for dest, _ in OPTION_FLAGS.values()}
        cfg = build_config(file_values, overrides)
        return COMMANDS[args.command](cfg, args)
    except CitetrendError as exc:
        error = {"error": exc.kind, "exit_code": exc.exit_code, "command": args.command, "message": str(exc)}
        progress = getattr(exc, "progress", None)
        if progress:
            error["progress"] = progress
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        error = {"error": "io", "exit_code": 4, "command": args.command, "message": str(exc)}
        print(json.dumps(error, sort_keys=True), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
