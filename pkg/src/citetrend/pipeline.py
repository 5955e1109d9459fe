"""Assemble every analysis for one corpus + snapshot into a ReportBundle."""
from __future__ import annotations

import logging
from datetime import date, datetime
from typing import Mapping, Sequence

from .affiliations import (
    AffiliationRecord,
    PaperAffiliationMap,
    author_count_stats,
    collaboration_breakdown,
    sector_region_table,
)
from .citations import SnapshotSet
from .errors import ValidationError
from .model import Corpus
from .rankcorr import CorrelationPoint, default_n_grid, kendall_tau, overlap_count, spearman_rho
from .report import ReportBundle
from .stats import DEFAULT_REPORT_CATEGORIES, category_distribution, weekly_mean_std
from .trends import DEFAULT_ORDER, DEFAULT_WINDOW, TopicRule, builtin_topics, topic_share_of_list, topic_trends
from .zscore import (
    CANONICAL_SPLIT_DAY,
    DEFAULT_TOP_N,
    SplitSpec,
    order_ids,
    rank_delta,
    rank_top_n,
    scores,
)

logger = logging.getLogger(__name__)


def correlation_sweep(
    single: Mapping[str, float],
    stable: Mapping[str, float],
    counts: Mapping[str, int],
    n_values: Sequence[int] | None = None,
) -> list[CorrelationPoint]:
    """Prefix sweep over the stable ranking; prefixes whose scores are all
    tied are skipped with a log line instead of aborting the report."""
    order = order_ids(stable, counts)
    points = []
    for n in n_values or default_n_grid(len(order)):
        ids = order[:n]
        try:
            points.append(CorrelationPoint(n, kendall_tau(single, stable, ids), spearman_rho(single, stable, ids)))
        except ValidationError as exc:
            logger.info("skipping correlation at n=%d: %s", n, exc)
    return points


def build_report(
    corpus: Corpus,
    snapshot: SnapshotSet,
    generated_at: datetime,
    top_n: int = DEFAULT_TOP_N,
    std_convention: str = "population",
    epoch: date | None = None,
    compare_split_day=CANONICAL_SPLIT_DAY,
    previous_ranking: Sequence[str] | None = None,
    topics: Sequence[TopicRule] | None = None,
    sg_window: int = DEFAULT_WINDOW,
    sg_order: int = DEFAULT_ORDER,
    report_categories: Sequence[str] = DEFAULT_REPORT_CATEGORIES,
    affiliation_maps: Mapping[str, PaperAffiliationMap] | None = None,
    registry: Mapping[str, AffiliationRecord] | None = None,
    excluded_ids: Sequence[str] = (),
    n_values: Sequence[int] | None = None,
) -> ReportBundle:
    epoch = epoch or corpus.window[0]
    topics = list(topics) if topics is not None else builtin_topics()
    bundle = ReportBundle(
        generated_at=generated_at,
        corpus_window=corpus.window,
        query_categories=tuple(sorted(corpus.query_categories)),
        corpus_size=len(corpus),
        excluded_ids=tuple(sorted(excluded_ids)),
        snapshot_source=snapshot.source.value,
        snapshot_retrieved_at=snapshot.retrieved_at,
        not_found_ids=tuple(i for i in snapshot.not_found() if i in corpus),
        std_convention=std_convention,
        report_categories=tuple(report_categories),
    )
    if not len(corpus):
        return bundle

    counts = snapshot.counts()
    ranking = rank_top_n(corpus, snapshot, min(top_n, len(corpus)), epoch=epoch, std_convention=std_convention)
    bundle.ranking = ranking
    if previous_ranking is not None:
        bundle.deltas = rank_delta(ranking, list(previous_ranking))

    canonical = SplitSpec(CANONICAL_SPLIT_DAY, epoch)
    bundle.weekly_stats = weekly_mean_std(corpus, snapshot, canonical, report_categories)
    bundle.categories = category_distribution(corpus)
    bundle.trends = topic_trends(corpus, topics, canonical, sg_window, sg_order)
    bundle.top_list_topic_share = topic_share_of_list(ranking, corpus, topics)

    stable = scores(corpus, snapshot, None, epoch, std_convention)
    single = scores(corpus, snapshot, compare_split_day, epoch, std_convention)
    bundle.correlations = correlation_sweep(single, stable, counts, n_values)
    k = len(ranking)
    bundle.overlap = (overlap_count(order_ids(single, counts)[:k], order_ids(stable, counts)[:k]), k)

    if affiliation_maps is not None and registry is not None:
        ranked_ids = [e.base_id for e in ranking]
        unmapped = [i for i in ranked_ids if i not in affiliation_maps]
        if unmapped:
            logger.warning("ranked papers without affiliation data: %s", ", ".join(unmapped))
        maps = [affiliation_maps[i] for i in ranked_ids if i in affiliation_maps]
        if maps:
            bundle.sector_region = sector_region_table(maps, registry, "proportional")
            bundle.collaboration = collaboration_breakdown(maps, registry)
            bundle.author_stats = author_count_stats(maps, registry)
    return bundle
