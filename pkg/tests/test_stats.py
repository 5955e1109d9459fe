import math
import random
from collections import Counter
from datetime import date, timedelta

import pytest

import oracles
from citetrend.errors import DataIntegrityError, ValidationError
from citetrend.stats import (
    MATH_PHYSICS, OTHERS, CommentShare, category_distribution, comment_keyword_share,
    main_category, weekly_mean_std,
)

from conftest import corpus_of, paper_id, record


def test_week_moments():
    recs = [record(paper_id(k), date(2023, 1, 4), primary=p)
            for k, p in enumerate(["cs.CL", "cs.CL", "cs.LG", "math.OC"])]
    counts = dict(zip([paper_id(k) for k in range(4)], [0, 2, 4, 10]))
    (row,) = weekly_mean_std(corpus_of(recs), counts)
    assert row.overall_mean == 4.0
    assert row.overall_std == pytest.approx(math.sqrt(14), abs=1e-12)
    assert row.upper_band == pytest.approx(4 + 0.5 * math.sqrt(14))
    assert row.per_category_means == {"cs.CL": 1.0, "cs.LG": 4.0, "cs.CV": None, OTHERS: 10.0}
    assert row.week_label == (date(2023, 1, 1), date(2023, 1, 7))


def test_single_paper_week_and_gap_week():
    recs = [record(paper_id(0), date(2023, 1, 2)), record(paper_id(1), date(2023, 1, 16))]
    rows = weekly_mean_std(corpus_of(recs), {paper_id(0): 7, paper_id(1): 3})
    assert [(r.papers, r.overall_mean, r.overall_std) for r in rows] == [(1, 7.0, 0.0), (0, None, None), (1, 3.0, 0.0)]


def test_weekly_random_matches_oracle():
    rng = random.Random(9)
    recs, counts = [], {}
    for k in range(300):
        day = date(2023, 1, 1) + timedelta(days=rng.randrange(70))
        recs.append(record(paper_id(k), day, primary=rng.choice(["cs.CL", "cs.LG", "cs.CV", "cs.AI"])))
        counts[paper_id(k)] = rng.randint(0, 200)
    rows = weekly_mean_std(corpus_of(recs), counts)
    for r in rows:
        members = [counts[x.base_id] for x in recs if r.week_label[0] <= x.submitted_date <= r.week_label[1]]
        m, s = oracles.mean_std(members)
        assert abs(r.overall_mean - m) <= 1e-9 and abs(r.overall_std - s) <= 1e-9


def test_weekly_requires_snapshot():
    with pytest.raises(DataIntegrityError):
        weekly_mean_std(corpus_of([record(paper_id(0), date(2023, 1, 2))]), {})


@pytest.mark.parametrize("cat, expected", [
    ("cs.CL", "cs.CL"), ("math.OC", MATH_PHYSICS), ("math-ph", MATH_PHYSICS), ("quant-ph", MATH_PHYSICS),
    ("physics.optics", MATH_PHYSICS), ("hep-th", MATH_PHYSICS), ("stat.ML", "stat.ML"),
])
def test_main_category(cat, expected):
    assert main_category(cat) == expected


def test_category_distribution():
    assert category_distribution(corpus_of([record(paper_id(0), date(2023, 1, 2))])) == {"cs.CL": 100.0}
    cats = ["cs.CL"] * 5 + ["cs.LG"] * 3 + ["math.OC", "quant-ph"]
    corpus = corpus_of([record(paper_id(k), date(2023, 1, 2), primary=c) for k, c in enumerate(cats)])
    expected = {main_category(c): 100 * n / 10 for c, n in Counter(cats).items()}
    expected[MATH_PHYSICS] = 20.0
    dist = category_distribution(corpus)
    assert dist == expected and list(dist) == ["cs.CL", "cs.LG", MATH_PHYSICS]


def test_comment_keyword_share():
    recs = [record(paper_id(k), date(2023, 6, 5),
                   comment=("Accepted to ACL 2023" if k < 3 else "12 pages" if k < 5 else None))
            for k in range(8)]
    recs.append(record(paper_id(99), date(2023, 6, 20), comment="ACL"))
    share = comment_keyword_share(corpus_of(recs), date(2023, 6, 6), "acl")
    assert share == CommentShare(3, 5, 8)
    assert share.percent_of_total == 37.5
    none = comment_keyword_share(corpus_of(recs[5:8]), date(2023, 6, 6), "acl")
    assert (none.matching, none.with_comments) == (0, 0)
    with pytest.raises(ValidationError):
        comment_keyword_share(corpus_of(recs), date(2023, 6, 6), "")


def test_comment_share_percentage():
    assert round(CommentShare(238, 500, 964).percent_of_total, 1) == 24.7
