import warnings
from datetime import date, datetime, timezone

import pytest
from hypothesis import given, strategies as st

from citetrend import CORPUS_SCHEMA
from citetrend.errors import DataIntegrityError, ParseError, ValidationError
from citetrend.model import (
    AuthorRef, ExclusionWarning, apply_exclusions, build_corpus, load_corpus,
    load_exclusions, normalize_arxiv_id, save_corpus,
)

from conftest import RETRIEVED, WINDOW, corpus_of, paper_id, record


@pytest.mark.parametrize("raw, expected", [
    ("2303.08774v3", "2303.08774"),
    ("2302.13971", "2302.13971"),
    ("2302.13971v1", "2302.13971"),
    ("http://arxiv.org/abs/2302.13971v1", "2302.13971"),
    ("arXiv:2307.09288v2", "2307.09288"),
    ("hep-th/9901001v2", "hep-th/9901001"),
    ("math.GT/0309136", "math.GT/0309136"),
])
def test_normalize_arxiv_id(raw, expected):
    assert normalize_arxiv_id(raw) == expected


@pytest.mark.parametrize("raw", ["", "   ", "2302.13971v", "2302.13971v0", "not-an-id", "230.13971"])
def test_normalize_rejects_malformed(raw):
    with pytest.raises(ParseError):
        normalize_arxiv_id(raw)


@given(st.from_regex(r"\A\d{4}\.\d{5}\Z"), st.integers(1, 99))
def test_normalize_is_idempotent(base, version):
    once = normalize_arxiv_id(f"{base}v{version}")
    assert once == base
    assert normalize_arxiv_id(once) == once


def test_record_rejects_versioned_id_and_stray_primary():
    with pytest.raises(ValidationError):
        record("2302.13971v1", date(2023, 2, 27))
    with pytest.raises(ValidationError):
        record("2302.13971", date(2023, 2, 27), primary="cs.CL", categories=("cs.LG",))


def test_author_ref_rejects_duplicate_affiliations():
    with pytest.raises(ValidationError):
        AuthorRef("A. Author", ("meta", "meta"))


def five():
    return corpus_of([record(paper_id(k), date(2023, 1, 2 + k)) for k in range(5)])


def test_build_corpus_window_and_first_seen_wins():
    recs = [
        record("2301.00001", date(2023, 1, 5), title="first"),
        record("2301.00001", date(2023, 1, 5), title="second"),
        record("2212.00001", date(2022, 12, 30)),
    ]
    corpus = build_corpus(recs, (date(2023, 1, 1), date(2023, 9, 30)), {"cs.CL"}, RETRIEVED)
    assert list(corpus.records) == ["2301.00001"]
    assert corpus.records["2301.00001"].title == "first"


def test_corpus_rejects_record_outside_query_categories():
    with pytest.raises(DataIntegrityError):
        corpus_of([record("2301.00001", date(2023, 1, 5), primary="stat.ME")], categories={"cs.CL"})


def test_empty_corpus_roundtrip(tmp_path):
    path = tmp_path / "c.jsonl"
    empty = corpus_of([])
    save_corpus(empty, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 and CORPUS_SCHEMA in lines[0]
    assert load_corpus(path) == empty


def test_save_is_byte_stable(tmp_path):
    recs = [
        record("2301.00003", date(2023, 1, 3), title="Été, naïve unicode", comment="10 pages",
               authors=(AuthorRef("X", ("a", "b")),)),
        record("2301.00001", date(2023, 1, 1)),
        record("2301.00002", date(2023, 1, 2), abstract="multi\nline"),
    ]
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    save_corpus(corpus_of(recs), a)
    save_corpus(corpus_of(list(reversed(recs))), b)
    assert a.read_bytes() == b.read_bytes()
    assert load_corpus(a) == corpus_of(recs)


def test_load_rejects_schema_mismatch_and_duplicates(tmp_path):
    path = tmp_path / "c.jsonl"
    save_corpus(five(), path)
    lines = path.read_text().splitlines()
    bad = tmp_path / "bad.jsonl"
    bad.write_text(lines[0].replace(CORPUS_SCHEMA, "citetrend.corpus/99") + "\n")
    with pytest.raises(DataIntegrityError):
        load_corpus(bad)
    dup = tmp_path / "dup.jsonl"
    dup.write_text("\n".join(lines + [lines[1]]) + "\n")
    with pytest.raises(DataIntegrityError):
        load_corpus(dup)
    garbage = tmp_path / "garbage.jsonl"
    garbage.write_text(lines[0] + "\n{not json\n")
    with pytest.raises(ParseError):
        load_corpus(garbage)


def test_exclusions():
    corpus = five()
    assert apply_exclusions(corpus, set()) == corpus
    assert len(apply_exclusions(corpus, {paper_id(0)})) == 4
    with pytest.warns(ExclusionWarning):
        out = apply_exclusions(corpus, {"2399.99999"})
    assert len(out) == 5


def test_exclusion_file_comments(tmp_path):
    path = tmp_path / "exclude.txt"
    path.write_text("# hand-curated\n2301.00001v2  # out of scope\n\n2301.00002\n")
    assert load_exclusions(path) == {"2301.00001", "2301.00002"}


@given(st.sets(st.integers(0, 20)), st.sets(st.integers(0, 30)))
def test_exclusion_is_set_difference(present, excluded):
    corpus = corpus_of([record(paper_id(k), date(2023, 1, 1)) for k in present])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ExclusionWarning)
        out = apply_exclusions(corpus, {paper_id(k) for k in excluded})
    assert set(out.records) == {paper_id(k) for k in present - excluded}


def test_timestamps_are_utc():
    naive = corpus_of([], window=WINDOW).retrieval_time
    assert naive.tzinfo is not None
    rec = record("2301.00001", date(2023, 1, 1))
    assert rec.first_submitted.tzinfo == timezone.utc
    assert rec.submitted_date == date(2023, 1, 1)
    assert rec.link == "https://arxiv.org/abs/2301.00001"
    assert isinstance(rec.first_submitted, datetime)
