import json
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from citetrend._http import CachedClient, request_key
from citetrend.citations import (
    Source, compare_snapshots, fetch_citations, load_snapshot, make_snapshot_set,
    relative_discrepancy, save_snapshot, snapshot_filename,
)
from citetrend.errors import DataIntegrityError, NetworkError, ValidationError

AT = datetime(2023, 10, 26, 12, 30, tzinfo=timezone.utc)


def fast_client(**kw):
    sleeps = []
    client = CachedClient(min_interval=0, backoff_base=0.01, sleep=sleeps.append, **kw)
    client.sleeps = sleeps
    return client


def batch_responder(counts):
    """Answer batch POSTs from ``counts``; ids absent from it come back as null."""
    def respond(method, path, body):
        ids = [i.split(":", 1)[1] for i in json.loads(body)["ids"]]
        out = [None if i not in counts else {"paperId": "x" + i, "citationCount": counts[i]} for i in ids]
        return 200, {"Content-Type": "application/json"}, json.dumps(out).encode()
    return respond


@pytest.mark.parametrize("ref, other, expected", [
    (874, 710, 18.7),
    (2372, 1891, 20.3),
    (36, 29, 19.4),
])
def test_relative_discrepancy_published_values(ref, other, expected):
    assert abs(100 * relative_discrepancy(ref, other) - expected) <= 0.1


@given(st.integers(1, 10**6))
def test_relative_discrepancy_identity(x):
    assert relative_discrepancy(x, x) == 0


def test_relative_discrepancy_zero_reference():
    with pytest.raises(ValidationError):
        relative_discrepancy(0, 5)


def test_fetch_rejects_empty_ids():
    with pytest.raises(ValidationError):
        fetch_citations([], client=fast_client())


def test_fetch_three_ids(http_server, tmp_path):
    http_server.responder = batch_responder({"2301.00001": 5, "2301.00002": 0, "2301.00003": 12})
    snaps = fetch_citations(["2301.00003", "2301.00001v2", "2301.00002"], client=fast_client(),
                            base_url=http_server.url + "/batch", retrieved_at=AT, snapshot_dir=tmp_path)
    assert snaps.counts() == {"2301.00001": 5, "2301.00002": 0, "2301.00003": 12}
    assert snaps.not_found() == [] and snaps.complete
    assert load_snapshot(tmp_path / snapshot_filename(Source.SEMANTIC_SCHOLAR, AT)) == snaps
    method, path, body = http_server.requests[0]
    assert method == "POST" and path == "/batch?fields=citationCount"
    assert json.loads(body) == {"ids": ["ARXIV:2301.00001", "ARXIV:2301.00002", "ARXIV:2301.00003"]}


def test_fetch_unknown_id_flagged(http_server):
    http_server.responder = batch_responder({"2301.00001": 5, "2301.00003": 12})
    snaps = fetch_citations(["2301.00001", "2301.00002", "2301.00003"], client=fast_client(),
                            base_url=http_server.url, retrieved_at=AT)
    assert len(snaps) == 3
    assert snaps.count("2301.00002") == 0
    assert snaps.not_found() == ["2301.00002"]


def test_fetch_batches(http_server):
    ids = [f"2301.{k:05d}" for k in range(7)]
    http_server.responder = batch_responder({i: 1 for i in ids})
    snaps = fetch_citations(ids, client=fast_client(), base_url=http_server.url, batch_size=3, retrieved_at=AT)
    assert len(snaps) == 7 and len(http_server.requests) == 3


def test_rate_limit_is_honoured_not_fatal(http_server):
    calls = []
    inner = batch_responder({"2301.00001": 9})

    def respond(method, path, body):
        calls.append(path)
        if len(calls) <= 2:
            return 429, {"Retry-After": "2"}, b"slow down"
        return inner(method, path, body)

    http_server.responder = respond
    client = fast_client(max_retries=0)
    snaps = fetch_citations(["2301.00001"], client=client, base_url=http_server.url, retrieved_at=AT)
    assert snaps.counts() == {"2301.00001": 9}
    assert client.sleeps == [2.0, 2.0]


def test_transient_5xx_retried_with_backoff(http_server):
    calls = []
    inner = batch_responder({"2301.00001": 9})

    def respond(method, path, body):
        calls.append(path)
        return (502, {}, b"bad gateway") if len(calls) <= 2 else inner(method, path, body)

    http_server.responder = respond
    client = fast_client(max_retries=3)
    fetch_citations(["2301.00001"], client=client, base_url=http_server.url, retrieved_at=AT)
    assert client.sleeps == [0.01, 0.02]


def test_failure_persists_partial_snapshot(http_server, tmp_path):
    ids = [f"2301.{k:05d}" for k in range(4)]
    inner = batch_responder({i: 3 for i in ids})

    def respond(method, path, body):
        if "ARXIV:2301.00000" in body.decode():
            return inner(method, path, body)
        return 503, {}, b"down"

    http_server.responder = respond
    with pytest.raises(NetworkError) as info:
        fetch_citations(ids, client=fast_client(max_retries=1), base_url=http_server.url,
                        batch_size=2, retrieved_at=AT, snapshot_dir=tmp_path)
    assert info.value.progress["missing"] == ["2301.00002", "2301.00003"]
    partial = load_snapshot(info.value.progress["partial_snapshot"])
    assert not partial.complete
    assert sorted(partial.snapshots) == ["2301.00000", "2301.00001"]


def test_snapshot_files_are_immutable(tmp_path):
    snaps = make_snapshot_set({"2301.00001": 4}, Source.GOOGLE_SCHOLAR, AT)
    path = save_snapshot(snaps, tmp_path)
    assert path.name == "google_scholar-20231026T123000Z.jsonl"
    with pytest.raises(DataIntegrityError):
        save_snapshot(snaps, tmp_path)


def test_cache_and_replay(http_server, tmp_path):
    http_server.responder = batch_responder({"2301.00001": 4})
    fetch_citations(["2301.00001"], client=fast_client(cache_dir=tmp_path), base_url=http_server.url,
                    retrieved_at=AT)
    key = request_key("POST", f"{http_server.url}?fields=citationCount",
                      json.dumps({"ids": ["ARXIV:2301.00001"]}).encode())
    assert (tmp_path / f"{key}.bin").exists()
    http_server.responder = lambda m, p, b: (500, {}, b"")
    again = fetch_citations(["2301.00001"], client=fast_client(replay_dir=tmp_path),
                            base_url=http_server.url, retrieved_at=AT)
    assert again.counts() == {"2301.00001": 4}
    with pytest.raises(NetworkError, match="replay cache miss"):
        fetch_citations(["2301.00002"], client=fast_client(replay_dir=tmp_path), base_url=http_server.url)


def test_manual_source_cannot_be_fetched():
    with pytest.raises(ValidationError):
        fetch_citations(["2301.00001"], source="manual", client=fast_client())
    with pytest.raises(ValidationError):
        fetch_citations(["2301.00001"], source="bing", client=fast_client())


def test_compare_snapshots():
    ref = make_snapshot_set({"2302.13971": 874, "2301.00001": 0}, "semantic_scholar", AT)
    other = make_snapshot_set({"2302.13971": 710, "2301.00001": 3}, "google_scholar", AT)
    rows = compare_snapshots(ref, other)
    by_id = {r["base_id"]: r for r in rows}
    assert by_id["2301.00001"]["relative_discrepancy"] is None
    assert abs(by_id["2302.13971"]["relative_discrepancy"] - 164 / 874) < 1e-12
