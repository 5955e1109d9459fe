import random
import sys
import threading
from datetime import date, datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

from citetrend.model import PaperRecord, build_corpus

FIXTURES = Path(__file__).parent / "fixtures"
RETRIEVED = datetime(2023, 10, 26, tzinfo=timezone.utc)
WINDOW = (date(2023, 1, 1), date(2023, 12, 31))


def paper_id(k: int) -> str:
    return f"2301.{k:05d}"


def record(base_id, day, title="A paper", abstract="", primary="cs.CL", categories=None, comment=None, authors=()):
    return PaperRecord(
        base_id=base_id,
        title=title,
        abstract=abstract,
        primary_category=primary,
        categories=tuple(categories or (primary,)),
        first_submitted=datetime(day.year, day.month, day.day, 12, tzinfo=timezone.utc),
        comment=comment,
        authors=authors,
    )


def corpus_of(records, window=WINDOW, categories=()):
    return build_corpus(records, window, categories, RETRIEVED)


def random_papers(rng: random.Random, n_papers=None, n_weeks=None, max_count=None):
    """(id, date, count) triples spread over at most ``n_weeks`` weeks of 2023."""
    n_papers = n_papers or rng.randint(1, 1000)
    n_weeks = n_weeks or rng.randint(1, 52)
    max_count = max_count or rng.choice([3, 20, 500])
    start = date(2023, 1, 1)
    out = []
    for k in range(n_papers):
        day = start + timedelta(days=rng.randrange(n_weeks * 7))
        out.append((paper_id(k), day, rng.randint(0, max_count)))
    return out


def corpus_from_triples(triples):
    recs = [record(pid, day) for pid, day, _ in triples]
    return corpus_of(recs), {pid: c for pid, _, c in triples}


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _serve(self, body=None):
        server = self.server
        server.requests.append((self.command, self.path, body))
        status, headers, payload = server.responder(self.command, self.path, body)
        self.send_response(status)
        for k, v in headers.items():
            self.send_header(k, v)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def do_GET(self):
        self._serve()

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self._serve(self.rfile.read(length))


@pytest.fixture
def http_server():
    """Local server; tests set ``server.responder(method, path, body) -> (status, headers, bytes)``."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    server.requests = []
    server.responder = lambda m, p, b: (404, {}, b"no responder")
    server.url = f"http://127.0.0.1:{server.server_address[1]}"
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server
    server.shutdown()
    server.server_close()


def run_fixture_pipeline(workdir: Path) -> Path:
    """fetch -> snapshot -> report over the shipped replay fixtures; returns the bundle dir."""
    from citetrend.cli import main

    base = ["--config", str(FIXTURES / "pipeline.yaml"), "--replay-dir", str(FIXTURES / "replay")]
    corpus = workdir / "corpus.jsonl"
    snaps = workdir / "snapshots"
    out = workdir / "report"
    assert main(["fetch", *base, "--out", str(corpus)]) == 0
    assert main(["snapshot", *base, "--corpus", str(corpus), "--snapshot-dir", str(snaps)]) == 0
    (snapshot,) = snaps.iterdir()
    assert main([
        "report", *base, "--corpus", str(corpus), "--snapshot", str(snapshot),
        "--affiliations", str(FIXTURES / "affiliations.jsonl"),
        "--registry", str(FIXTURES / "registry.jsonl"), "--output-dir", str(out),
    ]) == 0
    return out


def pytest_terminal_summary(terminalreporter):
    results = getattr(sys.modules.get("test_acceptance"), "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
