"""Paced HTTP client with a content-addressed response cache.

Every successful response body is written to ``cache_dir/<sha256>.bin``
before it is handed back, where the hash covers method, URL and request
body.  In replay mode the network is never touched: a cache miss is a
NetworkError.
"""
from __future__ import annotations

import hashlib
import logging
import time
from pathlib import Path

import requests

from .errors import NetworkError

logger = logging.getLogger(__name__)

RETRY_STATUSES = frozenset({500, 502, 503, 504})
RATE_LIMIT_STATUS = 429
MAX_RATE_LIMIT_WAITS = 20


def request_key(method: str, url: str, body: bytes | None = None) -> str:
    h = hashlib.sha256()
    h.update(method.upper().encode())
    h.update(b"\n")
    h.update(url.encode())
    if body:
        h.update(b"\n")
        h.update(body)
    return h.hexdigest()


class CachedClient:
    """Sequential client: at most one request in flight, ``min_interval``
    seconds between request starts, exponential backoff on transport errors.
    """

    def __init__(
        self,
        cache_dir=None,
        replay_dir=None,
        min_interval: float = 3.0,
        max_retries: int = 5,
        backoff_base: float = 1.0,
        backoff_factor: float = 2.0,
        timeout: float = 30.0,
        headers: dict | None = None,
        session: requests.Session | None = None,
        sleep=time.sleep,
    ):
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.replay_dir = Path(replay_dir) if replay_dir else None
        self.min_interval = min_interval
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self.timeout = timeout
        self.headers = dict(headers or {})
        self.session = session
        self._sleep = sleep
        self._last_start = None
        self.requests_made = 0

    @property
    def replaying(self) -> bool:
        return self.replay_dir is not None

    def _cache_path(self, root: Path, key: str) -> Path:
        return root / f"{key}.bin"

    def _pace(self):
        if self._last_start is not None and self.min_interval > 0:
            wait = self.min_interval - (time.monotonic() - self._last_start)
            if wait > 0:
                self._sleep(wait)
        self._last_start = time.monotonic()

    def get(self, url: str) -> bytes:
        return self.request("GET", url)

    def post(self, url: str, body: bytes) -> bytes:
        return self.request("POST", url, body)

    def request(self, method: str, url: str, body: bytes | None = None) -> bytes:
        key = request_key(method, url, body)
        if self.replaying:
            path = self._cache_path(self.replay_dir, key)
            if not path.exists():
                raise NetworkError(f"replay cache miss for {method} {url} ({path.name})")
            return path.read_bytes()

        if self.session is None:
            self.session = requests.Session()
        attempt = 0
        rate_limited = 0
        while True:
            self._pace()
            self.requests_made += 1
            try:
                resp = self.session.request(
                    method, url, data=body, headers=self.headers, timeout=self.timeout
                )
            except requests.RequestException as exc:
                attempt = self._backoff(attempt, f"{method} {url}: {exc}")
                continue
            if resp.status_code == RATE_LIMIT_STATUS:
                rate_limited += 1
                if rate_limited > MAX_RATE_LIMIT_WAITS:
                    raise NetworkError(f"{url}: still rate limited after {rate_limited} waits", 429)
                delay = _retry_after(resp) or self.backoff_base * self.backoff_factor ** min(rate_limited, 6)
                logger.info("rate limited by %s; waiting %.1fs", url, delay)
                self._sleep(delay)
                continue
            if resp.status_code in RETRY_STATUSES:
                attempt = self._backoff(attempt, f"{method} {url}: HTTP {resp.status_code}")
                continue
            if 400 <= resp.status_code < 500:
                raise NetworkError(
                    f"{method} {url}: HTTP {resp.status_code}: {resp.text[:500]}", resp.status_code
                )
            if resp.status_code >= 300:
                raise NetworkError(f"{method} {url}: HTTP {resp.status_code}", resp.status_code)
            data = resp.content
            if self.cache_dir is not None:
                self.cache_dir.mkdir(parents=True, exist_ok=True)
                self._cache_path(self.cache_dir, key).write_bytes(data)
            return data

    def _backoff(self, attempt: int, reason: str) -> int:
        if attempt >= self.max_retries:
            raise NetworkError(f"giving up after {attempt + 1} attempts: {reason}")
        delay = self.backoff_base * self.backoff_factor**attempt
        logger.warning("%s; retrying in %.1fs", reason, delay)
        self._sleep(delay)
        return attempt + 1


def _retry_after(resp) -> float | None:
    value = resp.headers.get("Retry-After")
    if value is None:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        return None
