"""Run configuration: YAML file values overridden by command-line flags."""
from __future__ import annotations

from dataclasses import dataclass, fields
from datetime import date, datetime
from pathlib import Path

import yaml

from .errors import ValidationError
from .model import parse_ts
from .zscore import DEFAULT_TOP_N, STD_CONVENTIONS, parse_weekday

DEFAULT_CATEGORIES = ("cs.CL", "cs.LG", "cs.AI", "cs.CV")


@dataclass
class RunConfig:
    categories: tuple[str, ...] = DEFAULT_CATEGORIES
    date_from: date = date(2023, 1, 1)
    date_to: date = date(2023, 9, 30)
    page_size: int = 500
    max_retries: int = 5
    top_n: int = DEFAULT_TOP_N
    std_convention: str = "population"
    split_day: str | None = None
    epoch: date | None = None
    topics: str | None = None
    sg_window: int = 8
    sg_order: int = 3
    report_categories: tuple[str, ...] = ("cs.CL", "cs.LG", "cs.CV")
    source: str = "semantic_scholar"
    batch_size: int = 100
    corpus: Path | None = None
    snapshot: Path | None = None
    previous: Path | None = None
    exclusions: Path | None = None
    affiliations: Path | None = None
    registry: Path | None = None
    cache_dir: Path | None = None
    snapshot_dir: Path | None = None
    output_dir: Path | None = None
    replay_dir: Path | None = None
    timestamp: datetime | None = None
    arxiv_url: str | None = None
    citation_url: str | None = None
    n_values: tuple[int, ...] | None = None
    metric: str = "proportional"
    group_by: str = "sector-region"
    out: Path | None = None

    def validate(self) -> "RunConfig":
        if self.date_from > self.date_to:
            raise ValidationError(f"window start {self.date_from} is after end {self.date_to}")
        if not isinstance(self.top_n, int) or self.top_n < 1:
            raise ValidationError(f"top_n must be >= 1, got {self.top_n}")
        if self.std_convention not in STD_CONVENTIONS:
            raise ValidationError(f"std_convention must be one of {sorted(STD_CONVENTIONS)}")
        if self.split_day is not None:
            parse_weekday(self.split_day)
        if not self.categories:
            raise ValidationError("at least one category is required")
        dirs = [Path(d).resolve() for d in (self.cache_dir, self.snapshot_dir, self.output_dir) if d]
        if len(set(dirs)) != len(dirs):
            raise ValidationError("cache, snapshot and output directories must be distinct")
        return self


_CONVERTERS = {
    "categories": lambda v: tuple(_split_list(v)),
    "report_categories": lambda v: tuple(_split_list(v)),
    "n_values": lambda v: tuple(int(x) for x in _split_list(v)),
    "date_from": lambda v: _date(v),
    "date_to": lambda v: _date(v),
    "epoch": lambda v: _date(v),
    "timestamp": lambda v: v if isinstance(v, datetime) else parse_ts(str(v)),
    "page_size": int,
    "max_retries": int,
    "top_n": int,
    "sg_window": int,
    "sg_order": int,
    "batch_size": int,
}
_PATHS = {"corpus", "snapshot", "previous", "exclusions", "affiliations", "registry",
          "cache_dir", "snapshot_dir", "output_dir", "replay_dir", "out"}
_ALIASES = {"from": "date_from", "to": "date_to", "window": "sg_window", "order": "sg_order"}


def _split_list(value):
    if isinstance(value, str):
        return [x.strip() for x in value.split(",") if x.strip()]
    return list(value)


def _date(value) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise ValidationError(f"bad date {value!r}; expected YYYY-MM-DD") from None


def field_names() -> list[str]:
    return [f.name for f in fields(RunConfig)]


def coerce(name: str, value):
    if value is None:
        return None
    try:
        if name in _CONVERTERS:
            return _CONVERTERS[name](value)
        if name in _PATHS:
            return Path(value)
        return value
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad value for {name}: {value!r} ({exc})") from exc


def load_config_file(path) -> dict:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError(f"config {path} must be a mapping")
    known = set(field_names())
    out = {}
    for key, value in data.items():
        name = _ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
        if name not in known:
            raise ValidationError(f"unknown config key {key!r}")
        out[name] = coerce(name, value)
    return out


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    """Config-file values, then flag overrides (``None`` means not given)."""
    values = dict(file_values)
    for name, value in overrides.items():
        if value is not None:
            values[name] = coerce(name, value)
    return RunConfig(**values).validate()
