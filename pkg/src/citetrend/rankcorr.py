"""Agreement between two rankings: Kendall tau-b, Spearman rho, prefix sweeps, overlap."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import ValidationError


@dataclass(frozen=True)
class CorrelationPoint:
    n: int
    kendall_tau: float
    spearman_rho: float


def _vectors(scores_a: Mapping, scores_b: Mapping, ids: Sequence[str]):
    if len(ids) < 2:
        raise ValidationError("rank correlation needs at least 2 ids")
    missing = [i for i in ids if i not in scores_a or i not in scores_b]
    if missing:
        raise ValidationError(f"ids missing a score: {', '.join(map(str, missing))}")
    a = np.array([scores_a[i] for i in ids], dtype=np.float64)
    b = np.array([scores_b[i] for i in ids], dtype=np.float64)
    for name, v in (("first", a), ("second", b)):
        if np.all(v == v[0]):
            raise ValidationError(f"{name} score vector is entirely tied; correlation undefined")
    return a, b


def _clip(x: float) -> float:
    return float(min(1.0, max(-1.0, x)))


def _tied_pairs(v: np.ndarray) -> int:
    _, counts = np.unique(v, return_counts=True)
    return int(sum(int(t) * (int(t) - 1) // 2 for t in counts))


def kendall_tau(scores_a: Mapping, scores_b: Mapping, ids: Sequence[str]) -> float:
    """Tie-corrected Kendall tau-b over ``ids``."""
    a, b = _vectors(scores_a, scores_b, ids)
    n0 = len(a) * (len(a) - 1) // 2
    pairs_a, pairs_b = n0 - _tied_pairs(a), n0 - _tied_pairs(b)
    # scipy counts concordant minus discordant pairs exactly; recover that
    # integer and renormalise so identical or reversed inputs give exactly +-1
    tau = stats.kendalltau(a, b, variant="b").statistic
    s = round(tau * math.sqrt(pairs_a) * math.sqrt(pairs_b))
    prod = pairs_a * pairs_b
    root = math.isqrt(prod)
    den = root if root * root == prod else math.sqrt(prod)
    return _clip(s / den)


def spearman_rho(scores_a: Mapping, scores_b: Mapping, ids: Sequence[str]) -> float:
    """Pearson correlation of average ranks."""
    a, b = _vectors(scores_a, scores_b, ids)
    ra = stats.rankdata(a)
    rb = stats.rankdata(b)
    da = ra - ra.mean()
    db = rb - rb.mean()
    # exact squares of half-integer rank sums keep identical/reversed inputs at exactly +-1
    return _clip(float(np.dot(da, db) / np.sqrt(np.dot(da, da) * np.dot(db, db))))


def default_n_grid(size: int, step: int = 10) -> list[int]:
    grid = list(range(step, size, step))
    if size >= 2:
        grid.append(size)
    return grid


def prefix_sweep(
    scores_single_split: Mapping[str, float],
    scores_stable: Mapping[str, float],
    n_values: Iterable[int] | None = None,
) -> list[CorrelationPoint]:
    """Correlate the two scores over the top-n papers ranked by the stable score.

    Stable-score ties are broken by id so prefixes are deterministic.
    """
    order = sorted(scores_stable, key=lambda i: (-scores_stable[i], i))
    if n_values is None:
        n_values = default_n_grid(len(order))
    points = []
    for n in n_values:
        if not 2 <= n <= len(order):
            raise ValidationError(f"prefix size {n} outside [2, {len(order)}]")
        ids = order[:n]
        points.append(CorrelationPoint(
            n,
            kendall_tau(scores_single_split, scores_stable, ids),
            spearman_rho(scores_single_split, scores_stable, ids),
        ))
    return points


def overlap_count(list_a: Iterable[str], list_b: Iterable[str]) -> int:
    return len(set(list_a) & set(list_b))
