"""Brute-force reference implementations used to check the package.

Nothing here imports citetrend's numeric code: weeks are found by walking
the calendar, statistics use math.fsum, rank correlations enumerate every
pair, and the smoothing filter solves normal equations window by window.
"""
import math
from datetime import date, timedelta
from fractions import Fraction

import numpy as np

# Monday first, matching datetime.weekday().
WEEKDAY_ORDER = range(7)


def week_index(day: date, start_weekday: int, epoch: date) -> int:
    origin = epoch
    while origin.weekday() != start_weekday:
        origin -= timedelta(days=1)
    index, start = 0, origin
    while day > start + timedelta(days=6):
        start += timedelta(days=7)
        index += 1
    while day < start:
        start -= timedelta(days=7)
        index -= 1
    return index


def mean_std(values, ddof=0):
    n = len(values)
    m = math.fsum(values) / n
    if n - ddof <= 0:
        return m, 0.0
    return m, math.sqrt(math.fsum((v - m) ** 2 for v in values) / (n - ddof))


def split_zscores(papers, start_weekday, epoch, ddof=0):
    """papers: list of (id, date, count) -> {id: z}"""
    weeks = {}
    for pid, day, count in papers:
        weeks.setdefault(week_index(day, start_weekday, epoch), []).append((pid, count))
    out = {}
    for members in weeks.values():
        m, s = mean_std([c for _, c in members], ddof)
        for pid, c in members:
            out[pid] = (c - m) / s if s > 0 else 0.0
    return out


def stable_scores(papers, epoch, ddof=0):
    per = {d: split_zscores(papers, d, epoch, ddof) for d in WEEKDAY_ORDER}
    out = {}
    for pid, _, _ in papers:
        zs = [per[d][pid] for d in WEEKDAY_ORDER]
        m, s = mean_std(zs, ddof)
        out[pid] = (zs, m, s, m - s)
    return out


def ranking(papers, epoch, n, ddof=0):
    stable = stable_scores(papers, epoch, ddof)
    counts = {pid: c for pid, _, c in papers}
    order = sorted(stable, key=lambda p: (-stable[p][3], -counts[p], p))
    return order[:n]


def _sign(x):
    return (x > 0) - (x < 0)


def kendall_tau_b(a, b):
    n = len(a)
    concordant = discordant = tied_a = tied_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            sa, sb = _sign(a[i] - a[j]), _sign(b[i] - b[j])
            if sa == 0:
                tied_a += 1
            if sb == 0:
                tied_b += 1
            if sa and sb:
                if sa == sb:
                    concordant += 1
                else:
                    discordant += 1
    n0 = n * (n - 1) // 2
    return (concordant - discordant) / math.sqrt((n0 - tied_a) * (n0 - tied_b))


def average_ranks(x):
    return [
        sum(1 for v in x if v < xi) + (sum(1 for v in x if v == xi) + 1) / 2
        for xi in x
    ]


def spearman(a, b):
    ra, rb = average_ranks(a), average_ranks(b)
    ma, mb = math.fsum(ra) / len(ra), math.fsum(rb) / len(rb)
    num = math.fsum((x - ma) * (y - mb) for x, y in zip(ra, rb))
    den = math.sqrt(math.fsum((x - ma) ** 2 for x in ra) * math.fsum((y - mb) ** 2 for y in rb))
    return num / den


def savgol(series, window, order):
    """Fit each window by solving the normal equations and evaluate at the target."""
    y = np.asarray(series, dtype=float)
    n = len(y)
    left = math.ceil((window - 1) / 2)
    out = []
    for i in range(n):
        start = i - left
        start = max(0, min(start, n - window))
        xs = np.arange(start, start + window) - i
        A = np.vander(xs, order + 1, increasing=True).astype(float)
        beta = np.linalg.solve(A.T @ A, A.T @ y[start:start + window])
        out.append(beta[0])
    return out


def fractional(author_affiliations):
    n = len(author_affiliations)
    scores = {}
    for affs in author_affiliations:
        for inst in affs:
            scores[inst] = scores.get(inst, Fraction(0)) + Fraction(1, n * len(affs))
    return scores
