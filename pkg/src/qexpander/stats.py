"""Binomial confidence intervals."""

from __future__ import annotations

import math

from scipy.stats import norm


def wilson_interval(k: int, n: int, confidence: float = 0.99) -> tuple[float, float]:
    """Two-sided Wilson score interval for ``k`` successes in ``n`` trials."""
    if n <= 0:
        return 0.0, 1.0
    z = float(norm.ppf(0.5 + confidence / 2))
    return _wilson(k, n, z)


def wilson_upper(k: int, n: int, confidence: float = 0.99) -> float:
    """One-sided upper Wilson bound at the given confidence."""
    if n <= 0:
        return 1.0
    return _wilson(k, n, float(norm.ppf(confidence)))[1]


def wilson_lower(k: int, n: int, confidence: float = 0.99) -> float:
    if n <= 0:
        return 0.0
    return _wilson(k, n, float(norm.ppf(confidence)))[0]


def _wilson(k: int, n: int, z: float) -> tuple[float, float]:
    phat = k / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> float:
    """Pooled z statistic for ``p1 - p2``."""
    p = (k1 + k2) / (n1 + n2)
    se = math.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))
    if se == 0:
        return 0.0
    return (k1 / n1 - k2 / n2) / se
