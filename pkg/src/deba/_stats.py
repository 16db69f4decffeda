"""Scalar statistics shared by the signal, profiler, and window code.

Everything here uses ``math.fsum`` (exactly rounded summation) and plain
sorts so results are bit-identical across platforms, which the golden-file
tests rely on. Variance and standard deviation divide by the count, not
count - 1.
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import EmptyInput


def mean(values: Sequence[float]) -> float:
    if not values:
        raise EmptyInput("mean of empty sequence")
    return math.fsum(values) / len(values)


def population_variance(values: Sequence[float]) -> float:
    m = mean(values)
    return math.fsum((v - m) ** 2 for v in values) / len(values)


def population_std(values: Sequence[float]) -> float:
    return math.sqrt(population_variance(values))


def median(values: Sequence[float]) -> float:
    """Median; for even-length input, the mean of the two central order stats."""
    if not values:
        raise EmptyInput("median of empty sequence")
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def linear_quantile(values: Sequence[float], q: float) -> float:
    """Quantile with linear interpolation between closest order statistics.

    Matches the common "linear" convention: rank h = (n - 1) * q, result
    interpolated between the floor and ceiling order statistics.
    """
    if not values:
        raise EmptyInput("quantile of empty sequence")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile fraction out of range: {q}")
    ordered = sorted(values)
    h = (len(ordered) - 1) * q
    lo = math.floor(h)
    hi = math.ceil(h)
    if lo == hi:
        return ordered[lo]
    return ordered[lo] + (h - lo) * (ordered[hi] - ordered[lo])
