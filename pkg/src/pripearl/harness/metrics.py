"""Error and ranking-distance metrics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import AbstractSet, Mapping, Sequence

from ..errors import ValidationError


@dataclass(frozen=True)
class ErrorStats:
    """Summary of noisy-vs-exact differences over a batch of queries."""

    mean_abs: float
    mean_signed: float
    frac_within_two: float
    histogram: Mapping[int, int]


def error_metrics(
    true_counts: Sequence[int], noisy_counts: Sequence[int]
) -> ErrorStats:
    """Aggregate signed errors (noisy - true) over aligned sequences."""
    if len(true_counts) != len(noisy_counts):
        raise ValidationError(
            f"length mismatch: {len(true_counts)} true vs {len(noisy_counts)} noisy"
        )
    if not true_counts:
        raise ValidationError("at least one query is required")
    errors = [noisy - true for true, noisy in zip(true_counts, noisy_counts)]
    n = len(errors)
    return ErrorStats(
        mean_abs=sum(abs(e) for e in errors) / n,
        mean_signed=sum(errors) / n,
        frac_within_two=sum(1 for e in errors if abs(e) <= 2) / n,
        histogram=dict(Counter(errors)),
    )


def jaccard_distance(true_top: AbstractSet[str], noisy_top: AbstractSet[str]) -> float:
    """1 - |intersection| / |union|; two empty sets are at distance 0."""
    union = len(true_top | noisy_top)
    if union == 0:
        return 0.0
    return 1.0 - len(true_top & noisy_top) / union
