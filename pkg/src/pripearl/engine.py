"""Noisy counting over aggregated cells.

A query over an arbitrary aligned time range is answered by cutting the range
into the fewest atomic units, adding deterministic Laplace noise to the exact
count of each unit, clamping each noisy term at zero, and summing. Small sums
are suppressed to zero below a configured threshold. Entities with few enough
children are instead answered as the sum of their children's answers, which
keeps parent and child counts consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .noise import CanonicalQuery, NoiseParams, pseudorandom_laplace_noise
from .store import Store
from .timegrid import TimeHierarchy, TimeRange, minimal_partition


@dataclass(frozen=True)
class PrivacyParams:
    """Tuning knobs for the noisy counting pipeline.

    suppression_threshold: noisy sums below this value are reported as zero.
    max_consistent_children: a parent entity with at most this many children
        is answered as the sum of its children's answers.
    noisy_totals: deployment flag recording whether grand totals, when
        published through other channels, are noisy rather than exact. It is
        carried in responses' provenance only; nothing here branches on it.
    """

    noise: NoiseParams
    suppression_threshold: int = 0
    max_consistent_children: int = 0
    hierarchy: TimeHierarchy = TimeHierarchy()
    noisy_totals: bool = False

    def __post_init__(self) -> None:
        if self.suppression_threshold < 0:
            raise ValidationError("suppression threshold must be non-negative")
        if self.max_consistent_children < 0:
            raise ValidationError("max consistent children must be non-negative")


@dataclass(frozen=True)
class NoisyAnswer:
    """Result of one noisy count: the value plus how it was produced."""

    value: int
    suppressed: bool
    partition_size: int
    entity_fanout: int

    def __post_init__(self) -> None:
        if self.value < 0:
            raise ValidationError("noisy answers are never negative")
        if self.suppressed and self.value != 0:
            raise ValidationError("suppressed answers must be zero")


@dataclass(frozen=True)
class BudgetDims:
    """Dimensions of the query surface a member's events can appear in."""

    n_attrs: int
    n_time_levels: int
    n_entity_levels: int

    def __post_init__(self) -> None:
        for name in ("n_attrs", "n_time_levels", "n_entity_levels"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be at least 1")


@dataclass(frozen=True)
class TopKResult:
    """Ranked values plus bookkeeping the service reports alongside them."""

    rows: tuple[tuple[str, NoisyAnswer], ...]
    suppressed_count: int
    partition_size: int


def canonical_noisy_count(
    params: PrivacyParams, query: CanonicalQuery, store: Store
) -> int:
    """Noisy count for one atomic unit: max(true + noise, 0).

    The clamp keeps reported counts non-negative; it never reveals how far
    below zero the noisy value fell.
    """
    true_count = store.true_count(
        query.stat_type, query.entity_id, query.d_attr, query.d_val, query.atomic_range
    )
    return max(true_count + pseudorandom_laplace_noise(params.noise, query), 0)


def compute_noisy_count(
    params: PrivacyParams,
    stat_type: str,
    entity_id: str,
    d_attr: str,
    d_val: str,
    time_range: TimeRange,
    store: Store,
) -> NoisyAnswer:
    """Noisy count for an arbitrary aligned range, with hierarchy consistency.

    A parent whose fanout is within max_consistent_children returns the sum
    of its children's answers, so the parent exactly equals the sum of its
    parts. Everything else is a minimal-partition sum of canonical noisy
    counts, reported as zero when below the suppression threshold.
    """
    children = store.children_of(entity_id)
    parts = minimal_partition(time_range, params.hierarchy)
    if children and len(children) <= params.max_consistent_children:
        total = 0
        for child in sorted(children):
            total += compute_noisy_count(
                params, stat_type, child, d_attr, d_val, time_range, store
            ).value
        return NoisyAnswer(total, False, len(parts), len(children))
    total = 0
    for part in parts:
        query = CanonicalQuery(stat_type, entity_id, d_attr, d_val, part)
        total += canonical_noisy_count(params, query, store)
    if total < params.suppression_threshold:
        return NoisyAnswer(0, True, len(parts), 0)
    return NoisyAnswer(total, False, len(parts), 0)


def top_k_detailed(
    params: PrivacyParams,
    stat_type: str,
    entity_id: str,
    d_attr: str,
    time_range: TimeRange,
    k: int,
    k_max: int,
    store: Store,
) -> TopKResult:
    """Rank attribute values by noisy count.

    Candidates are the k_max values with the highest exact counts, ties broken
    lexicographically; fixing the candidate set this way keeps smaller k
    results a prefix of larger ones. Each candidate is scored with the same
    noisy pipeline as a single count; suppressed candidates are dropped, the
    rest are ordered by descending noisy value (ties lexicographic), and the
    first k are returned.
    """
    if k_max < 1:
        raise ValidationError("kMax must be at least 1")
    if k < 0:
        raise ValidationError("k must be non-negative")
    if k > k_max:
        raise ValidationError("k cannot exceed kMax")
    store.children_of(entity_id)  # unknown entity check
    parts = minimal_partition(time_range, params.hierarchy)
    exact = store.value_counts(
        stat_type, entity_id, d_attr, time_range.start, time_range.end
    )
    candidates = sorted(exact.items(), key=lambda item: (-item[1], item[0]))[:k_max]
    scored: list[tuple[str, NoisyAnswer]] = []
    suppressed = 0
    for d_val, _count in candidates:
        answer = compute_noisy_count(
            params, stat_type, entity_id, d_attr, d_val, time_range, store
        )
        if answer.suppressed:
            suppressed += 1
            continue
        scored.append((d_val, answer))
    scored.sort(key=lambda item: (-item[1].value, item[0]))
    return TopKResult(tuple(scored[:k]), suppressed, len(parts))


def top_k(
    params: PrivacyParams,
    stat_type: str,
    entity_id: str,
    d_attr: str,
    time_range: TimeRange,
    k: int,
    k_max: int,
    store: Store,
) -> list[tuple[str, NoisyAnswer]]:
    """The first k ranked (value, answer) pairs; see top_k_detailed."""
    return list(
        top_k_detailed(
            params, stat_type, entity_id, d_attr, time_range, k, k_max, store
        ).rows
    )


def privacy_loss_bound(dims: BudgetDims, epsilon: float) -> float:
    """Worst-case cumulative privacy loss for one member's events.

    One event contributes to at most n_attrs * n_time_levels * n_entity_levels
    distinct query tuples, each answered with an epsilon-differentially
    private mechanism, so sequential composition bounds the total loss by
    their product with epsilon.
    """
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    return dims.n_attrs * dims.n_time_levels * dims.n_entity_levels * epsilon
