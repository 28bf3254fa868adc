"""Privacy-preserving analytics: deterministic noisy counts over time ranges."""

from .engine import (
    BudgetDims,
    NoisyAnswer,
    PrivacyParams,
    TopKResult,
    canonical_noisy_count,
    compute_noisy_count,
    privacy_loss_bound,
    top_k,
    top_k_detailed,
)
from .errors import (
    PripearlError,
    SnapshotError,
    UnknownEntityError,
    ValidationError,
)
from .noise import (
    CanonicalQuery,
    NoiseParams,
    canonical_key,
    laplace_inverse_cdf,
    pseudorand_frac,
    pseudorandom_laplace_noise,
    round_half_away_from_zero,
)
from .store import ActionEvent, AggregatedRow, IngestReport, Store
from .timegrid import (
    LEVEL_NAMES,
    AtomicTimeRange,
    TimeHierarchy,
    TimeRange,
    is_atomic,
    minimal_partition,
    truncate_to_completed,
)

__version__ = "0.1.0"

__all__ = [
    "ActionEvent",
    "AggregatedRow",
    "AtomicTimeRange",
    "BudgetDims",
    "CanonicalQuery",
    "IngestReport",
    "LEVEL_NAMES",
    "NoiseParams",
    "NoisyAnswer",
    "PripearlError",
    "PrivacyParams",
    "SnapshotError",
    "Store",
    "TimeHierarchy",
    "TimeRange",
    "TopKResult",
    "UnknownEntityError",
    "ValidationError",
    "canonical_key",
    "canonical_noisy_count",
    "compute_noisy_count",
    "is_atomic",
    "laplace_inverse_cdf",
    "minimal_partition",
    "privacy_loss_bound",
    "pseudorand_frac",
    "pseudorandom_laplace_noise",
    "round_half_away_from_zero",
    "top_k",
    "top_k_detailed",
    "truncate_to_completed",
]
