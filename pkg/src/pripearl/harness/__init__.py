"""Synthetic data generation and privacy/utility experiments."""

from .metrics import ErrorStats, error_metrics, jaccard_distance
from .synthetic import SyntheticSpec, generate_synthetic, load_cells

__all__ = [
    "ErrorStats",
    "SyntheticSpec",
    "error_metrics",
    "generate_synthetic",
    "jaccard_distance",
    "load_cells",
]
