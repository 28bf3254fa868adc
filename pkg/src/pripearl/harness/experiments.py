"""Utility experiments over a synthetic workload.

Three experiments, each writing one UTF-8 CSV with a header row. Outputs are
byte-reproducible for a fixed workload and secret: the noise is deterministic,
so reruns produce identical files.

epsilon-sweep   error metrics per epsilon, no suppression
threshold-sweep error metrics per (epsilon, threshold)
topn            mean Jaccard distance between exact and noisy top-n sets
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

from .. import engine
from ..engine import PrivacyParams
from ..errors import ValidationError
from ..noise import NoiseParams
from ..store import Store
from ..timegrid import TimeHierarchy, TimeRange
from .metrics import error_metrics, jaccard_distance
from .synthetic import SyntheticCell, load_cells

EPSILON_GRID = (0.1, 0.3, 0.5, 1.0, 2.0, 3.0, 5.0)
THRESHOLD_EPSILONS = (0.1, 0.5, 1.0)
TOPN_EPSILONS = (0.1, 0.5, 1.0, 3.0)
TOPN_MAX = 10

#: Ranking experiments only use value groups strictly larger than this.
MIN_TOPN_GROUP = 10

EXPERIMENT_NAMES = ("epsilon-sweep", "threshold-sweep", "topn")

_DAY_SECONDS = 24 * 3600


@dataclass(frozen=True)
class HarnessConfig:
    """Inputs shared by every experiment."""

    events_path: str
    cells_path: str
    out_dir: str
    secret: bytes
    epsilons: tuple[float, ...] | None = None
    tau_max: int = 10
    hierarchy: TimeHierarchy = TimeHierarchy()


def build_store(config: HarnessConfig) -> Store:
    store = Store(config.hierarchy)
    store.ingest_ndjson_file(config.events_path)
    return store


def _day_range(cell: SyntheticCell, hierarchy: TimeHierarchy) -> TimeRange:
    day = hierarchy.floor("day", cell.epoch_start)
    return TimeRange(day, day + _DAY_SECONDS)


def _params(config: HarnessConfig, epsilon: float, tau: int = 0) -> PrivacyParams:
    return PrivacyParams(
        noise=NoiseParams(config.secret, epsilon),
        suppression_threshold=tau,
        hierarchy=config.hierarchy,
    )


def _noisy_values(
    config: HarnessConfig,
    epsilon: float,
    cells: Sequence[SyntheticCell],
    store: Store,
) -> list[int]:
    params = _params(config, epsilon)
    return [
        engine.compute_noisy_count(
            params,
            cell.stat_type,
            cell.entity_id,
            cell.d_attr,
            cell.d_val,
            _day_range(cell, config.hierarchy),
            store,
        ).value
        for cell in cells
    ]


def _write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)


def _run_epsilon_sweep(config: HarnessConfig) -> str:
    cells = load_cells(config.cells_path)
    store = build_store(config)
    true_counts = [cell.count for cell in cells]
    rows = []
    for epsilon in config.epsilons or EPSILON_GRID:
        stats = error_metrics(true_counts, _noisy_values(config, epsilon, cells, store))
        rows.append(
            (
                f"{epsilon:g}",
                f"{stats.mean_abs:.6f}",
                f"{stats.mean_signed:.6f}",
                f"{stats.frac_within_two:.6f}",
            )
        )
    path = os.path.join(config.out_dir, "epsilon_sweep.csv")
    _write_csv(path, ("epsilon", "meanAbs", "meanSigned", "fracWithinTwo"), rows)
    return path


def _run_threshold_sweep(config: HarnessConfig) -> str:
    cells = load_cells(config.cells_path)
    store = build_store(config)
    true_counts = [cell.count for cell in cells]
    rows = []
    for epsilon in config.epsilons or THRESHOLD_EPSILONS:
        # The pre-threshold sum does not depend on tau, so compute it once
        # and apply each threshold as the final reporting step.
        raw = _noisy_values(config, epsilon, cells, store)
        for tau in range(config.tau_max + 1):
            thresholded = [v if v >= tau else 0 for v in raw]
            stats = error_metrics(true_counts, thresholded)
            rows.append(
                (
                    f"{epsilon:g}",
                    str(tau),
                    f"{stats.mean_abs:.6f}",
                    f"{stats.mean_signed:.6f}",
                )
            )
    path = os.path.join(config.out_dir, "threshold_sweep.csv")
    _write_csv(path, ("epsilon", "tau", "meanAbs", "meanSigned"), rows)
    return path


def group_cells(
    cells: Sequence[SyntheticCell],
) -> dict[tuple[str, str, str], list[SyntheticCell]]:
    groups: dict[tuple[str, str, str], list[SyntheticCell]] = {}
    for cell in cells:
        groups.setdefault((cell.stat_type, cell.entity_id, cell.d_attr), []).append(cell)
    return groups


def _group_range(group: Sequence[SyntheticCell], hierarchy: TimeHierarchy) -> TimeRange:
    first_day = min(hierarchy.floor("day", cell.epoch_start) for cell in group)
    last_day = max(hierarchy.floor("day", cell.epoch_start) for cell in group)
    return TimeRange(first_day, last_day + _DAY_SECONDS)


def _run_topn(config: HarnessConfig) -> str:
    cells = load_cells(config.cells_path)
    store = build_store(config)
    groups = [
        (key, group)
        for key, group in sorted(group_cells(cells).items())
        if len(group) > MIN_TOPN_GROUP
    ]
    if not groups:
        raise ValidationError(
            f"no value group exceeds {MIN_TOPN_GROUP} values; generate a larger workload"
        )
    rows = []
    for epsilon in config.epsilons or TOPN_EPSILONS:
        params = _params(config, epsilon)
        distance_sums = [0.0] * (TOPN_MAX + 1)
        for (stat, entity, attr), group in groups:
            time_range = _group_range(group, config.hierarchy)
            exact_order = [
                cell.d_val
                for cell in sorted(group, key=lambda c: (-c.count, c.d_val))
            ]
            ranked = engine.top_k(
                params, stat, entity, attr, time_range, TOPN_MAX, len(group), store
            )
            noisy_order = [value for value, _answer in ranked]
            for n in range(1, TOPN_MAX + 1):
                distance_sums[n] += jaccard_distance(
                    set(exact_order[:n]), set(noisy_order[:n])
                )
        for n in range(1, TOPN_MAX + 1):
            rows.append((f"{epsilon:g}", str(n), f"{distance_sums[n] / len(groups):.6f}"))
    path = os.path.join(config.out_dir, "topn.csv")
    _write_csv(path, ("epsilon", "n", "meanJaccard"), rows)
    return path


def run_experiment(name: str, config: HarnessConfig) -> str:
    """Run one named experiment; returns the path of the CSV it wrote."""
    runners = {
        "epsilon-sweep": _run_epsilon_sweep,
        "threshold-sweep": _run_threshold_sweep,
        "topn": _run_topn,
    }
    if name not in runners:
        raise ValidationError(
            f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENT_NAMES)}"
        )
    os.makedirs(config.out_dir, exist_ok=True)
    return runners[name](config)
