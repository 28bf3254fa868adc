"""Reproducible synthetic workloads.

Generates per-cell exact counts drawn from a geometric distribution (support
starting at 1, so every generated cell is non-empty) and writes both an
NDJSON events file in the store's ingestion format and a companion NDJSON
file of the exact per-cell counts for error measurement.
"""

from __future__ import annotations

import json
import math
import os
import random
from dataclasses import dataclass, field
from typing import Mapping

from ..errors import ValidationError
from ..timegrid import format_instant, parse_instant

_DAY_SECONDS = 24 * 3600
_EPOCH_SECONDS = 3 * 3600
_EPOCHS_PER_DAY = _DAY_SECONDS // _EPOCH_SECONDS

#: Attribute vocabulary sizes; seniority stays small on purpose so rankings
#: over it exercise the fewer-values-than-k path.
DEFAULT_CARDINALITIES: dict[str, int] = {
    "title": 40,
    "company": 60,
    "function": 25,
    "seniority": 8,
}


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of one generated workload."""

    num_queries: int = 100_000
    geometric_q: float = 0.3
    seed: int = 7
    attr_cardinalities: Mapping[str, int] = field(
        default_factory=lambda: dict(DEFAULT_CARDINALITIES)
    )
    stat_types: tuple[str, ...] = ("impression", "click")
    base_day: str = "2018-06-01"
    days: int = 1

    def __post_init__(self) -> None:
        if self.num_queries < 1:
            raise ValidationError("num_queries must be at least 1")
        if not 0.0 < self.geometric_q < 1.0:
            raise ValidationError("geometric_q must lie strictly between 0 and 1")
        if self.days < 1:
            raise ValidationError("days must be at least 1")
        if not self.attr_cardinalities:
            raise ValidationError("at least one attribute is required")
        for attr, cardinality in self.attr_cardinalities.items():
            if cardinality < 1:
                raise ValidationError(f"attribute {attr!r} needs a positive cardinality")


@dataclass(frozen=True)
class SyntheticCell:
    """One generated cell: a query tuple with its exact count."""

    stat_type: str
    entity_id: str
    d_attr: str
    d_val: str
    epoch_start: int
    count: int


@dataclass(frozen=True)
class SyntheticData:
    events_path: str
    cells_path: str
    num_cells: int


def geometric(rng: random.Random, q: float) -> int:
    """Geometric draw on {1, 2, ...} with success probability q."""
    # Inverse CDF: P(X <= k) = 1 - (1-q)^k.
    u = rng.random()
    return math.floor(math.log(1.0 - u) / math.log(1.0 - q)) + 1


def generate_cells(spec: SyntheticSpec) -> list[SyntheticCell]:
    """Deterministically enumerate num_queries distinct cells."""
    rng = random.Random(spec.seed)
    base_ts = parse_instant(f"{spec.base_day}T00:00:00Z")
    cells: list[SyntheticCell] = []
    entity_index = 0
    while len(cells) < spec.num_queries:
        entity = f"e{entity_index:05d}"
        for attr, cardinality in spec.attr_cardinalities.items():
            for value_index in range(cardinality):
                if len(cells) >= spec.num_queries:
                    break
                stat = spec.stat_types[len(cells) % len(spec.stat_types)]
                offset = rng.randrange(spec.days) * _DAY_SECONDS
                offset += rng.randrange(_EPOCHS_PER_DAY) * _EPOCH_SECONDS
                count = geometric(rng, spec.geometric_q)
                cells.append(
                    SyntheticCell(
                        stat, entity, attr, f"v{value_index:04d}", base_ts + offset, count
                    )
                )
        entity_index += 1
    return cells


def generate_synthetic(spec: SyntheticSpec, out_dir: str) -> SyntheticData:
    """Write events.ndjson and cells.ndjson under out_dir.

    Byte-for-byte reproducible for a given spec: same seed, same files.
    """
    cells = generate_cells(spec)
    os.makedirs(out_dir, exist_ok=True)
    events_path = os.path.join(out_dir, "events.ndjson")
    cells_path = os.path.join(out_dir, "cells.ndjson")
    with open(events_path, "w", encoding="utf-8", newline="\n") as events:
        for cell in cells:
            record = {
                "ts": format_instant(cell.epoch_start),
                "stat": cell.stat_type,
                "entity": cell.entity_id,
                "attr": cell.d_attr,
                "value": cell.d_val,
                "count": cell.count,
            }
            events.write(json.dumps(record, separators=(",", ":")) + "\n")
    with open(cells_path, "w", encoding="utf-8", newline="\n") as handle:
        for cell in cells:
            record = {
                "stat": cell.stat_type,
                "entity": cell.entity_id,
                "attr": cell.d_attr,
                "value": cell.d_val,
                "epochStart": cell.epoch_start,
                "count": cell.count,
            }
            handle.write(json.dumps(record, separators=(",", ":")) + "\n")
    return SyntheticData(events_path, cells_path, len(cells))


def load_cells(path: str) -> list[SyntheticCell]:
    """Read a cells.ndjson companion file back into memory."""
    cells: list[SyntheticCell] = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            record = json.loads(line)
            cells.append(
                SyntheticCell(
                    record["stat"],
                    record["entity"],
                    record["attr"],
                    record["value"],
                    int(record["epochStart"]),
                    int(record["count"]),
                )
            )
    return cells
