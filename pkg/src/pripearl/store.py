"""Aggregated event store and entity hierarchy.

Events are aggregated into cells keyed by (statType, entityId, dAttr, dVal,
epochStart), where epochStart is the event timestamp floored to the finest
hierarchy level. Entities form a forest; events may only be attributed to
leaves, and counts for an internal entity are resolved by summing over its
descendant leaves.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import SnapshotError, UnknownEntityError, ValidationError
from .timegrid import AtomicTimeRange, TimeHierarchy, parse_instant

#: Stat types accepted when a deployment does not configure its own set.
DEFAULT_STAT_TYPES = ("impression", "click", "conversion")

_RESERVED = "\x1f"

_MAGIC = b"PPRL1"

_CellKey = tuple[str, str, str, str]


@dataclass(frozen=True)
class ActionEvent:
    """One ingestion record: an action observed at a point in time."""

    timestamp: int
    stat_type: str
    entity_id: str
    d_attr: str
    d_val: str
    count: int = 1


@dataclass(frozen=True)
class AggregatedRow:
    """One stored cell: counts for a query tuple within one finest unit."""

    stat_type: str
    entity_id: str
    d_attr: str
    d_val: str
    epoch_start: int
    count: int


@dataclass(frozen=True)
class IngestReport:
    rows_read: int
    rows_rejected: int
    cells_written: int


def parse_event_line(line: str) -> ActionEvent:
    """Parse one NDJSON ingestion line.

    Expected fields: ts (ISO-8601 instant), stat, entity, attr, value, and an
    optional positive integer count (default 1). Raises ValidationError for
    anything malformed.
    """
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None
    if not isinstance(record, dict):
        raise ValidationError("event line must be a JSON object")
    try:
        ts_text = record["ts"]
        stat = record["stat"]
        entity = record["entity"]
        attr = record["attr"]
        value = record["value"]
    except KeyError as exc:
        raise ValidationError(f"missing field {exc.args[0]!r}") from None
    for name, field in (("stat", stat), ("entity", entity), ("attr", attr), ("value", value)):
        if not isinstance(field, str) or not field:
            raise ValidationError(f"field {name!r} must be a non-empty string")
        if _RESERVED in field:
            raise ValidationError(f"field {name!r} contains the reserved 0x1F byte")
    if not isinstance(ts_text, str):
        raise ValidationError("field 'ts' must be an ISO-8601 string")
    timestamp = parse_instant(ts_text)
    count = record.get("count", 1)
    if not isinstance(count, int) or isinstance(count, bool) or count < 1:
        raise ValidationError("field 'count' must be a positive integer")
    return ActionEvent(timestamp, stat, entity, attr, value, count)


class Store:
    """Mutable aggregate store bound to one time hierarchy and stat set."""

    def __init__(
        self,
        hierarchy: TimeHierarchy | None = None,
        stat_types: Iterable[str] = DEFAULT_STAT_TYPES,
    ) -> None:
        self.hierarchy = hierarchy if hierarchy is not None else TimeHierarchy()
        self.stat_types = frozenset(stat_types)
        if not self.stat_types:
            raise ValidationError("at least one stat type is required")
        # cell key -> {epoch_start -> count}
        self._cells: dict[_CellKey, dict[int, int]] = {}
        # (stat, entity, attr) -> set of values seen, for candidate enumeration
        self._group_values: dict[tuple[str, str, str], set[str]] = {}
        self._children: dict[str, list[str]] = {}
        self._parent: dict[str, str | None] = {}
        self._labels: dict[str, str] = {}

    # -- entity hierarchy ---------------------------------------------------

    def register_entity(
        self, entity_id: str, label: str = "", parent: str | None = None
    ) -> None:
        """Add one entity node. The parent, if given, must already exist."""
        if not entity_id or _RESERVED in entity_id:
            raise ValidationError("entity id must be non-empty without 0x1F bytes")
        if entity_id in self._parent:
            raise ValidationError(f"entity {entity_id!r} is already registered")
        if parent is not None:
            if parent not in self._parent:
                raise UnknownEntityError(f"parent entity {parent!r} is not registered")
            self._children[parent].append(entity_id)
        self._parent[entity_id] = parent
        self._children[entity_id] = []
        self._labels[entity_id] = label

    def load_forest(self, forest: list[dict]) -> None:
        """Register a JSON forest of {id, label, children} nodes."""

        def walk(node: dict, parent: str | None) -> None:
            if not isinstance(node, dict) or "id" not in node:
                raise ValidationError("forest nodes must be objects with an 'id'")
            self.register_entity(str(node["id"]), str(node.get("label", "")), parent)
            for child in node.get("children", []):
                walk(child, str(node["id"]))

        if not isinstance(forest, list):
            raise ValidationError("entity forest must be a JSON array of root nodes")
        for root in forest:
            walk(root, None)

    def load_forest_file(self, path: str) -> None:
        with open(path, "r", encoding="utf-8") as handle:
            self.load_forest(json.load(handle))

    def is_registered(self, entity_id: str) -> bool:
        return entity_id in self._parent

    def children_of(self, entity_id: str) -> frozenset[str]:
        """Direct children of a registered entity; unknown ids are an error."""
        try:
            return frozenset(self._children[entity_id])
        except KeyError:
            raise UnknownEntityError(f"unknown entity {entity_id!r}") from None

    def leaves_under(self, entity_id: str) -> tuple[str, ...]:
        """Descendant leaves of an entity, itself included when it is a leaf.

        Unregistered ids resolve to themselves so lookups degrade to zero
        counts instead of failing.
        """
        children = self._children.get(entity_id)
        if not children:
            return (entity_id,)
        leaves: list[str] = []
        stack = list(children)
        while stack:
            node = stack.pop()
            node_children = self._children.get(node)
            if node_children:
                stack.extend(node_children)
            else:
                leaves.append(node)
        return tuple(leaves)

    # -- ingestion ------------------------------------------------------------

    def _reject_reason(self, event: ActionEvent) -> str | None:
        if event.stat_type not in self.stat_types:
            return f"unknown stat type {event.stat_type!r}"
        if event.count < 1:
            return "count must be a positive integer"
        for field in (event.entity_id, event.d_attr, event.d_val):
            if not field or _RESERVED in field:
                return "fields must be non-empty without 0x1F bytes"
        if self._children.get(event.entity_id):
            return f"entity {event.entity_id!r} is not a leaf"
        return None

    def ingest(self, events: Iterable[ActionEvent]) -> IngestReport:
        """Aggregate events into cells.

        Events for unregistered entities register them as isolated leaves.
        Events for internal entities are rejected: counts belong to leaves
        and roll up through the hierarchy at query time.
        """
        finest = self.hierarchy.finest
        floor = self.hierarchy.floor
        read = rejected = 0
        touched: set[tuple[_CellKey, int]] = set()
        for event in events:
            read += 1
            if self._reject_reason(event) is not None:
                rejected += 1
                continue
            if event.entity_id not in self._parent:
                self.register_entity(event.entity_id)
            key = (event.stat_type, event.entity_id, event.d_attr, event.d_val)
            epoch = floor(finest, event.timestamp)
            by_epoch = self._cells.setdefault(key, {})
            by_epoch[epoch] = by_epoch.get(epoch, 0) + event.count
            self._group_values.setdefault(key[:3], set()).add(event.d_val)
            touched.add((key, epoch))
        return IngestReport(read, rejected, len(touched))

    def ingest_ndjson(self, lines: Iterable[str]) -> IngestReport:
        """Parse and aggregate NDJSON lines; malformed lines are counted and skipped."""
        read = rejected = 0
        events: list[ActionEvent] = []
        for line in lines:
            if not line.strip():
                continue
            read += 1
            try:
                events.append(parse_event_line(line))
            except ValidationError:
                rejected += 1
        inner = self.ingest(events)
        return IngestReport(read, rejected + inner.rows_rejected, inner.cells_written)

    def ingest_ndjson_file(self, path: str) -> IngestReport:
        with open(path, "r", encoding="utf-8") as handle:
            return self.ingest_ndjson(handle)

    # -- lookups --------------------------------------------------------------

    def true_count(
        self,
        stat_type: str,
        entity_id: str,
        d_attr: str,
        d_val: str,
        atomic_range: AtomicTimeRange,
    ) -> int:
        """Exact count for a query tuple over one atomic range.

        Sums matching cells with epoch_start in [start, end); zero when
        nothing matches. Unknown stat types are a validation error.
        """
        if stat_type not in self.stat_types:
            raise ValidationError(f"unknown stat type {stat_type!r}")
        start = atomic_range.range.start
        end = atomic_range.range.end
        total = 0
        for leaf in self.leaves_under(entity_id):
            by_epoch = self._cells.get((stat_type, leaf, d_attr, d_val))
            if not by_epoch:
                continue
            for epoch, count in by_epoch.items():
                if start <= epoch < end:
                    total += count
        return total

    def value_counts(
        self, stat_type: str, entity_id: str, d_attr: str, start: int, end: int
    ) -> dict[str, int]:
        """Exact per-value counts for (stat, entity, attr) over [start, end)."""
        if stat_type not in self.stat_types:
            raise ValidationError(f"unknown stat type {stat_type!r}")
        totals: dict[str, int] = {}
        for leaf in self.leaves_under(entity_id):
            for value in self._group_values.get((stat_type, leaf, d_attr), ()):
                by_epoch = self._cells.get((stat_type, leaf, d_attr, value))
                if not by_epoch:
                    continue
                subtotal = sum(
                    count for epoch, count in by_epoch.items() if start <= epoch < end
                )
                if subtotal:
                    totals[value] = totals.get(value, 0) + subtotal
        return totals

    def iter_cells(self) -> Iterator[AggregatedRow]:
        """All cells in deterministic (key, epoch) order."""
        for key in sorted(self._cells):
            stat, entity, attr, value = key
            by_epoch = self._cells[key]
            for epoch in sorted(by_epoch):
                yield AggregatedRow(stat, entity, attr, value, epoch, by_epoch[epoch])

    @property
    def cell_count(self) -> int:
        return sum(len(by_epoch) for by_epoch in self._cells.values())

    def copy(self) -> "Store":
        """Independent deep copy; used to stage ingests before publishing."""
        twin = Store(self.hierarchy, self.stat_types)
        twin._cells = {key: dict(by_epoch) for key, by_epoch in self._cells.items()}
        twin._group_values = {key: set(vals) for key, vals in self._group_values.items()}
        twin._children = {key: list(vals) for key, vals in self._children.items()}
        twin._parent = dict(self._parent)
        twin._labels = dict(self._labels)
        return twin

    # -- snapshots --------------------------------------------------------------
    #
    # Binary layout, all integers big-endian, strings as u32 length + UTF-8:
    #   magic "PPRL1"
    #   u32 entity count, then per entity (sorted by id): id, label, parent
    #     (empty parent string means root)
    #   u64 cell count, then per cell (sorted): stat, entity, attr, value,
    #     u64 epoch_start, u64 count

    def snapshot_save(self, path: str) -> None:
        """Write the store to ``path`` atomically (temp file + rename)."""
        chunks: list[bytes] = [_MAGIC, struct.pack(">I", len(self._parent))]
        for entity_id in sorted(self._parent):
            chunks.append(_pack_str(entity_id))
            chunks.append(_pack_str(self._labels.get(entity_id, "")))
            chunks.append(_pack_str(self._parent[entity_id] or ""))
        chunks.append(struct.pack(">Q", self.cell_count))
        for row in self.iter_cells():
            chunks.append(_pack_str(row.stat_type))
            chunks.append(_pack_str(row.entity_id))
            chunks.append(_pack_str(row.d_attr))
            chunks.append(_pack_str(row.d_val))
            chunks.append(struct.pack(">QQ", row.epoch_start, row.count))
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        fd, temp_path = tempfile.mkstemp(dir=directory, prefix=".pprl-snapshot-")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(b"".join(chunks))
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(temp_path, path)
        except BaseException:
            if os.path.exists(temp_path):
                os.unlink(temp_path)
            raise

    @classmethod
    def snapshot_load(
        cls,
        path: str,
        hierarchy: TimeHierarchy | None = None,
        stat_types: Iterable[str] = DEFAULT_STAT_TYPES,
    ) -> "Store":
        """Read a snapshot written by snapshot_save.

        Corrupt or truncated files raise SnapshotError naming the byte offset
        where reading failed; no partially loaded store is ever returned.
        """
        try:
            with open(path, "rb") as handle:
                data = handle.read()
        except OSError as exc:
            raise SnapshotError(f"cannot read snapshot {path!r}: {exc}") from None
        reader = _SnapshotReader(data)
        magic = reader.take(len(_MAGIC), "magic header")
        if magic != _MAGIC:
            raise SnapshotError(
                f"bad magic {magic!r} at offset 0; expected {_MAGIC!r}"
            )
        store = cls(hierarchy, stat_types)
        entity_count = reader.u32("entity count")
        nodes: list[tuple[str, str, str]] = []
        for index in range(entity_count):
            entity_id = reader.string(f"entity[{index}].id")
            label = reader.string(f"entity[{index}].label")
            parent = reader.string(f"entity[{index}].parent")
            nodes.append((entity_id, label, parent))
        for entity_id, label, _parent in nodes:
            try:
                store.register_entity(entity_id, label)
            except ValidationError as exc:
                raise SnapshotError(f"invalid entity table: {exc}") from None
        for entity_id, _label, parent in nodes:
            if not parent:
                continue
            if parent not in store._parent:
                raise SnapshotError(
                    f"entity {entity_id!r} references missing parent {parent!r}"
                )
            store._parent[entity_id] = parent
            store._children[parent].append(entity_id)
        _check_acyclic(store._parent)
        cell_count = reader.u64("cell count")
        finest = store.hierarchy.finest
        for index in range(cell_count):
            stat = reader.string(f"cell[{index}].stat")
            entity = reader.string(f"cell[{index}].entity")
            attr = reader.string(f"cell[{index}].attr")
            value = reader.string(f"cell[{index}].value")
            epoch, count = struct.unpack(
                ">QQ", reader.take(16, f"cell[{index}].numbers")
            )
            if stat not in store.stat_types:
                raise SnapshotError(f"cell[{index}] has unknown stat type {stat!r}")
            if store.hierarchy.floor(finest, epoch) != epoch:
                raise SnapshotError(
                    f"cell[{index}] epoch {epoch} is not aligned to {finest}"
                )
            key = (stat, entity, attr, value)
            by_epoch = store._cells.setdefault(key, {})
            if epoch in by_epoch:
                raise SnapshotError(f"cell[{index}] duplicates an earlier cell")
            by_epoch[epoch] = count
            store._group_values.setdefault(key[:3], set()).add(value)
            if entity not in store._parent:
                store.register_entity(entity)
        if reader.offset != len(data):
            raise SnapshotError(
                f"{len(data) - reader.offset} trailing bytes at offset {reader.offset}"
            )
        return store


class _SnapshotReader:
    """Byte cursor that reports the failing offset on truncation."""

    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.data):
            raise SnapshotError(
                f"truncated snapshot: needed {size} bytes for {what} "
                f"at offset {self.offset}, file has {len(self.data)}"
            )
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def u32(self, what: str) -> int:
        return struct.unpack(">I", self.take(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack(">Q", self.take(8, what))[0]

    def string(self, what: str) -> str:
        length = self.u32(f"{what} length")
        start = self.offset
        raw = self.take(length, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError:
            raise SnapshotError(f"invalid UTF-8 in {what} at offset {start}") from None


def _pack_str(text: str) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack(">I", len(raw)) + raw


def _check_acyclic(parent: dict[str, str | None]) -> None:
    cleared: set[str] = set()
    for node in parent:
        trail: set[str] = set()
        cursor: str | None = node
        while cursor is not None and cursor not in cleared:
            if cursor in trail:
                raise SnapshotError(f"entity hierarchy contains a cycle at {cursor!r}")
            trail.add(cursor)
            cursor = parent.get(cursor)
        cleared.update(trail)
