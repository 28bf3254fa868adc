"""Calendar time levels and decomposition of ranges into atomic units.

All instants are UTC POSIX seconds. Boundaries follow the Gregorian calendar
in UTC: 3-hour epochs start at 00:00, days at midnight, quarters at
January/April/July/October 1st. There is no DST anywhere in this module.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from functools import lru_cache

from .errors import ValidationError

_UTC = dt.timezone.utc

EPOCH3H = "epoch3h"
DAY = "day"
MONTH = "month"
QUARTER = "quarter"
YEAR = "year"

#: Every level this module knows about, ordered finest to coarsest.
LEVEL_NAMES = (EPOCH3H, DAY, MONTH, QUARTER, YEAR)

_EPOCH3H_SECONDS = 3 * 3600
_DAY_SECONDS = 24 * 3600

# Calendar cache size: a long-lived service sees a bounded set of boundary
# instants, but the values arrive from requests, so the caches stay bounded.
_CACHE = 1 << 16


def _from_ts(ts: int) -> dt.datetime:
    return dt.datetime.fromtimestamp(ts, tz=_UTC)


def _to_ts(moment: dt.datetime) -> int:
    return int(moment.timestamp())


def parse_instant(text: str) -> int:
    """Parse an ISO-8601 instant to UTC POSIX seconds.

    Accepts a trailing ``Z`` or an explicit offset; a naive value is read
    as UTC. Raises ValidationError on anything ``datetime`` cannot parse.
    """
    try:
        moment = dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
    except (ValueError, AttributeError, TypeError):
        raise ValidationError(f"not an ISO-8601 instant: {text!r}") from None
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=_UTC)
    return _to_ts(moment)


def format_instant(ts: int) -> str:
    """Render UTC POSIX seconds as an ISO-8601 instant with a Z suffix."""
    return _from_ts(ts).strftime("%Y-%m-%dT%H:%M:%SZ")


def _floor_epoch3h(ts: int) -> int:
    return ts - ts % _EPOCH3H_SECONDS


def _floor_day(ts: int) -> int:
    return ts - ts % _DAY_SECONDS


@lru_cache(maxsize=_CACHE)
def _floor_month(ts: int) -> int:
    moment = _from_ts(ts)
    return _to_ts(moment.replace(day=1, hour=0, minute=0, second=0, microsecond=0))


@lru_cache(maxsize=_CACHE)
def _floor_quarter(ts: int) -> int:
    moment = _from_ts(ts)
    first = moment.month - (moment.month - 1) % 3
    return _to_ts(
        moment.replace(month=first, day=1, hour=0, minute=0, second=0, microsecond=0)
    )


@lru_cache(maxsize=_CACHE)
def _floor_year(ts: int) -> int:
    moment = _from_ts(ts)
    return _to_ts(
        moment.replace(month=1, day=1, hour=0, minute=0, second=0, microsecond=0)
    )


def _end_epoch3h(ts: int) -> int:
    return ts + _EPOCH3H_SECONDS


def _end_day(ts: int) -> int:
    return ts + _DAY_SECONDS


@lru_cache(maxsize=_CACHE)
def _end_month(ts: int) -> int:
    moment = _from_ts(ts)
    if moment.month == 12:
        return _to_ts(moment.replace(year=moment.year + 1, month=1))
    return _to_ts(moment.replace(month=moment.month + 1))


@lru_cache(maxsize=_CACHE)
def _end_quarter(ts: int) -> int:
    moment = _from_ts(ts)
    month = moment.month + 3
    if month > 12:
        return _to_ts(moment.replace(year=moment.year + 1, month=month - 12))
    return _to_ts(moment.replace(month=month))


@lru_cache(maxsize=_CACHE)
def _end_year(ts: int) -> int:
    moment = _from_ts(ts)
    return _to_ts(moment.replace(year=moment.year + 1))


_FLOORS = {
    EPOCH3H: _floor_epoch3h,
    DAY: _floor_day,
    MONTH: _floor_month,
    QUARTER: _floor_quarter,
    YEAR: _floor_year,
}

_UNIT_ENDS = {
    EPOCH3H: _end_epoch3h,
    DAY: _end_day,
    MONTH: _end_month,
    QUARTER: _end_quarter,
    YEAR: _end_year,
}


@dataclass(frozen=True)
class TimeRange:
    """Half-open interval [start, end) of UTC POSIX seconds."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValidationError(
                f"range start {self.start} must precede end {self.end}"
            )


@dataclass(frozen=True)
class AtomicTimeRange:
    """A range spanning exactly one unit of one hierarchy level.

    ``level`` is an index into the owning hierarchy's ``levels`` tuple.
    """

    range: TimeRange
    level: int

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValidationError("level index must be non-negative")


@dataclass(frozen=True)
class TimeHierarchy:
    """Ordered ladder of calendar levels, finest first.

    Levels must be drawn from LEVEL_NAMES, be distinct, and keep the
    finest-to-coarsest order of that vocabulary.
    """

    levels: tuple[str, ...] = LEVEL_NAMES

    def __post_init__(self) -> None:
        levels = tuple(self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels:
            raise ValidationError("time hierarchy needs at least one level")
        unknown = [name for name in levels if name not in LEVEL_NAMES]
        if unknown:
            raise ValidationError(
                f"unknown hierarchy levels {unknown}; valid names: {list(LEVEL_NAMES)}"
            )
        ranks = [LEVEL_NAMES.index(name) for name in levels]
        if len(set(ranks)) != len(ranks) or ranks != sorted(ranks):
            raise ValidationError(
                "hierarchy levels must be distinct and ordered finest to coarsest"
            )

    @property
    def finest(self) -> str:
        return self.levels[0]

    def floor(self, level: str, ts: int) -> int:
        """Largest boundary of ``level`` that is <= ts."""
        return _FLOORS[level](ts)

    def unit_end(self, level: str, ts: int) -> int:
        """End of the unit of ``level`` that starts at boundary ``ts``."""
        return _UNIT_ENDS[level](ts)

    def is_boundary(self, level: str, ts: int) -> bool:
        return _FLOORS[level](ts) == ts

    def check_aligned(self, time_range: TimeRange) -> None:
        """Raise ValidationError unless both endpoints sit on finest boundaries."""
        finest = self.finest
        for name, ts in (("start", time_range.start), ("end", time_range.end)):
            if _FLOORS[finest](ts) != ts:
                raise ValidationError(
                    f"{name} {format_instant(ts)} is not aligned to a {finest} boundary"
                )


def is_atomic(time_range: TimeRange, hierarchy: TimeHierarchy) -> int | None:
    """Index of the coarsest level the range spans exactly, or None.

    Both endpoints must be aligned to the hierarchy's finest level.
    """
    hierarchy.check_aligned(time_range)
    for index in range(len(hierarchy.levels) - 1, -1, -1):
        level = hierarchy.levels[index]
        if (
            hierarchy.floor(level, time_range.start) == time_range.start
            and hierarchy.unit_end(level, time_range.start) == time_range.end
        ):
            return index
    return None


def minimal_partition(
    time_range: TimeRange, hierarchy: TimeHierarchy
) -> list[AtomicTimeRange]:
    """Cut an aligned range into the fewest contiguous atomic ranges.

    Walks left to right, always taking the coarsest unit that starts at the
    cursor and still fits inside the range. The result is contiguous, covers
    the range exactly, and is deterministic for a given hierarchy.
    """
    hierarchy.check_aligned(time_range)
    levels = hierarchy.levels
    parts: list[AtomicTimeRange] = []
    cursor = time_range.start
    while cursor < time_range.end:
        for index in range(len(levels) - 1, -1, -1):
            level = levels[index]
            if _FLOORS[level](cursor) != cursor:
                continue
            unit_end = _UNIT_ENDS[level](cursor)
            if unit_end <= time_range.end:
                parts.append(AtomicTimeRange(TimeRange(cursor, unit_end), index))
                cursor = unit_end
                break
        else:  # pragma: no cover - cursor stays finest-aligned, so finest always fits
            raise AssertionError(f"no atomic unit fits at {cursor}")
    return parts


def truncate_to_completed(
    time_range: TimeRange, now: int, hierarchy: TimeHierarchy
) -> TimeRange | None:
    """Clip the range to fully completed finest units as of ``now``.

    The end is lowered to the latest finest boundary <= now when it exceeds
    that boundary. Returns None when nothing of the range has completed;
    callers are expected to report a zero count for that case.
    """
    hierarchy.check_aligned(time_range)
    boundary = hierarchy.floor(hierarchy.finest, now)
    end = min(time_range.end, boundary)
    if end <= time_range.start:
        return None
    return TimeRange(time_range.start, end)


def completed_end(time_range: TimeRange, now: int, hierarchy: TimeHierarchy) -> int:
    """The end instant actually served after completed-unit truncation."""
    return min(time_range.end, hierarchy.floor(hierarchy.finest, now))
