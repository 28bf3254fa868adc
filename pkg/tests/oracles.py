"""Independent reference implementations for pinning expected values.

Everything here is deliberately written against the raw definitions
(datetime calendar math, dynamic-programming search, a second HMAC library)
rather than reusing package internals, so agreement is meaningful.
"""

from __future__ import annotations

import datetime as dt
import math

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives import hmac as crypto_hmac

UTC = dt.timezone.utc

EPOCH_SECONDS = 3 * 3600
DAY_SECONDS = 24 * 3600

LEVELS = ("epoch3h", "day", "month", "quarter", "year")


# -- calendar ----------------------------------------------------------------


def _moment(ts: int) -> dt.datetime:
    return dt.datetime.fromtimestamp(ts, tz=UTC)


def is_level_boundary(ts: int, level: str) -> bool:
    m = _moment(ts)
    if m.second or m.minute or m.microsecond:
        return False
    if level == "epoch3h":
        return m.hour % 3 == 0
    if m.hour:
        return False
    if level == "day":
        return True
    if m.day != 1:
        return False
    if level == "month":
        return True
    if level == "quarter":
        return m.month in (1, 4, 7, 10)
    if level == "year":
        return m.month == 1
    raise ValueError(level)


def prev_boundary(ts: int, level: str) -> int:
    """Start of the unit of ``level`` that ends exactly at boundary ``ts``."""
    m = _moment(ts)
    if level == "epoch3h":
        return ts - EPOCH_SECONDS
    if level == "day":
        return ts - DAY_SECONDS
    if level == "month":
        back = m.replace(day=1) - dt.timedelta(days=1)
        return int(back.replace(day=1).timestamp())
    if level == "quarter":
        month = m.month - 3
        if month < 1:
            return int(m.replace(year=m.year - 1, month=month + 12).timestamp())
        return int(m.replace(month=month).timestamp())
    if level == "year":
        return int(m.replace(year=m.year - 1).timestamp())
    raise ValueError(level)


def dp_min_partition_size(start_ts: int, end_ts: int, levels=LEVELS) -> int:
    """Fewest atomic units covering [start, end), by exhaustive DP.

    Boundaries are walked on the 3-hour grid, which both endpoints must
    sit on.
    """
    assert (end_ts - start_ts) % EPOCH_SECONDS == 0 and start_ts < end_ts
    n = (end_ts - start_ts) // EPOCH_SECONDS
    infinity = n + 10
    best = [infinity] * (n + 1)
    best[0] = 0
    for j in range(1, n + 1):
        ts_j = start_ts + j * EPOCH_SECONDS
        for level in levels:
            if not is_level_boundary(ts_j, level):
                continue
            k_ts = prev_boundary(ts_j, level)
            if k_ts < start_ts or (k_ts - start_ts) % EPOCH_SECONDS:
                continue
            k = (k_ts - start_ts) // EPOCH_SECONDS
            if best[k] + 1 < best[j]:
                best[j] = best[k] + 1
    return best[n]


def dp_min_sizes_from(
    window_start: int, start_index: int, n_epochs: int, level_tables
) -> list[int]:
    """DP row: minimal sizes from one start index to every later boundary.

    ``level_tables`` comes from build_level_tables; entry [j] of the result is
    the minimum number of atomic units covering boundaries start_index..j,
    or a value > n_epochs when j <= start_index.
    """
    is_bound, prev_index = level_tables
    infinity = n_epochs + 10
    best = [infinity] * (n_epochs + 1)
    best[start_index] = 0
    for j in range(start_index + 1, n_epochs + 1):
        candidate = infinity
        for level_pos in range(len(LEVELS)):
            if not is_bound[level_pos][j]:
                continue
            k = prev_index[level_pos][j]
            if k >= start_index and best[k] + 1 < candidate:
                candidate = best[k] + 1
        best[j] = candidate
    return best


def build_level_tables(window_start: int, n_epochs: int):
    """Precompute boundary flags and previous-boundary indexes per level."""
    is_bound = []
    prev_index = []
    for level in LEVELS:
        flags = []
        prevs = []
        last_seen = -1
        for i in range(n_epochs + 1):
            ts = window_start + i * EPOCH_SECONDS
            if is_level_boundary(ts, level):
                flags.append(True)
                prevs.append(last_seen)
                last_seen = i
            else:
                flags.append(False)
                prevs.append(-1)
        is_bound.append(flags)
        prev_index.append(prevs)
    return is_bound, prev_index


# -- noise pipeline ----------------------------------------------------------


def hmac_sha256(secret: bytes, message: bytes) -> bytes:
    mac = crypto_hmac.HMAC(secret, hashes.SHA256())
    mac.update(message)
    return mac.finalize()


def unit_fraction(secret: bytes, message: bytes) -> float:
    word = int.from_bytes(hmac_sha256(secret, message)[:8], "big")
    return (word + 0.5) / 2.0**64


def laplace_icdf(p: float, epsilon: float) -> float:
    centered = p - 0.5
    if centered == 0.0:
        return 0.0
    sign = 1.0 if centered > 0 else -1.0
    return -(1.0 / epsilon) * sign * math.log(1.0 - 2.0 * abs(centered))


def round_half_away(x: float) -> int:
    return math.floor(x + 0.5) if x >= 0 else math.ceil(x - 0.5)


def canonical_key_bytes(
    stat: str, entity: str, attr: str, value: str, start: int, end: int
) -> bytes:
    return "\x1f".join((stat, entity, attr, value, str(start), str(end))).encode("utf-8")


def noise_for(
    secret: bytes, epsilon: float, stat: str, entity: str, attr: str, value: str,
    start: int, end: int,
) -> int:
    p = unit_fraction(secret, canonical_key_bytes(stat, entity, attr, value, start, end))
    return round_half_away(laplace_icdf(p, epsilon))


# -- flat end-to-end answer oracle --------------------------------------------


def count_events(
    events: list[dict], stat: str, entity: str, attr: str, value: str,
    start_ts: int, end_ts: int,
) -> int:
    """Linear scan over parsed event records (ts already in POSIX seconds)."""
    total = 0
    for event in events:
        if (
            event["stat"] == stat
            and event["entity"] == entity
            and event["attr"] == attr
            and event["value"] == value
            and start_ts <= event["ts"] < end_ts
        ):
            total += event.get("count", 1)
    return total


def flat_noisy_answer(
    events: list[dict], secret: bytes, epsilon: float, tau: int,
    stat: str, entity: str, attr: str, value: str, start_ts: int, end_ts: int,
) -> int:
    """Service answer recomputed from scratch: scan, noise, clamp, sum, threshold.

    The partition rule (coarsest unit that fits at each cursor) is restated
    here on top of this module's own calendar math rather than imported.
    """
    parts: list[tuple[int, int]] = []
    cursor = start_ts
    while cursor < end_ts:
        chosen = None
        for level in reversed(LEVELS):
            if not is_level_boundary(cursor, level):
                continue
            nxt = _next_boundary(cursor, level)
            if nxt <= end_ts:
                chosen = nxt
                break
        assert chosen is not None
        parts.append((cursor, chosen))
        cursor = chosen
    total = 0
    for part_start, part_end in parts:
        true_count = count_events(events, stat, entity, attr, value, part_start, part_end)
        noisy = true_count + noise_for(
            secret, epsilon, stat, entity, attr, value, part_start, part_end
        )
        total += max(noisy, 0)
    return total if total >= tau else 0


def _next_boundary(ts: int, level: str) -> int:
    m = _moment(ts)
    if level == "epoch3h":
        return ts + EPOCH_SECONDS
    if level == "day":
        return ts + DAY_SECONDS
    if level == "month":
        if m.month == 12:
            return int(m.replace(year=m.year + 1, month=1).timestamp())
        return int(m.replace(month=m.month + 1).timestamp())
    if level == "quarter":
        month = m.month + 3
        if month > 12:
            return int(m.replace(year=m.year + 1, month=month - 12).timestamp())
        return int(m.replace(month=month).timestamp())
    if level == "year":
        return int(m.replace(year=m.year + 1).timestamp())
    raise ValueError(level)
