"""Deterministic pseudorandom Laplace noise keyed by query identity.

The same (secret, query) pair always yields the same integer noise, so
repeated queries cannot be averaged to wash the noise out. The fraction is
derived from HMAC-SHA256 over a canonical encoding of the query, then pushed
through the inverse CDF of the Laplace distribution with scale 1/epsilon
(L1 sensitivity of a count query is 1).
"""

from __future__ import annotations

import hashlib
import hmac
import math
from dataclasses import dataclass

from .errors import ValidationError
from .timegrid import AtomicTimeRange

#: Field separator in canonical keys. Fields must never contain this byte.
SEPARATOR = b"\x1f"
_SEPARATOR_CHAR = "\x1f"

#: L1 sensitivity of a counting query: one action event moves one count by one.
SENSITIVITY = 1

#: Two raised to 64, as a float, for scaling an unsigned 64-bit word into (0, 1).
_U64_SPAN = 2.0**64

_LARGEST_BELOW_ONE = math.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class CanonicalQuery:
    """One atomic counting query: who, what, and which atomic time unit.

    No text field may contain the reserved separator byte 0x1F; that is what
    keeps the canonical encoding injective.
    """

    stat_type: str
    entity_id: str
    d_attr: str
    d_val: str
    atomic_range: AtomicTimeRange

    def __post_init__(self) -> None:
        for name, value in (
            ("stat_type", self.stat_type),
            ("entity_id", self.entity_id),
            ("d_attr", self.d_attr),
            ("d_val", self.d_val),
        ):
            if _SEPARATOR_CHAR in value:
                raise ValidationError(f"{name} contains the reserved 0x1F separator")


@dataclass(frozen=True)
class NoiseParams:
    """Secret key and privacy parameter for the noise pipeline.

    The secret only needs to be non-empty, but at least 32 bytes of real
    entropy is the sensible floor for an HMAC-SHA256 key. It must never be
    logged or echoed back to clients.
    """

    secret: bytes
    epsilon: float

    def __post_init__(self) -> None:
        if not self.secret:
            raise ValidationError("secret must be non-empty")
        if not self.epsilon > 0:
            raise ValidationError("epsilon must be positive")


def canonical_key(query: CanonicalQuery) -> bytes:
    """Serialize a query to its canonical byte key.

    UTF-8 fields joined by 0x1F, with the range endpoints as decimal seconds.
    0x1F never occurs inside any other UTF-8 sequence, so distinct queries
    always produce distinct keys.
    """
    fields = (
        query.stat_type,
        query.entity_id,
        query.d_attr,
        query.d_val,
        str(query.atomic_range.range.start),
        str(query.atomic_range.range.end),
    )
    return SEPARATOR.join(field.encode("utf-8") for field in fields)


def _to_unit_interval(word: int) -> float:
    # The half offset keeps the exact value of (word + 0.5) / 2**64 inside
    # (0, 1), but IEEE rounding lands on 1.0 for the largest words; clamp
    # those back to the biggest double below one.
    return min((word + 0.5) / _U64_SPAN, _LARGEST_BELOW_ONE)


def pseudorand_frac(secret: bytes, key: bytes) -> float:
    """Deterministic fraction in the open interval (0, 1).

    Takes the first 8 bytes of HMAC-SHA256(secret, key) as a big-endian
    unsigned integer u and returns (u + 0.5) / 2**64.
    """
    if not secret:
        raise ValidationError("secret must be non-empty")
    digest = hmac.new(secret, key, hashlib.sha256).digest()
    word = int.from_bytes(digest[:8], "big")
    return _to_unit_interval(word)


def laplace_inverse_cdf(p: float, epsilon: float) -> float:
    """Map p in (0, 1) to a Laplace(0, 1/epsilon) variate.

    Computes -(1/epsilon) * sgn(p - 0.5) * ln(1 - 2|p - 0.5|). Values of p
    outside the open interval are a domain error.
    """
    if not 0.0 < p < 1.0:
        raise ValidationError(f"p must lie strictly between 0 and 1, got {p}")
    if not epsilon > 0:
        raise ValidationError("epsilon must be positive")
    centered = p - 0.5
    if centered == 0.0:
        return 0.0
    # log1p keeps precision when p is close to 0.5.
    return -math.copysign(1.0, centered) * math.log1p(-2.0 * abs(centered)) / epsilon


def round_half_away_from_zero(x: float) -> int:
    """Round to the nearest integer, with ties moving away from zero."""
    if x >= 0:
        return math.floor(x + 0.5)
    return math.ceil(x - 0.5)


def pseudorandom_laplace_noise(params: NoiseParams, query: CanonicalQuery) -> int:
    """Integer Laplace noise for a canonical query under a fixed secret."""
    p = pseudorand_frac(params.secret, canonical_key(query))
    return round_half_away_from_zero(laplace_inverse_cdf(p, params.epsilon))
