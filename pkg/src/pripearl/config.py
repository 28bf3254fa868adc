"""Service configuration: file parsing, environment overrides, defaults.

Config files may be TOML or JSON (chosen by file suffix). The noise secret is
resolved from, in order: the PPRL_SECRET_HEX environment variable, a
``secret_file`` path named in the config, or an inline ``secret_hex`` value.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .engine import BudgetDims, PrivacyParams
from .errors import ValidationError
from .noise import NoiseParams
from .store import DEFAULT_STAT_TYPES
from .timegrid import LEVEL_NAMES, TimeHierarchy, parse_instant

SECRET_ENV_VAR = "PPRL_SECRET_HEX"

DEFAULT_LISTEN = "127.0.0.1:8080"


@dataclass(frozen=True)
class ServiceSettings:
    """Everything the service needs to run, already validated."""

    secret: bytes
    admin_token: str | None = None
    listen: str = DEFAULT_LISTEN
    stat_types: tuple[str, ...] = DEFAULT_STAT_TYPES
    hierarchy_levels: tuple[str, ...] = LEVEL_NAMES
    epsilon: float = 1.0
    suppression_threshold: int = 0
    max_consistent_children: int = 0
    noisy_totals: bool = False
    budget: BudgetDims = field(default_factory=lambda: BudgetDims(1, len(LEVEL_NAMES), 1))
    snapshot_path: str | None = None
    entities_path: str | None = None
    fixed_now: int | None = None
    allow_clock_header: bool = False

    def hierarchy(self) -> TimeHierarchy:
        return TimeHierarchy(self.hierarchy_levels)

    def privacy_params(self) -> PrivacyParams:
        return PrivacyParams(
            noise=NoiseParams(self.secret, self.epsilon),
            suppression_threshold=self.suppression_threshold,
            max_consistent_children=self.max_consistent_children,
            hierarchy=self.hierarchy(),
            noisy_totals=self.noisy_totals,
        )


def _read_config_file(path: str) -> dict[str, Any]:
    if path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    else:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    if not isinstance(raw, dict):
        raise ValidationError("config root must be a table/object")
    return raw


def _resolve_secret(raw: Mapping[str, Any], env: Mapping[str, str]) -> bytes:
    hex_text = env.get(SECRET_ENV_VAR)
    if not hex_text:
        secret_file = raw.get("secret_file")
        if secret_file:
            with open(secret_file, "r", encoding="utf-8") as handle:
                hex_text = handle.read().strip()
        else:
            hex_text = raw.get("secret_hex")
    if not hex_text:
        raise ValidationError(
            f"no noise secret configured; set {SECRET_ENV_VAR}, secret_file, or secret_hex"
        )
    try:
        secret = bytes.fromhex(hex_text)
    except ValueError:
        raise ValidationError("noise secret must be hex-encoded") from None
    if not secret:
        raise ValidationError("noise secret must be non-empty")
    return secret


def load_settings(
    config_path: str | None = None,
    *,
    listen: str | None = None,
    snapshot: str | None = None,
    env: Mapping[str, str] | None = None,
) -> ServiceSettings:
    """Build ServiceSettings from an optional config file plus overrides."""
    env = os.environ if env is None else env
    raw: dict[str, Any] = _read_config_file(config_path) if config_path else {}
    privacy = raw.get("privacy", {})
    budget = raw.get("budget", {})
    clock = raw.get("clock", {})

    hierarchy_levels = tuple(privacy.get("hierarchy", LEVEL_NAMES))
    fixed_now_text = clock.get("fixed_now")
    dims = BudgetDims(
        n_attrs=int(budget.get("n_attr", 1)),
        n_time_levels=int(budget.get("n_time", len(hierarchy_levels))),
        n_entity_levels=int(budget.get("n_ent", 1)),
    )
    return ServiceSettings(
        secret=_resolve_secret(raw, env),
        admin_token=raw.get("admin_token"),
        listen=listen or raw.get("listen", DEFAULT_LISTEN),
        stat_types=tuple(raw.get("stat_types", DEFAULT_STAT_TYPES)),
        hierarchy_levels=hierarchy_levels,
        epsilon=float(privacy.get("epsilon", 1.0)),
        suppression_threshold=int(privacy.get("tau", 0)),
        max_consistent_children=int(privacy.get("l", 0)),
        noisy_totals=bool(privacy.get("noisy_totals", False)),
        budget=dims,
        snapshot_path=snapshot or raw.get("snapshot"),
        entities_path=raw.get("entities"),
        fixed_now=parse_instant(fixed_now_text) if fixed_now_text else None,
        allow_clock_header=bool(clock.get("allow_header", False)),
    )
