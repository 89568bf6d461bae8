"""Eviction policies: TTL with per-feature durations, LRU, or none."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .hashing import EMPTY

U64_MAX = (1 << 64) - 1


class Mode(enum.IntEnum):
    DISABLED = 0
    TTL = 1
    LRU = 2


@dataclass(frozen=True)
class TtlPolicy:
    default_ttl: int
    per_feature_ttl: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.default_ttl <= 0:
            raise ValueError("default_ttl must be positive")
        for feature, ttl in self.per_feature_ttl.items():
            if ttl <= 0:
                raise ValueError(f"TTL for feature {feature} must be positive, got {ttl}")

    def ttl_for(self, feature: int) -> int:
        return self.per_feature_ttl.get(feature, self.default_ttl)


@dataclass(frozen=True)
class LruPolicy:
    pass


@dataclass(frozen=True)
class EvictionPolicy:
    mode: Mode = Mode.DISABLED
    ttl: TtlPolicy | None = None

    def __post_init__(self):
        if (self.mode == Mode.TTL) != (self.ttl is not None):
            raise ValueError("a TtlPolicy is required for TTL mode and only for TTL mode")

    @classmethod
    def disabled(cls) -> "EvictionPolicy":
        return cls(Mode.DISABLED)

    @classmethod
    def lru(cls) -> "EvictionPolicy":
        return cls(Mode.LRU)

    @classmethod
    def with_ttl(cls, default_ttl: int, per_feature_ttl: Mapping[int, int] | None = None) -> "EvictionPolicy":
        return cls(Mode.TTL, TtlPolicy(default_ttl, dict(per_feature_ttl or {})))

    def describe(self) -> str:
        if self.mode == Mode.TTL:
            extra = ",".join(f"{k}={v}" for k, v in sorted(self.ttl.per_feature_ttl.items()))
            return f"ttl:{self.ttl.default_ttl}" + (f"[{extra}]" if extra else "")
        return self.mode.name.lower()


def make_metadata(policy: EvictionPolicy, now: int, feature: int = 0) -> int:
    """Metadata value written for an ID touched at ``now``.

    TTL stores the expiry time ``now + ttl(feature)``; LRU and disabled modes
    store ``now`` itself.
    """
    if not 0 <= now <= U64_MAX:
        raise OverflowError(f"timestamp {now} is outside the unsigned 64-bit range")
    if policy.mode != Mode.TTL:
        return now
    expiry = now + policy.ttl.ttl_for(feature)
    if expiry > U64_MAX:
        raise OverflowError(f"expiry {now} + ttl overflows 64 bits")
    return expiry


def is_expired(stored: int, now: int) -> bool:
    return stored < now


def select_victim_lru(window: Sequence[tuple[int, int, int]]) -> int:
    """Slot holding the oldest access time in ``window``; earliest offset wins ties.

    ``window`` lists ``(slot, identity, last_access)`` in probe order.
    """
    if not window:
        raise ValueError("LRU victim selection needs a nonempty window")
    best_slot, best_ts = None, None
    for slot, identity, ts in window:
        if identity == EMPTY:
            raise ValueError(f"slot {slot} is EMPTY; empty slots must be filled before LRU selection")
        if best_ts is None or ts < best_ts:
            best_slot, best_ts = slot, ts
    return best_slot


def check_metadata(policy: EvictionPolicy, meta_in: int, now: int) -> None:
    if policy.mode == Mode.TTL:
        if meta_in <= now:
            raise ValueError(f"TTL metadata must be an expiry after now={now}, got {meta_in}")
    elif meta_in != now:
        raise ValueError(f"{policy.mode.name} metadata must equal now={now}, got {meta_in}")


def parse_feature_ttls(items: Sequence[str]) -> dict[int, int]:
    out: dict[int, int] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"expected FEATURE=SECONDS, got {item!r}")
        out[int(key)] = int(value)
    return out
