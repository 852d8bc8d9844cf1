"""Binding cache, binding updates and mechanism negotiation.

A binding maps a home address (HoA) to the care-of address (CoA) the
node currently lives at. Mobiles announce bindings with binding update
(BU) messages; home agents keep them as registrations, correspondents
keep them to reach peers directly.

Each BU also carries two flag bits, ROT1 and ROT0, announcing which
routing mechanism the sender supports on the receive side:

    ROT1  ROT0  mechanism
      0     0   route optimization (extension headers)
      0     1   tunneling-based route optimization (CoA-to-CoA tunnel)
      1     -   improved tunneling-based route optimization (address rewrite)

The improved variant resolves wire addresses back to home addresses at
the receiver, so the cache must answer reverse lookups (CoA -> HoA) as
well. Two live bindings sharing one CoA make that reverse mapping
ambiguous; the cache stays usable but reverse lookups on the shared CoA
raise AmbiguousCoaError until one binding expires or is replaced.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

from .packet import (
    Address,
    KIND_BINDING_UPDATE,
    Packet,
    make_packet,
)

BU_BODY_SIZE = 40

_BU_BODY = struct.Struct(">16s16sIHBB")  # hoa, coa, sequence, lifetime, flags, reserved

_FLAG_ROT0 = 0x01
_FLAG_ROT1 = 0x02

_UNSPECIFIED = Address("::")


class AmbiguousCoaError(Exception):
    """Reverse lookup hit a CoA bound by more than one live home address."""


class Mechanism(Enum):
    """The four routing mechanisms under comparison."""

    BIDIRECTIONAL_TUNNELING = "bidirectional_tunneling"
    ROUTE_OPTIMIZATION = "route_optimization"
    TUNNELING_ROUTE_OPTIMIZATION = "tunneling_route_optimization"
    IMPROVED_TUNNELING_ROUTE_OPTIMIZATION = "improved_tunneling_route_optimization"

    @property
    def token(self) -> str:
        return _TOKENS[self]


_TOKENS = {
    Mechanism.BIDIRECTIONAL_TUNNELING: "bt",
    Mechanism.ROUTE_OPTIMIZATION: "ro",
    Mechanism.TUNNELING_ROUTE_OPTIMIZATION: "tro",
    Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION: "itro",
}

_BY_NAME = {m.value: m for m in Mechanism} | {t: m for m, t in _TOKENS.items()}


def mechanism_from_name(name: str) -> Mechanism:
    """Accepts the full mechanism name or its short token (bt/ro/tro/itro)."""
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown mechanism {name!r}") from None


def select_mechanism(rot1: int, rot0: int) -> Mechanism:
    """Map announced flag bits to a mechanism. Total over both bits.

    ROT1 set wins regardless of ROT0; with ROT1 clear, ROT0 picks the
    tunneling variant over plain route optimization.
    """
    if rot1 not in (0, 1) or rot0 not in (0, 1):
        raise ValueError(f"flags must be 0 or 1, got rot1={rot1} rot0={rot0}")
    if rot1:
        return Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION
    if rot0:
        return Mechanism.TUNNELING_ROUTE_OPTIMIZATION
    return Mechanism.ROUTE_OPTIMIZATION


@dataclass(frozen=True)
class BindingUpdate:
    """One binding announcement. lifetime 0 deregisters the home address."""

    hoa: Address
    coa: Address
    sequence: int
    lifetime: int
    rot0: int = 0
    rot1: int = 0

    def __post_init__(self) -> None:
        if self.hoa == _UNSPECIFIED:
            raise ValueError("hoa must not be the unspecified address")
        if not 0 <= self.sequence <= 0xFFFFFFFF:
            raise ValueError(f"sequence {self.sequence} outside u32 range")
        if not 0 <= self.lifetime <= 0xFFFF:
            raise ValueError(f"lifetime {self.lifetime} outside u16 range")
        if self.rot0 not in (0, 1) or self.rot1 not in (0, 1):
            raise ValueError("rot flags must be 0 or 1")


@dataclass(frozen=True)
class BindingEntry:
    """A stored binding plus the flags its BU announced."""

    hoa: Address
    coa: Address
    sequence: int
    expires_at: float
    rot0: int = 0
    rot1: int = 0

    def is_live(self, now: float) -> bool:
        return now < self.expires_at

    def lifetime_remaining(self, now: float) -> float:
        return max(0.0, self.expires_at - now)


class UpdateStatus(Enum):
    APPLIED = "applied"
    STALE = "stale"
    REMOVED = "removed"


class BindingCache:
    """HoA-keyed binding store with expiry and reverse (CoA -> HoA) lookup.

    Sequence numbers are monotonically non-decreasing per home address;
    an update carrying an older sequence than the stored entry is
    ignored and reported as STALE. Expired entries are filtered at
    lookup time, so a cache never hands out a dead binding.
    """

    def __init__(self) -> None:
        self._entries: dict[Address, BindingEntry] = {}
        self._collided_coas: set[Address] = set()

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> tuple[BindingEntry, ...]:
        return tuple(self._entries.values())

    @property
    def degraded(self) -> bool:
        """True once a CoA collision was observed. Informational only."""
        return bool(self._collided_coas)

    @property
    def collided_coas(self) -> frozenset[Address]:
        return frozenset(self._collided_coas)

    def apply_update(self, bu: BindingUpdate, now: float) -> UpdateStatus:
        """Apply one BU. Replaces iff bu.sequence >= the stored sequence."""
        stored = self._entries.get(bu.hoa)
        if stored is not None and bu.sequence < stored.sequence:
            return UpdateStatus.STALE
        if bu.lifetime == 0:
            self._entries.pop(bu.hoa, None)
            return UpdateStatus.REMOVED
        for other in self._entries.values():
            if other.hoa != bu.hoa and other.coa == bu.coa and other.is_live(now):
                # Entry still applied; reverse lookups on this CoA will error.
                self._collided_coas.add(bu.coa)
        self._entries[bu.hoa] = BindingEntry(
            hoa=bu.hoa,
            coa=bu.coa,
            sequence=bu.sequence,
            expires_at=now + bu.lifetime,
            rot0=bu.rot0,
            rot1=bu.rot1,
        )
        return UpdateStatus.APPLIED

    def live_entry(self, hoa: Address, now: float) -> BindingEntry | None:
        entry = self._entries.get(hoa)
        if entry is not None and entry.is_live(now):
            return entry
        return None

    def lookup_coa(self, hoa: Address, now: float) -> Address | None:
        """Forward lookup: where does this home address live right now?"""
        entry = self.live_entry(hoa, now)
        return entry.coa if entry is not None else None

    def reverse_lookup_hoa(self, coa: Address, now: float) -> Address | None:
        """Reverse lookup: which home address lives at this care-of address?

        Raises AmbiguousCoaError while two or more live bindings share
        the CoA; a collision heals once all but one expire.
        """
        matches = [
            e.hoa for e in self._entries.values() if e.coa == coa and e.is_live(now)
        ]
        if len(matches) > 1:
            raise AmbiguousCoaError(
                f"{coa} is bound by {len(matches)} live home addresses"
            )
        return matches[0] if matches else None

    def remove(self, hoa: Address) -> None:
        self._entries.pop(hoa, None)


def encode_binding_update(bu: BindingUpdate) -> bytes:
    """Fixed 40-byte body: hoa(16) coa(16) sequence(4) lifetime(2) flags(1) pad(1)."""
    flags = (_FLAG_ROT0 if bu.rot0 else 0) | (_FLAG_ROT1 if bu.rot1 else 0)
    body = _BU_BODY.pack(bu.hoa.packed, bu.coa.packed, bu.sequence, bu.lifetime, flags, 0)
    assert len(body) == BU_BODY_SIZE
    return body


def decode_binding_update(body: bytes) -> BindingUpdate:
    if len(body) != BU_BODY_SIZE:
        raise ValueError(f"binding update body must be {BU_BODY_SIZE} bytes, got {len(body)}")
    hoa, coa, sequence, lifetime, flags, _ = _BU_BODY.unpack(body)
    return BindingUpdate(
        hoa=Address(hoa),
        coa=Address(coa),
        sequence=sequence,
        lifetime=lifetime,
        rot0=1 if flags & _FLAG_ROT0 else 0,
        rot1=1 if flags & _FLAG_ROT1 else 0,
    )


def binding_update_packet(bu: BindingUpdate, source: Address, destination: Address) -> Packet:
    """Wrap a BU body in a packet tagged with the dedicated header kind."""
    return make_packet(
        source,
        destination,
        payload=encode_binding_update(bu),
        body_kind=KIND_BINDING_UPDATE,
    )


def is_binding_update(p: Packet) -> bool:
    return (
        p.base.next_header == KIND_BINDING_UPDATE
        and p.inner is None
        and p.home_address_option is None
        and p.type2_routing is None
    )


def binding_update_from_packet(p: Packet) -> BindingUpdate:
    if not is_binding_update(p):
        raise ValueError("packet is not a binding update frame")
    return decode_binding_update(p.payload)
