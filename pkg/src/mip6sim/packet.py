"""Byte-exact IPv6 packet model with the two Mobile IPv6 extension headers.

Every packet is a 40-byte base header followed by optional 24-byte
extension headers and either an opaque payload or one encapsulated
(tunnelled) packet:

     0                15 16               31 32  33 34 35 36      39
    +------------------+------------------+------+--+--+----------+
    |   source (16)    | destination (16) | plen |nh|hl| reserved |
    +------------------+------------------+------+--+--+----------+
    base header, 40 bytes; plen is the big-endian byte count of
    everything after the base header

     0  1  2               17 18       23
    +--+--+------------------+----------+
    |nk|ln|   address (16)   |   pad    |
    +--+--+------------------+----------+
    extension header (home address option / type 2 routing), 24 bytes;
    ln is always 24

Chaining convention: the tag byte of each header (`nh` in the base,
`nk` in an extension) names the kind of the element that FOLLOWS it.
A header's own kind is established by its predecessor's tag, exactly
as IPv6 next-header chaining works. Kind values reuse well-known IPv6
protocol numbers so a capture reads naturally.

Packets are frozen dataclasses: pipelines share them freely without
copying and a decoded packet compares equal to the one encoded.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from ipaddress import IPv6Address

Address = IPv6Address

BASE_HEADER_SIZE = 40
EXTENSION_HEADER_SIZE = 24
DEFAULT_MTU = 1500
# Smallest wire any mechanism may need: base + both extension headers.
MIN_MTU = BASE_HEADER_SIZE + 2 * EXTENSION_HEADER_SIZE

# Header-kind tags (IPv6 protocol numbers where one fits).
KIND_TUNNEL = 41            # an encapsulated packet follows
KIND_TYPE2_ROUTING = 43     # a type 2 routing header follows
KIND_PAYLOAD = 59           # opaque payload (possibly empty) follows
KIND_HOME_ADDRESS = 60      # a home address option follows
KIND_BINDING_UPDATE = 135   # a binding update body follows

_EXTENSION_KINDS = (KIND_HOME_ADDRESS, KIND_TYPE2_ROUTING)

_BASE_TAIL = struct.Struct(">HBB4s")       # plen, next_header, hop_limit, reserved
_EXT_HEAD = struct.Struct(">BB16s6s")      # next kind, length, address, pad


class PacketError(Exception):
    """Base class for packet model and codec failures."""


class OversizeError(PacketError):
    """Encoded packet would not fit the MTU. Signals scenario misconfiguration."""


class NestingViolationError(PacketError):
    """Tunnel nesting deeper than one level."""


class NotATunnelError(PacketError):
    """decapsulate() called on a packet with no inner packet."""


class DecodeError(PacketError):
    """Base class for wire decoding failures."""


class TruncatedError(DecodeError):
    """Input ends before the structure it declares."""


class UnknownHeaderKindError(DecodeError):
    """A tag byte names no known header kind (or one invalid in its position)."""


class LengthMismatchError(DecodeError):
    """A length field disagrees with the actual byte count."""


@dataclass(frozen=True)
class BaseHeader:
    """The fixed 40-byte header every packet starts with.

    payload_length counts every byte after the base header.  next_header
    and hop_limit exist for realism; neither enters overhead accounting.
    """

    source: Address
    destination: Address
    payload_length: int
    next_header: int = KIND_PAYLOAD
    hop_limit: int = 64

    def __post_init__(self) -> None:
        if not 0 <= self.payload_length <= 0xFFFF:
            raise ValueError(f"payload_length {self.payload_length} outside u16 range")
        if not 0 <= self.next_header <= 0xFF:
            raise ValueError(f"next_header {self.next_header} outside u8 range")
        if not 0 <= self.hop_limit <= 0xFF:
            raise ValueError(f"hop_limit {self.hop_limit} outside u8 range")


@dataclass(frozen=True)
class HomeAddressOption:
    """Carries the sender's home address when it transmits from a care-of address."""

    home_address: Address


@dataclass(frozen=True)
class Type2RoutingHeader:
    """Carries the receiver's home address when the destination was rewritten to a care-of address."""

    home_address: Address


@dataclass(frozen=True)
class Packet:
    """One wire packet. At most one level of tunnelling, never payload and inner together."""

    base: BaseHeader
    home_address_option: HomeAddressOption | None = None
    type2_routing: Type2RoutingHeader | None = None
    inner: Packet | None = None
    payload: bytes = b""

    def __post_init__(self) -> None:
        if self.inner is not None:
            if self.payload:
                raise ValueError("tunnel packet cannot also carry a direct payload")
            if self.inner.inner is not None:
                raise NestingViolationError("tunnel nesting deeper than one level")
        declared = self.base.payload_length
        actual = wire_size(self) - BASE_HEADER_SIZE
        if declared != actual:
            raise ValueError(
                f"payload_length {declared} != encoded content size {actual}"
            )
        first = _first_kind(self)
        if self.base.next_header != first:
            raise ValueError(
                f"next_header {self.base.next_header} does not name the first element (expected {first})"
            )

    @property
    def is_tunnel(self) -> bool:
        return self.inner is not None


def _body_kind(p: Packet) -> int:
    if p.inner is not None:
        return KIND_TUNNEL
    if p.home_address_option is None and p.type2_routing is None:
        # Extension-less packet: the base tag already names the body.
        return p.base.next_header
    return KIND_PAYLOAD


def _first_kind(p: Packet) -> int:
    if p.home_address_option is not None:
        return KIND_HOME_ADDRESS
    if p.type2_routing is not None:
        return KIND_TYPE2_ROUTING
    if p.inner is not None:
        return KIND_TUNNEL
    if p.base.next_header in (KIND_PAYLOAD, KIND_BINDING_UPDATE):
        return p.base.next_header
    return KIND_PAYLOAD


def make_packet(
    source: Address,
    destination: Address,
    *,
    payload: bytes = b"",
    home_address: Address | None = None,
    type2_home_address: Address | None = None,
    inner: Packet | None = None,
    body_kind: int | None = None,
    hop_limit: int = 64,
) -> Packet:
    """Build a consistent packet, computing payload_length and the chain tag.

    body_kind overrides the tag of the terminal element; the only current
    use is KIND_BINDING_UPDATE for signalling frames.
    """
    option = HomeAddressOption(home_address) if home_address is not None else None
    routing = (
        Type2RoutingHeader(type2_home_address) if type2_home_address is not None else None
    )
    if body_kind is None:
        body_kind = KIND_TUNNEL if inner is not None else KIND_PAYLOAD
    elif inner is not None and body_kind != KIND_TUNNEL:
        raise ValueError("a tunnel body must use KIND_TUNNEL")
    elif body_kind == KIND_BINDING_UPDATE and (option or routing):
        raise ValueError("binding update frames carry no extension headers")
    content = (
        (EXTENSION_HEADER_SIZE if option else 0)
        + (EXTENSION_HEADER_SIZE if routing else 0)
        + (wire_size(inner) if inner is not None else len(payload))
    )
    if option is not None:
        first = KIND_HOME_ADDRESS
    elif routing is not None:
        first = KIND_TYPE2_ROUTING
    else:
        first = body_kind
    return Packet(
        base=BaseHeader(
            source=source,
            destination=destination,
            payload_length=content,
            next_header=first,
            hop_limit=hop_limit,
        ),
        home_address_option=option,
        type2_routing=routing,
        inner=inner,
        payload=payload,
    )


def wire_size(p: Packet) -> int:
    """Encoded size in bytes, computed without encoding."""
    size = BASE_HEADER_SIZE
    if p.home_address_option is not None:
        size += EXTENSION_HEADER_SIZE
    if p.type2_routing is not None:
        size += EXTENSION_HEADER_SIZE
    size += wire_size(p.inner) if p.inner is not None else len(p.payload)
    return size


def innermost_payload(p: Packet) -> bytes:
    """The upper-layer payload, looking through one tunnel level if present."""
    return p.inner.payload if p.inner is not None else p.payload


def header_kinds(p: Packet) -> tuple[str, ...]:
    """Names of the headers present, outermost layer first. Feeds trace records.

    An encapsulating header counts as "tunnel" (pure overhead), the
    innermost base header as "base" (the packet's own). The mobility
    bytes of a wire packet are always 40 per "tunnel" plus 24 per
    extension header named here.
    """
    kinds = ["tunnel" if p.inner is not None else "base"]
    if p.home_address_option is not None:
        kinds.append("home_address_option")
    if p.type2_routing is not None:
        kinds.append("type2_routing")
    if p.inner is not None:
        kinds.extend(header_kinds(p.inner))
    elif p.base.next_header == KIND_BINDING_UPDATE:
        kinds.append("binding_update")
    return tuple(kinds)


def encapsulate(inner: Packet, source: Address, destination: Address) -> Packet:
    """Wrap a packet in a new 40-byte outer header. Adds exactly 40 bytes.

    The inner packet is preserved untouched; nesting beyond one level
    raises NestingViolationError.
    """
    if inner.inner is not None:
        raise NestingViolationError("cannot encapsulate a packet that is already a tunnel")
    return Packet(
        base=BaseHeader(
            source=source,
            destination=destination,
            payload_length=wire_size(inner),
            next_header=KIND_TUNNEL,
        ),
        inner=inner,
    )


def decapsulate(p: Packet) -> Packet:
    """Return the inner packet unchanged. Inverse of encapsulate."""
    if p.inner is None:
        raise NotATunnelError("packet carries no inner packet")
    return p.inner


def encode_packet(p: Packet, mtu: int = DEFAULT_MTU) -> bytes:
    """Serialize to the documented wire layout, enforcing the MTU."""
    total = wire_size(p)
    if total > mtu:
        raise OversizeError(f"encoded packet is {total} bytes, MTU is {mtu}")
    chunks = [
        p.base.source.packed,
        p.base.destination.packed,
        _BASE_TAIL.pack(
            p.base.payload_length, p.base.next_header, p.base.hop_limit, b"\x00" * 4
        ),
    ]
    body_kind = _body_kind(p)
    if p.home_address_option is not None:
        after = KIND_TYPE2_ROUTING if p.type2_routing is not None else body_kind
        chunks.append(
            _EXT_HEAD.pack(
                after,
                EXTENSION_HEADER_SIZE,
                p.home_address_option.home_address.packed,
                b"\x00" * 6,
            )
        )
    if p.type2_routing is not None:
        chunks.append(
            _EXT_HEAD.pack(
                body_kind,
                EXTENSION_HEADER_SIZE,
                p.type2_routing.home_address.packed,
                b"\x00" * 6,
            )
        )
    if p.inner is not None:
        chunks.append(encode_packet(p.inner, mtu=mtu))
    else:
        chunks.append(p.payload)
    data = b"".join(chunks)
    assert len(data) == total, "wire_size and encoder disagree"
    return data


def _decode_extension(kind: int, view: memoryview) -> tuple[int, Address]:
    if len(view) < EXTENSION_HEADER_SIZE:
        raise TruncatedError(
            f"extension header needs {EXTENSION_HEADER_SIZE} bytes, {len(view)} remain"
        )
    next_kind, length, addr, _pad = _EXT_HEAD.unpack_from(view)
    if length != EXTENSION_HEADER_SIZE:
        raise LengthMismatchError(
            f"extension length field is {length}, must be {EXTENSION_HEADER_SIZE}"
        )
    return next_kind, Address(bytes(addr))


def _decode(data: memoryview) -> Packet:
    if len(data) < BASE_HEADER_SIZE:
        raise TruncatedError(f"base header needs {BASE_HEADER_SIZE} bytes, got {len(data)}")
    source = Address(bytes(data[0:16]))
    destination = Address(bytes(data[16:32]))
    plen, next_header, hop_limit, _reserved = _BASE_TAIL.unpack_from(data, 32)
    total = BASE_HEADER_SIZE + plen
    if len(data) < total:
        raise TruncatedError(f"packet declares {total} bytes, got {len(data)}")
    if len(data) > total:
        raise LengthMismatchError(
            f"packet declares {total} bytes, {len(data) - total} trailing bytes present"
        )
    rest = data[BASE_HEADER_SIZE:total]

    option: HomeAddressOption | None = None
    routing: Type2RoutingHeader | None = None
    kind = next_header
    if kind == KIND_HOME_ADDRESS:
        kind, addr = _decode_extension(kind, rest)
        option = HomeAddressOption(addr)
        rest = rest[EXTENSION_HEADER_SIZE:]
        if kind == KIND_HOME_ADDRESS:
            raise UnknownHeaderKindError("duplicate home address option")
    if kind == KIND_TYPE2_ROUTING:
        kind, addr = _decode_extension(kind, rest)
        routing = Type2RoutingHeader(addr)
        rest = rest[EXTENSION_HEADER_SIZE:]
        if kind in _EXTENSION_KINDS:
            raise UnknownHeaderKindError(
                f"tag {kind} invalid after a type 2 routing header"
            )

    inner: Packet | None = None
    payload = b""
    if kind == KIND_TUNNEL:
        inner = _decode(rest)
    elif kind in (KIND_PAYLOAD, KIND_BINDING_UPDATE):
        payload = bytes(rest)
    else:
        raise UnknownHeaderKindError(f"unknown header-kind tag {kind}")

    return Packet(
        base=BaseHeader(
            source=source,
            destination=destination,
            payload_length=plen,
            next_header=next_header,
            hop_limit=hop_limit,
        ),
        home_address_option=option,
        type2_routing=routing,
        inner=inner,
        payload=payload,
    )


def decode_packet(data: bytes) -> Packet:
    """Parse wire bytes back into a Packet. Total inverse of encode_packet.

    Raises TruncatedError, UnknownHeaderKindError or LengthMismatchError,
    each for the distinct malformation its name states.
    """
    return _decode(memoryview(data))
