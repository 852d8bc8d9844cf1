"""The four routing mechanisms as pure packet transformations.

Each mechanism is an outbound pipeline (upper-layer packet in, wire
packet out) and an inbound pipeline (wire packet in, upper-layer packet
out). Outbound pipelines are pure given the endpoint context and its
cache snapshot; nothing here touches a clock or a queue.

Per-packet mobility cost on the wire, with both endpoints away from
home:

    bidirectional tunneling     two tunnel legs, 40 + 40 bytes
    route optimization          home address option + type 2 routing, 24 + 24 bytes
    tunneling-based r.o.        one CoA-to-CoA tunnel, 40 bytes
    improved tunneling r.o.     addresses rewritten in place, 0 bytes

The improved variant and the tunneling variant both degrade to plain
route optimization when the sender has no live binding for the peer:
the fallback output is byte-identical to what ro_outbound produces.
"""

from __future__ import annotations

from dataclasses import dataclass

from .binding import BindingCache
from .packet import (
    Address,
    Packet,
    decapsulate,
    encapsulate,
    make_packet,
)


class MisdeliveryError(Exception):
    """A wire packet arrived at an endpoint it was not addressed to."""


class UnknownSenderError(Exception):
    """Reverse lookup failed: the wire source maps to no live binding."""


class NoBindingError(Exception):
    """A home agent was asked to forward toward an unregistered home address."""


@dataclass(frozen=True)
class UpperLayerPacket:
    """What applications exchange: payload between two home addresses."""

    src_hoa: Address
    dst_hoa: Address
    payload: bytes


@dataclass(frozen=True)
class EndpointContext:
    """One endpoint's view: who it is, where it is, what it knows.

    mechanism is the stance negotiated for the current peer; it is
    informational here, pipeline choice happens at the caller.
    """

    hoa: Address
    coa: Address
    cache: BindingCache
    home_agent: Address | None = None
    mechanism: object | None = None

    @property
    def at_home(self) -> bool:
        return self.coa == self.hoa


def _require_own(ulp: UpperLayerPacket, ctx: EndpointContext) -> None:
    if ulp.src_hoa != ctx.hoa:
        raise ValueError(f"ulp source {ulp.src_hoa} is not this endpoint ({ctx.hoa})")


# -- improved tunneling-based route optimization ------------------------------

def itro_outbound(ulp: UpperLayerPacket, ctx: EndpointContext, now: float) -> Packet:
    """Rewrite both addresses to care-of addresses; add nothing.

    The wire packet is base header + payload only, so mobility costs
    zero bytes. Cache miss falls back to ro_outbound, byte for byte.
    """
    _require_own(ulp, ctx)
    peer_coa = ctx.cache.lookup_coa(ulp.dst_hoa, now)
    if peer_coa is None:
        return ro_outbound(ulp, ctx, now)
    return make_packet(ctx.coa, peer_coa, payload=ulp.payload)


def itro_inbound(wire: Packet, ctx: EndpointContext, now: float) -> UpperLayerPacket:
    """Undo the rewrite: destination back to own HoA, source via reverse lookup.

    Raises UnknownSenderError when the wire source is bound by no live
    entry, and AmbiguousCoaError when two live bindings share it.
    """
    if wire.home_address_option is not None or wire.type2_routing is not None or wire.inner is not None:
        raise MisdeliveryError("rewrite-style packet must be base header + payload")
    if wire.base.destination != ctx.coa:
        raise MisdeliveryError(
            f"packet for {wire.base.destination} arrived at {ctx.coa}"
        )
    src_hoa = ctx.cache.reverse_lookup_hoa(wire.base.source, now)
    if src_hoa is None:
        raise UnknownSenderError(f"no live binding for wire source {wire.base.source}")
    return UpperLayerPacket(src_hoa=src_hoa, dst_hoa=ctx.hoa, payload=wire.payload)


# -- route optimization --------------------------------------------------------

def ro_outbound(ulp: UpperLayerPacket, ctx: EndpointContext, now: float) -> Packet:
    """Extension-header route optimization.

    Away from home the sender transmits from its CoA and carries its
    HoA in a home address option (+24 bytes). A live binding for the
    peer rewrites the destination to the peer's CoA and records the
    HoA in a type 2 routing header (+24 bytes). Both endpoints mobile
    therefore costs 48 bytes per packet.
    """
    _require_own(ulp, ctx)
    home_address = None if ctx.at_home else ctx.hoa
    destination = ulp.dst_hoa
    type2 = None
    peer_coa = ctx.cache.lookup_coa(ulp.dst_hoa, now)
    if peer_coa is not None and peer_coa != ulp.dst_hoa:
        destination = peer_coa
        type2 = ulp.dst_hoa
    return make_packet(
        ctx.coa,
        destination,
        payload=ulp.payload,
        home_address=home_address,
        type2_home_address=type2,
    )


def ro_inbound(wire: Packet, ctx: EndpointContext) -> UpperLayerPacket:
    """Recover home addresses from the extension headers.

    The home address option restores the true source; the type 2
    routing header restores the true destination and must name this
    endpoint's HoA, anything else is a misdelivery.
    """
    if wire.base.destination not in (ctx.coa, ctx.hoa):
        raise MisdeliveryError(
            f"packet for {wire.base.destination} arrived at {ctx.hoa}/{ctx.coa}"
        )
    src_hoa = wire.base.source
    if wire.home_address_option is not None:
        src_hoa = wire.home_address_option.home_address
    dst_hoa = wire.base.destination
    if wire.type2_routing is not None:
        dst_hoa = wire.type2_routing.home_address
        if dst_hoa != ctx.hoa:
            raise MisdeliveryError(
                f"type 2 routing header names {dst_hoa}, not {ctx.hoa}"
            )
    return UpperLayerPacket(src_hoa=src_hoa, dst_hoa=dst_hoa, payload=wire.payload)


# -- tunneling-based route optimization ----------------------------------------

def tro_outbound(ulp: UpperLayerPacket, ctx: EndpointContext, now: float) -> Packet:
    """Tunnel straight to the peer's CoA: one extra base header, 40 bytes.

    The inner packet keeps the HoA-to-HoA addressing. Cache miss falls
    back to ro_outbound, byte for byte.
    """
    _require_own(ulp, ctx)
    peer_coa = ctx.cache.lookup_coa(ulp.dst_hoa, now)
    if peer_coa is None:
        return ro_outbound(ulp, ctx, now)
    inner = make_packet(ulp.src_hoa, ulp.dst_hoa, payload=ulp.payload)
    return encapsulate(inner, ctx.coa, peer_coa)


def tro_inbound(wire: Packet, ctx: EndpointContext) -> UpperLayerPacket:
    """Strip the CoA-to-CoA tunnel and hand over the inner packet."""
    if wire.base.destination != ctx.coa:
        raise MisdeliveryError(
            f"tunnel for {wire.base.destination} arrived at {ctx.coa}"
        )
    inner = decapsulate(wire)
    if inner.base.destination != ctx.hoa:
        raise MisdeliveryError(
            f"inner packet names {inner.base.destination}, not {ctx.hoa}"
        )
    return UpperLayerPacket(
        src_hoa=inner.base.source, dst_hoa=inner.base.destination, payload=inner.payload
    )


# -- bidirectional tunneling ----------------------------------------------------

def bt_outbound(ulp: UpperLayerPacket, ctx: EndpointContext) -> Packet:
    """Reverse-tunnel everything through the home agent.

    Away from home: inner HoA-to-HoA packet wrapped toward the HA
    (+40 bytes on this leg). At home the tunnel degenerates to the
    bare packet. The peer-side tunnel is the peer HA's business.
    """
    _require_own(ulp, ctx)
    inner = make_packet(ulp.src_hoa, ulp.dst_hoa, payload=ulp.payload)
    if ctx.at_home:
        return inner
    if ctx.home_agent is None:
        raise NoBindingError(f"{ctx.hoa} is away from home but knows no home agent")
    return encapsulate(inner, ctx.coa, ctx.home_agent)


def bt_inbound(wire: Packet, ctx: EndpointContext) -> UpperLayerPacket:
    """Strip the tunnel the home agent wrapped around the packet."""
    return tro_inbound(wire, ctx)


def ha_forward(
    wire: Packet, ha_address: Address, registrations: BindingCache, now: float
) -> Packet:
    """One home-agent forwarding step.

    A reverse-tunnel arrival (tunnel addressed to the HA itself) is
    unwrapped and the inner packet continues unencapsulated. A plain
    packet destined to a registered away HoA is encapsulated toward
    the registered CoA (+40 bytes); with no live registration there is
    nowhere to forward and NoBindingError is raised. A registration
    back to the home address needs no tunnel and passes through.
    """
    if wire.inner is not None:
        if wire.base.destination != ha_address:
            raise MisdeliveryError(
                f"tunnel for {wire.base.destination} arrived at home agent {ha_address}"
            )
        return decapsulate(wire)
    if wire.base.destination == ha_address:
        raise MisdeliveryError("home agent is not a data endpoint")
    coa = registrations.lookup_coa(wire.base.destination, now)
    if coa is None:
        raise NoBindingError(f"no live registration for {wire.base.destination}")
    if coa == wire.base.destination:
        return wire
    return encapsulate(wire, ha_address, coa)
