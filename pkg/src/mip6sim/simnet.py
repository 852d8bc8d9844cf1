"""Deterministic discrete-event simulation of the four routing mechanisms.

The network is a single abstract Internet: every wire transmission
takes exactly one time unit, nothing is lost or reordered, and each
forwarding hop (a home agent in the path) adds one more unit. The event
queue orders by (time, insertion sequence), so equal-time events run in
the order they were scheduled and a seeded scenario always produces the
identical trace.

Wire packets move between nodes as immutable Packet values. Every
transmission appends one TraceRecord carrying the byte count actually
on the wire and how much of it is mobility overhead (anything beyond
the 40-byte base header and the upper-layer payload). Binding update
traffic is traced too, flagged by its header kind, and its bytes are
accumulated separately as signaling.

Movement: a Move event updates the node's care-of address at event
time, bumps its BU sequence number and emits binding updates to the
node's home agent and every peer on its list, each arriving one unit
later. BUs are addressed to stable home addresses and delivered by node
identity, so they never take a detour over a home agent.

Delivery routing for data packets is address-based, in this order:
a live home-agent registration mapping the destination to a foreign
CoA intercepts the packet (proxying the absent mobile); otherwise the
node currently holding the destination as its CoA (which covers nodes
at home, where CoA equals HoA) receives it; otherwise the packet is
unroutable and dropped under a named counter.
"""

from __future__ import annotations

import heapq
import json
import random
from collections import Counter
from dataclasses import dataclass, field

from .binding import (
    AmbiguousCoaError,
    BindingCache,
    BindingUpdate,
    Mechanism,
    binding_update_from_packet,
    binding_update_packet,
    is_binding_update,
    select_mechanism,
)
from .mechanisms import (
    EndpointContext,
    MisdeliveryError,
    NoBindingError,
    UnknownSenderError,
    UpperLayerPacket,
    bt_inbound,
    bt_outbound,
    ha_forward,
    itro_inbound,
    itro_outbound,
    ro_inbound,
    ro_outbound,
    tro_outbound,
)
from .packet import (
    Address,
    Packet,
    encode_packet,
    header_kinds,
    innermost_payload,
)
from .scenario import Role, ScenarioConfig

DEFAULT_HORIZON_SLACK = 16.0


class HorizonExceededError(Exception):
    """Events were still pending when the time horizon was reached."""

    def __init__(self, horizon: float, pending: list[tuple[float, str]]):
        super().__init__(
            f"{len(pending)} event(s) still pending past horizon {horizon}: {pending[:5]}"
        )
        self.horizon = horizon
        self.pending = pending


# -- event kinds -----------------------------------------------------------------

@dataclass(frozen=True)
class Move:
    node: str
    to: Address


@dataclass(frozen=True)
class BuRefresh:
    node: str


@dataclass(frozen=True)
class SendUlp:
    node: str
    dst_hoa: Address
    payload: bytes


@dataclass(frozen=True)
class Deliver:
    to: str
    wire: Packet
    mechanism: Mechanism
    ulp_id: int | None = None
    sent_at: float | None = None


@dataclass(frozen=True)
class BindingExpiry:
    node: str
    hoa: Address


Action = Move | BuRefresh | SendUlp | Deliver | BindingExpiry


# -- records ----------------------------------------------------------------------

@dataclass(frozen=True)
class TraceRecord:
    """One wire transmission, stamped when the hop starts."""

    time: float
    from_node: str
    to_node: str
    wire_bytes: int
    mobility_bytes: int
    headers: tuple[str, ...]
    mechanism: Mechanism

    def as_dict(self) -> dict:
        return {
            "time": self.time,
            "from": self.from_node,
            "to": self.to_node,
            "wire_bytes": self.wire_bytes,
            "mobility_bytes": self.mobility_bytes,
            "headers": list(self.headers),
            "mechanism": self.mechanism.value,
        }


@dataclass(frozen=True)
class Injection:
    ulp_id: int
    node: str
    src_hoa: Address
    dst_hoa: Address
    payload: bytes
    at: float


@dataclass(frozen=True)
class Delivery:
    ulp_id: int
    to_node: str
    src_hoa: Address
    dst_hoa: Address
    payload: bytes
    sent_at: float
    delivered_at: float

    @property
    def latency(self) -> float:
        return self.delivered_at - self.sent_at


@dataclass(frozen=True)
class SimulationResult:
    trace: tuple[TraceRecord, ...]
    deliveries: tuple[Delivery, ...]
    injections: tuple[Injection, ...]
    drops: dict[str, int]
    signaling_bytes: int
    end_time: float


@dataclass
class NodeState:
    """Mutable per-node state; single-owner, mutated only by the world."""

    id: str
    role: Role
    hoa: Address
    coa: Address
    home_agent: str | None
    rot0: int
    rot1: int
    cache: BindingCache = field(default_factory=BindingCache)
    registrations: BindingCache = field(default_factory=BindingCache)
    peer_list: list[Address] = field(default_factory=list)
    received: list[UpperLayerPacket] = field(default_factory=list)
    bu_sequence: int = 0

    @property
    def at_home(self) -> bool:
        return self.coa == self.hoa


class World:
    """The simulation state: nodes, clock, event queue, accounting."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.mtu = config.mtu
        self.bt_mode = config.mechanism is Mechanism.BIDIRECTIONAL_TUNNELING
        self.clock = 0.0
        self.trace: list[TraceRecord] = []
        self.deliveries: list[Delivery] = []
        self.injections: list[Injection] = []
        self.drops: Counter[str] = Counter()
        self.signaling_bytes = 0
        self._queue: list[tuple[float, int, Action]] = []
        self._next_seq = 0
        self._next_ulp_id = 0

        self.nodes: dict[str, NodeState] = {}
        for spec in config.nodes:
            rot1, rot0 = config.effective_flags(spec)
            location = spec.initial_location or spec.home_address
            self.nodes[spec.id] = NodeState(
                id=spec.id,
                role=spec.role,
                hoa=spec.home_address,
                coa=location,
                home_agent=spec.home_agent,
                rot0=rot0,
                rot1=rot1,
            )
        for peering in config.peerings:
            self.nodes[peering.node].peer_list.append(peering.peer)

        rng = random.Random(config.seed)
        for entry in config.schedule:
            if entry.kind == "move":
                self.schedule(entry.at, Move(node=entry.node, to=entry.to))
            elif entry.kind == "bu_refresh":
                self.schedule(entry.at, BuRefresh(node=entry.node))
            elif entry.kind == "send":
                payload = rng.randbytes(entry.payload_size)
                self.schedule(
                    entry.at,
                    SendUlp(node=entry.node, dst_hoa=entry.dst, payload=payload),
                )

    # -- scheduling -------------------------------------------------------------

    def schedule(self, at: float, action: Action) -> None:
        heapq.heappush(self._queue, (at, self._next_seq, action))
        self._next_seq += 1

    def pending_events(self) -> int:
        return len(self._queue)

    def default_horizon(self) -> float:
        last = max((e.at for e in self.config.schedule), default=0.0)
        return last + DEFAULT_HORIZON_SLACK

    # -- helpers ----------------------------------------------------------------

    def _node_by_hoa(self, hoa: Address) -> NodeState | None:
        for node in self.nodes.values():
            if node.hoa == hoa:
                return node
        return None

    def _context(self, node: NodeState) -> EndpointContext:
        ha_addr = self.nodes[node.home_agent].hoa if node.home_agent else None
        return EndpointContext(
            hoa=node.hoa, coa=node.coa, cache=node.cache, home_agent=ha_addr
        )

    def _stance(self, node: NodeState) -> Mechanism:
        """Receive-side mechanism this node announced in its BUs."""
        if self.bt_mode:
            return Mechanism.BIDIRECTIONAL_TUNNELING
        return select_mechanism(node.rot1, node.rot0)

    def _resolve_next_hop(self, destination: Address) -> NodeState | None:
        for node in self.nodes.values():
            if node.role is Role.HOME_AGENT:
                entry = node.registrations.live_entry(destination, self.clock)
                if entry is not None and entry.coa != destination:
                    return node
        for node in self.nodes.values():
            if node.coa == destination:
                return node
        return None

    def _record(
        self, from_node: str, to_node: str, wire: Packet, mechanism: Mechanism
    ) -> int:
        data = encode_packet(wire, mtu=self.mtu)
        mobility = len(data) - 40 - len(innermost_payload(wire))
        self.trace.append(
            TraceRecord(
                time=self.clock,
                from_node=from_node,
                to_node=to_node,
                wire_bytes=len(data),
                mobility_bytes=mobility,
                headers=header_kinds(wire),
                mechanism=mechanism,
            )
        )
        return len(data)

    def _transmit(
        self,
        from_node: str,
        to_node: str,
        wire: Packet,
        mechanism: Mechanism,
        ulp_id: int | None,
        sent_at: float | None,
    ) -> None:
        """Trace one hop and schedule its arrival one unit from now."""
        self._record(from_node, to_node, wire, mechanism)
        self.schedule(
            self.clock + 1.0,
            Deliver(
                to=to_node, wire=wire, mechanism=mechanism, ulp_id=ulp_id, sent_at=sent_at
            ),
        )

    # -- event execution ----------------------------------------------------------

    def step(self) -> None:
        """Pop and execute exactly one event. The queue must not be empty."""
        if not self._queue:
            raise RuntimeError("step() on an empty event queue")
        at, _seq, action = heapq.heappop(self._queue)
        self.clock = at
        if isinstance(action, Move):
            self._do_move(self.nodes[action.node], action.to)
        elif isinstance(action, BuRefresh):
            node = self.nodes[action.node]
            self._do_move(node, node.coa)
        elif isinstance(action, SendUlp):
            self._do_send(self.nodes[action.node], action.dst_hoa, action.payload)
        elif isinstance(action, Deliver):
            self._do_deliver(action)
        elif isinstance(action, BindingExpiry):
            node = self.nodes[action.node]
            store = node.registrations if node.role is Role.HOME_AGENT else node.cache
            store.remove(action.hoa)
        else:  # pragma: no cover - the Action union is closed
            raise TypeError(f"unknown action {action!r}")

    def _do_move(self, node: NodeState, to: Address) -> None:
        node.coa = to
        node.bu_sequence += 1
        bu = BindingUpdate(
            hoa=node.hoa,
            coa=node.coa,
            sequence=node.bu_sequence,
            lifetime=self.config.bu_lifetime,
            rot0=node.rot0,
            rot1=node.rot1,
        )
        mechanism = self._stance(node)
        targets: list[NodeState] = []
        if node.home_agent is not None:
            targets.append(self.nodes[node.home_agent])
        for peer_hoa in node.peer_list:
            peer = self._node_by_hoa(peer_hoa)
            if peer is not None:
                targets.append(peer)
        for target in targets:
            wire = binding_update_packet(bu, source=node.coa, destination=target.hoa)
            self.signaling_bytes += self._record(node.id, target.id, wire, mechanism)
            self.schedule(
                self.clock + 1.0, Deliver(to=target.id, wire=wire, mechanism=mechanism)
            )

    def _do_send(self, node: NodeState, dst_hoa: Address, payload: bytes) -> None:
        ulp = UpperLayerPacket(src_hoa=node.hoa, dst_hoa=dst_hoa, payload=payload)
        ulp_id = self._next_ulp_id
        self._next_ulp_id += 1
        self.injections.append(
            Injection(
                ulp_id=ulp_id,
                node=node.id,
                src_hoa=ulp.src_hoa,
                dst_hoa=ulp.dst_hoa,
                payload=payload,
                at=self.clock,
            )
        )
        ctx = self._context(node)
        if self.bt_mode:
            wire = bt_outbound(ulp, ctx)
            mechanism = Mechanism.BIDIRECTIONAL_TUNNELING
        else:
            entry = node.cache.live_entry(dst_hoa, self.clock)
            if entry is None:
                wire = ro_outbound(ulp, ctx, self.clock)
                mechanism = Mechanism.ROUTE_OPTIMIZATION
            else:
                mechanism = select_mechanism(entry.rot1, entry.rot0)
                outbound = {
                    Mechanism.ROUTE_OPTIMIZATION: ro_outbound,
                    Mechanism.TUNNELING_ROUTE_OPTIMIZATION: tro_outbound,
                    Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION: itro_outbound,
                }[mechanism]
                wire = outbound(ulp, ctx, self.clock)
        next_hop = self._resolve_next_hop(wire.base.destination)
        if next_hop is None:
            self.drops["unroutable"] += 1
            return
        self._transmit(node.id, next_hop.id, wire, mechanism, ulp_id, self.clock)

    def _do_deliver(self, ev: Deliver) -> None:
        node = self.nodes[ev.to]
        wire = ev.wire
        if is_binding_update(wire):
            bu = binding_update_from_packet(wire)
            store = node.registrations if node.role is Role.HOME_AGENT else node.cache
            store.apply_update(bu, self.clock)
            return
        if node.role is Role.HOME_AGENT:
            try:
                forwarded = ha_forward(wire, node.hoa, node.registrations, self.clock)
            except NoBindingError:
                self.drops["no_binding"] += 1
                return
            except MisdeliveryError:
                self.drops["misdelivery"] += 1
                return
            next_hop = self._resolve_next_hop(forwarded.base.destination)
            if next_hop is None:
                self.drops["unroutable"] += 1
                return
            self._transmit(
                node.id, next_hop.id, forwarded, ev.mechanism, ev.ulp_id, ev.sent_at
            )
            return
        try:
            ulp = self._endpoint_receive(node, wire)
        except UnknownSenderError:
            self.drops["unknown_sender"] += 1
            return
        except AmbiguousCoaError:
            self.drops["ambiguous_coa"] += 1
            return
        except MisdeliveryError:
            self.drops["misdelivery"] += 1
            return
        node.received.append(ulp)
        self.deliveries.append(
            Delivery(
                ulp_id=ev.ulp_id if ev.ulp_id is not None else -1,
                to_node=node.id,
                src_hoa=ulp.src_hoa,
                dst_hoa=ulp.dst_hoa,
                payload=ulp.payload,
                sent_at=ev.sent_at if ev.sent_at is not None else self.clock,
                delivered_at=self.clock,
            )
        )

    def _endpoint_receive(self, node: NodeState, wire: Packet) -> UpperLayerPacket:
        """Structure-driven inbound dispatch for a data packet."""
        ctx = self._context(node)
        if wire.inner is not None:
            inner = wire.inner
            if inner.home_address_option is not None or inner.type2_routing is not None:
                # A home agent tunnelled a route-optimization packet here.
                if wire.base.destination != node.coa:
                    raise MisdeliveryError(
                        f"tunnel for {wire.base.destination} arrived at {node.coa}"
                    )
                return ro_inbound(inner, ctx)
            return bt_inbound(wire, ctx)
        if wire.home_address_option is not None or wire.type2_routing is not None:
            return ro_inbound(wire, ctx)
        if (
            not self.bt_mode
            and self._stance(node) is Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION
        ):
            return itro_inbound(wire, ctx, self.clock)
        if wire.base.destination == node.hoa:
            return UpperLayerPacket(
                src_hoa=wire.base.source,
                dst_hoa=wire.base.destination,
                payload=wire.payload,
            )
        raise MisdeliveryError(
            f"bare packet for {wire.base.destination} arrived at {node.id}"
        )

    # -- driving ------------------------------------------------------------------

    def run_until_quiescent(self, max_time: float | None = None) -> SimulationResult:
        """Process events until the queue drains; error if the horizon cuts it off."""
        horizon = max_time if max_time is not None else self.default_horizon()
        while self._queue and self._queue[0][0] <= horizon:
            self.step()
        if self._queue:
            pending = [
                (at, type(action).__name__) for at, _seq, action in sorted(self._queue)
            ]
            raise HorizonExceededError(horizon, pending)
        return SimulationResult(
            trace=tuple(self.trace),
            deliveries=tuple(self.deliveries),
            injections=tuple(self.injections),
            drops=dict(self.drops),
            signaling_bytes=self.signaling_bytes,
            end_time=self.clock,
        )


def build_world(config: ScenarioConfig) -> World:
    """Materialize a validated scenario: nodes at their start locations, schedule queued."""
    return World(config)


def move_node(world: World, node_id: str, to: Address, at: float) -> None:
    """Schedule a movement; BUs go out when it executes."""
    if node_id not in world.nodes:
        raise KeyError(node_id)
    world.schedule(at, Move(node=node_id, to=to))


def send_ulp(world: World, node_id: str, dst_hoa: Address, payload: bytes, at: float) -> None:
    """Schedule an upper-layer send from a node's home address."""
    if node_id not in world.nodes:
        raise KeyError(node_id)
    world.schedule(at, SendUlp(node=node_id, dst_hoa=dst_hoa, payload=payload))


def step(world: World) -> None:
    world.step()


def run_until_quiescent(world: World, max_time: float | None = None) -> SimulationResult:
    return world.run_until_quiescent(max_time)


def trace_to_jsonl(trace: tuple[TraceRecord, ...] | list[TraceRecord]) -> str:
    """Render trace records as JSON Lines, one record per line."""
    return "".join(json.dumps(rec.as_dict()) + "\n" for rec in trace)
