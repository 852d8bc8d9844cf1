"""Scenario files: a versioned JSON description of a world and its schedule.

Top-level shape (version 1):

    {
      "version": 1,
      "mtu": 1500,
      "seed": 7,
      "bu_lifetime": 100,
      "mechanism": "itro",
      "nodes": [
        {"id": "ha-mn", "role": "home_agent", "home_address": "2001:db8:1::1"},
        {"id": "mn", "role": "mobile", "home_address": "2001:db8:1::10",
         "home_agent": "ha-mn", "rot1": 1, "rot0": 1},
        ...
      ],
      "peerings": [{"node": "mn", "peer": "2001:db8:2::10"}, ...],
      "schedule": [
        {"at": 0, "kind": "move", "node": "mn", "to": "2001:db8:a::10"},
        {"at": 2, "kind": "send", "node": "mn", "dst": "2001:db8:2::10",
         "payload_size": 1460},
        {"at": 5, "kind": "bu_refresh", "node": "mn"}
      ]
    }

"mechanism" set to "bt" forces bidirectional tunneling for everyone;
any other value only provides default rot flags for nodes that do not
set their own (the mechanism actually used between two endpoints is
negotiated from the flags the peer announced in its binding updates).
Send payloads are given by size; the bytes are drawn from a generator
seeded with "seed", so a scenario always injects identical traffic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from .binding import Mechanism, mechanism_from_name, select_mechanism
from .packet import Address, BASE_HEADER_SIZE, EXTENSION_HEADER_SIZE, MIN_MTU

SCENARIO_VERSION = 1
DEFAULT_BU_LIFETIME = 100

# Worst-case overhead on any single hop over the bare upper-layer packet.
# Bidirectional tunneling adds 40 twice end to end, but one leg at a time.
MECHANISM_OVERHEAD_BYTES = {
    Mechanism.BIDIRECTIONAL_TUNNELING: BASE_HEADER_SIZE,
    Mechanism.ROUTE_OPTIMIZATION: 2 * EXTENSION_HEADER_SIZE,
    Mechanism.TUNNELING_ROUTE_OPTIMIZATION: BASE_HEADER_SIZE,
    Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION: 0,
}


class ScenarioParseError(Exception):
    """The file is not syntactically a scenario (bad JSON, wrong root type)."""


class ScenarioValidationError(Exception):
    """The scenario parsed but violates the schema; carries all findings."""

    def __init__(self, findings: list[str]):
        super().__init__(findings[0] if findings else "invalid scenario")
        self.findings = findings


class Role(Enum):
    MOBILE = "mobile"
    CORRESPONDENT = "correspondent"
    HOME_AGENT = "home_agent"


@dataclass(frozen=True)
class NodeSpec:
    id: str
    role: Role
    home_address: Address
    home_agent: str | None = None
    initial_location: Address | None = None
    rot0: int | None = None
    rot1: int | None = None


@dataclass(frozen=True)
class Peering:
    node: str
    peer: Address


@dataclass(frozen=True)
class ScheduleEntry:
    at: float
    kind: str                      # move | send | bu_refresh
    node: str
    to: Address | None = None      # move
    dst: Address | None = None     # send
    payload_size: int = 0          # send


@dataclass(frozen=True)
class ScenarioConfig:
    mtu: int = 1500
    seed: int = 0
    bu_lifetime: int = DEFAULT_BU_LIFETIME
    mechanism: Mechanism | None = None
    nodes: tuple[NodeSpec, ...] = ()
    peerings: tuple[Peering, ...] = ()
    schedule: tuple[ScheduleEntry, ...] = ()

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def node_by_hoa(self, hoa: Address) -> NodeSpec | None:
        for n in self.nodes:
            if n.home_address == hoa:
                return n
        return None

    def effective_flags(self, node: NodeSpec) -> tuple[int, int]:
        """(rot1, rot0) the node announces, falling back to scenario defaults."""
        default_rot1, default_rot0 = 0, 0
        if self.mechanism is Mechanism.TUNNELING_ROUTE_OPTIMIZATION:
            default_rot1, default_rot0 = 0, 1
        elif self.mechanism is Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION:
            default_rot1, default_rot0 = 1, 1
        rot1 = node.rot1 if node.rot1 is not None else default_rot1
        rot0 = node.rot0 if node.rot0 is not None else default_rot0
        return rot1, rot0

    def with_mtu(self, mtu: int) -> ScenarioConfig:
        return replace(self, mtu=mtu)

    def with_seed(self, seed: int) -> ScenarioConfig:
        return replace(self, seed=seed)


def _parse_address(value: object, where: str, findings: list[str]) -> Address | None:
    if not isinstance(value, str):
        findings.append(f"{where}: expected an IPv6 address string")
        return None
    try:
        return Address(value)
    except ValueError:
        findings.append(f"{where}: {value!r} is not a valid IPv6 address")
        return None


def _check_keys(obj: dict, allowed: set[str], where: str, findings: list[str]) -> None:
    for key in obj:
        if key not in allowed:
            findings.append(f"{where}: unknown field {key!r}")


def scenario_from_dict(raw: object) -> ScenarioConfig:
    """Build and validate a ScenarioConfig from parsed JSON data.

    Raises ScenarioValidationError carrying every finding at once, so a
    user fixes the file in one pass.
    """
    if not isinstance(raw, dict):
        raise ScenarioParseError("scenario root must be a JSON object")
    findings: list[str] = []
    _check_keys(
        raw,
        {"version", "mtu", "seed", "bu_lifetime", "mechanism", "nodes", "peerings", "schedule"},
        "scenario",
        findings,
    )

    version = raw.get("version")
    if version != SCENARIO_VERSION:
        findings.append(f"version: expected {SCENARIO_VERSION}, got {version!r}")

    mtu = raw.get("mtu", 1500)
    if not isinstance(mtu, int) or isinstance(mtu, bool):
        findings.append(f"mtu: expected an integer, got {mtu!r}")
        mtu = 1500
    elif mtu < MIN_MTU:
        findings.append(f"mtu: must be at least {MIN_MTU} (got {mtu})")

    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        findings.append(f"seed: expected an integer, got {seed!r}")
        seed = 0

    bu_lifetime = raw.get("bu_lifetime", DEFAULT_BU_LIFETIME)
    if not isinstance(bu_lifetime, int) or isinstance(bu_lifetime, bool):
        findings.append(f"bu_lifetime: expected an integer, got {bu_lifetime!r}")
        bu_lifetime = DEFAULT_BU_LIFETIME
    elif not 0 < bu_lifetime <= 0xFFFF:
        findings.append(f"bu_lifetime: must be in 1..65535 (got {bu_lifetime})")

    mechanism: Mechanism | None = None
    if "mechanism" in raw:
        try:
            mechanism = mechanism_from_name(raw["mechanism"])
        except (ValueError, TypeError):
            findings.append(f"mechanism: unknown mechanism {raw['mechanism']!r}")

    nodes: list[NodeSpec] = []
    raw_nodes = raw.get("nodes", [])
    if not isinstance(raw_nodes, list) or not raw_nodes:
        findings.append("nodes: expected a non-empty list")
        raw_nodes = []
    seen_ids: set[str] = set()
    seen_addrs: set[Address] = set()
    for i, rn in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        if not isinstance(rn, dict):
            findings.append(f"{where}: expected an object")
            continue
        _check_keys(
            rn,
            {"id", "role", "home_address", "home_agent", "initial_location", "rot0", "rot1"},
            where,
            findings,
        )
        node_id = rn.get("id")
        if not isinstance(node_id, str) or not node_id:
            findings.append(f"{where}.id: expected a non-empty string")
            continue
        if node_id in seen_ids:
            findings.append(f"{where}.id: duplicate node id {node_id!r}")
            continue
        seen_ids.add(node_id)
        role_raw = rn.get("role")
        try:
            role = Role(role_raw)
        except ValueError:
            findings.append(f"{where}.role: unknown role {role_raw!r}")
            continue
        hoa = _parse_address(rn.get("home_address"), f"{where}.home_address", findings)
        if hoa is None:
            continue
        if hoa in seen_addrs:
            findings.append(f"{where}.home_address: duplicate address {hoa}")
        seen_addrs.add(hoa)
        initial = None
        if "initial_location" in rn:
            initial = _parse_address(
                rn["initial_location"], f"{where}.initial_location", findings
            )
        rot0 = rn.get("rot0")
        rot1 = rn.get("rot1")
        for name, val in (("rot0", rot0), ("rot1", rot1)):
            if val is not None and val not in (0, 1):
                findings.append(f"{where}.{name}: must be 0 or 1 (got {val!r})")
        home_agent = rn.get("home_agent")
        if home_agent is not None and not isinstance(home_agent, str):
            findings.append(f"{where}.home_agent: expected a node id string")
            home_agent = None
        nodes.append(
            NodeSpec(
                id=node_id,
                role=role,
                home_address=hoa,
                home_agent=home_agent,
                initial_location=initial,
                rot0=rot0 if rot0 in (0, 1) else None,
                rot1=rot1 if rot1 in (0, 1) else None,
            )
        )

    by_id = {n.id: n for n in nodes}
    endpoint_hoas = {n.home_address for n in nodes if n.role is not Role.HOME_AGENT}

    for i, n in enumerate(nodes):
        where = f"nodes[{i}]"
        if n.role is Role.HOME_AGENT:
            if n.home_agent is not None:
                findings.append(f"{where}.home_agent: a home agent has no home agent")
            if n.initial_location is not None and n.initial_location != n.home_address:
                findings.append(f"{where}.initial_location: home agents never leave home")
        elif n.home_agent is not None:
            agent = by_id.get(n.home_agent)
            if agent is None:
                findings.append(f"{where}.home_agent: unknown node id {n.home_agent!r}")
            elif agent.role is not Role.HOME_AGENT:
                findings.append(
                    f"{where}.home_agent: node {n.home_agent!r} is not a home agent"
                )
        if n.role is Role.MOBILE and n.home_agent is None:
            findings.append(f"{where}.home_agent: mobile nodes need a home agent")

    peerings: list[Peering] = []
    raw_peerings = raw.get("peerings", [])
    if not isinstance(raw_peerings, list):
        findings.append("peerings: expected a list")
        raw_peerings = []
    for i, rp in enumerate(raw_peerings):
        where = f"peerings[{i}]"
        if not isinstance(rp, dict):
            findings.append(f"{where}: expected an object")
            continue
        _check_keys(rp, {"node", "peer"}, where, findings)
        node_id = rp.get("node")
        node = by_id.get(node_id) if isinstance(node_id, str) else None
        if node is None:
            findings.append(f"{where}.node: unknown node id {node_id!r}")
            continue
        if node.role is Role.HOME_AGENT:
            findings.append(f"{where}.node: home agents keep registrations, not peers")
            continue
        peer = _parse_address(rp.get("peer"), f"{where}.peer", findings)
        if peer is None:
            continue
        if peer not in endpoint_hoas:
            findings.append(f"{where}.peer: {peer} is no endpoint's home address")
            continue
        if peer == node.home_address:
            findings.append(f"{where}.peer: node {node_id!r} cannot peer with itself")
            continue
        peerings.append(Peering(node=node_id, peer=peer))

    schedule: list[ScheduleEntry] = []
    raw_schedule = raw.get("schedule", [])
    if not isinstance(raw_schedule, list):
        findings.append("schedule: expected a list")
        raw_schedule = []
    for i, rs in enumerate(raw_schedule):
        where = f"schedule[{i}]"
        if not isinstance(rs, dict):
            findings.append(f"{where}: expected an object")
            continue
        at = rs.get("at")
        if not isinstance(at, (int, float)) or isinstance(at, bool) or not math.isfinite(at) or at < 0:
            findings.append(f"{where}.at: expected a finite non-negative time")
            continue
        kind = rs.get("kind")
        node_id = rs.get("node")
        node = by_id.get(node_id) if isinstance(node_id, str) else None
        if node is None:
            findings.append(f"{where}.node: unknown node id {node_id!r}")
            continue
        if kind == "move":
            _check_keys(rs, {"at", "kind", "node", "to"}, where, findings)
            if node.role is Role.HOME_AGENT:
                findings.append(f"{where}: home agents never move")
                continue
            if node.home_agent is None:
                findings.append(
                    f"{where}: node {node_id!r} has no home agent to register with"
                )
                continue
            to = _parse_address(rs.get("to"), f"{where}.to", findings)
            if to is None:
                continue
            schedule.append(ScheduleEntry(at=float(at), kind="move", node=node_id, to=to))
        elif kind == "bu_refresh":
            _check_keys(rs, {"at", "kind", "node"}, where, findings)
            if node.role is Role.HOME_AGENT:
                findings.append(f"{where}: home agents send no binding updates")
                continue
            if node.home_agent is None:
                findings.append(
                    f"{where}: node {node_id!r} has no home agent to register with"
                )
                continue
            schedule.append(ScheduleEntry(at=float(at), kind="bu_refresh", node=node_id))
        elif kind == "send":
            _check_keys(rs, {"at", "kind", "node", "dst", "payload_size"}, where, findings)
            if node.role is Role.HOME_AGENT:
                findings.append(f"{where}: home agents do not originate data")
                continue
            dst = _parse_address(rs.get("dst"), f"{where}.dst", findings)
            if dst is None:
                continue
            if dst not in endpoint_hoas:
                findings.append(f"{where}.dst: {dst} is no endpoint's home address")
                continue
            size = rs.get("payload_size", 0)
            if not isinstance(size, int) or isinstance(size, bool) or size < 0:
                findings.append(f"{where}.payload_size: expected a non-negative integer")
                continue
            schedule.append(
                ScheduleEntry(at=float(at), kind="send", node=node_id, dst=dst, payload_size=size)
            )
        else:
            findings.append(f"{where}.kind: unknown kind {kind!r}")

    config = ScenarioConfig(
        mtu=mtu,
        seed=seed,
        bu_lifetime=bu_lifetime,
        mechanism=mechanism,
        nodes=tuple(nodes),
        peerings=tuple(peerings),
        schedule=tuple(schedule),
    )
    findings.extend(payload_findings(config))
    if findings:
        raise ScenarioValidationError(findings)
    return config


def payload_findings(config: ScenarioConfig) -> list[str]:
    """Check each send against the stance the receiving peer announces.

    The cap uses the negotiated mechanism's nominal overhead; a cold
    cache can still overflow via the route-optimization fallback at run
    time, which the codec reports as an oversize error.
    """
    findings = []
    for i, entry in enumerate(config.schedule):
        if entry.kind != "send" or entry.dst is None:
            continue
        peer = config.node_by_hoa(entry.dst)
        if peer is None:
            continue
        if config.mechanism is Mechanism.BIDIRECTIONAL_TUNNELING:
            stance = Mechanism.BIDIRECTIONAL_TUNNELING
        else:
            rot1, rot0 = config.effective_flags(peer)
            stance = select_mechanism(rot1, rot0)
        cap = config.mtu - BASE_HEADER_SIZE - MECHANISM_OVERHEAD_BYTES[stance]
        if entry.payload_size > cap:
            findings.append(
                f"schedule[{i}].payload_size: {entry.payload_size} exceeds the "
                f"{stance.value} cap of {cap} at mtu {config.mtu}"
            )
    return findings


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read, parse and validate one scenario file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(
            f"line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return scenario_from_dict(raw)


# -- bundled comparison scenarios ----------------------------------------------

_COMPARISON_ADDRESSES = {
    "mn": ("2001:db8:1::10", "2001:db8:a::10"),
    "cn": ("2001:db8:2::10", "2001:db8:b::10"),
    "ha-mn": "2001:db8:1::1",
    "ha-cn": "2001:db8:2::1",
}

_FLAGS = {
    Mechanism.ROUTE_OPTIMIZATION: (0, 0),
    Mechanism.TUNNELING_ROUTE_OPTIMIZATION: (0, 1),
    Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION: (1, 1),
}


def full_mtu_payload(mechanism: Mechanism, mtu: int = 1500) -> int:
    """Payload size whose wire packet fills the MTU exactly under this mechanism."""
    return mtu - BASE_HEADER_SIZE - MECHANISM_OVERHEAD_BYTES[mechanism]


def comparison_scenario_dict(mechanism: Mechanism, mtu: int = 1500, seed: int = 0) -> dict:
    """Raw dict form of one bundled comparison scenario.

    Two mobile endpoints, one home agent each. Both move to foreign
    networks at t=0, so by t=1 every cache and registration is primed;
    at t=2 one full-MTU packet goes from mn to cn.
    """
    mn_home, mn_away = _COMPARISON_ADDRESSES["mn"]
    cn_home, cn_away = _COMPARISON_ADDRESSES["cn"]
    nodes = [
        {"id": "ha-mn", "role": "home_agent", "home_address": _COMPARISON_ADDRESSES["ha-mn"]},
        {"id": "ha-cn", "role": "home_agent", "home_address": _COMPARISON_ADDRESSES["ha-cn"]},
        {"id": "mn", "role": "mobile", "home_address": mn_home, "home_agent": "ha-mn"},
        {"id": "cn", "role": "mobile", "home_address": cn_home, "home_agent": "ha-cn"},
    ]
    if mechanism in _FLAGS:
        rot1, rot0 = _FLAGS[mechanism]
        for node in nodes:
            if node["role"] != "home_agent":
                node["rot1"] = rot1
                node["rot0"] = rot0
    return {
        "version": SCENARIO_VERSION,
        "mtu": mtu,
        "seed": seed,
        "mechanism": mechanism.token,
        "nodes": nodes,
        "peerings": [
            {"node": "mn", "peer": cn_home},
            {"node": "cn", "peer": mn_home},
        ],
        "schedule": [
            {"at": 0, "kind": "move", "node": "mn", "to": mn_away},
            {"at": 0, "kind": "move", "node": "cn", "to": cn_away},
            {
                "at": 2,
                "kind": "send",
                "node": "mn",
                "dst": cn_home,
                "payload_size": full_mtu_payload(mechanism, mtu),
            },
        ],
    }


def comparison_scenario(mechanism: Mechanism, mtu: int = 1500, seed: int = 0) -> ScenarioConfig:
    """Bundled scenario for one mechanism: both endpoints away, one full-MTU packet."""
    return scenario_from_dict(comparison_scenario_dict(mechanism, mtu, seed))
