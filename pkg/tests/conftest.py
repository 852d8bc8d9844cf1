"""Shared helpers: addresses, random packet generation, reference encodings.

reference_bytes() and golden_frames() re-derive the wire layout with
bare struct calls and no code shared with the packet codec, so codec
tests have independent oracles to compare against. The frames from
golden_frames() are also checked into tests/golden/ as .bin files.
"""

from __future__ import annotations

import random
import struct
from ipaddress import IPv6Address
from pathlib import Path

from mip6sim.binding import BindingUpdate, binding_update_packet
from mip6sim.packet import KIND_BINDING_UPDATE, Packet, make_packet

GOLDEN_DIR = Path(__file__).parent / "golden"


def addr(text: str) -> IPv6Address:
    return IPv6Address(text)


# The recurring four-party topology: a mobile, a correspondent, their agents.
H_MN = addr("2001:db8:1::10")
C_MN = addr("2001:db8:a::10")
HA_MN = addr("2001:db8:1::1")
H_CN = addr("2001:db8:2::10")
C_CN = addr("2001:db8:b::10")
HA_CN = addr("2001:db8:2::1")


def random_address(rng: random.Random) -> IPv6Address:
    return IPv6Address(rng.getrandbits(128))


def random_packet(rng: random.Random, mtu: int = 1500) -> Packet:
    """A structurally valid random packet within the MTU."""
    shape = rng.randrange(4)  # 0 bare, 1 extensions, 2 tunnel, 3 binding-update tag
    if shape == 3:
        return make_packet(
            random_address(rng),
            random_address(rng),
            payload=rng.randbytes(40),
            body_kind=KIND_BINDING_UPDATE,
        )
    home = random_address(rng) if (shape == 1 and rng.random() < 0.8) else None
    type2 = random_address(rng) if (shape == 1 and rng.random() < 0.8) else None
    budget = mtu - 40 - (24 if home else 0) - (24 if type2 else 0)
    if shape == 2:
        inner_home = random_address(rng) if rng.random() < 0.3 else None
        inner_budget = budget - 40 - (24 if inner_home else 0)
        inner = make_packet(
            random_address(rng),
            random_address(rng),
            payload=rng.randbytes(rng.randint(0, min(inner_budget, 200))),
            home_address=inner_home,
        )
        return make_packet(
            random_address(rng),
            random_address(rng),
            inner=inner,
            home_address=home,
            type2_home_address=type2,
        )
    return make_packet(
        random_address(rng),
        random_address(rng),
        payload=rng.randbytes(rng.randint(0, min(budget, 200))),
        home_address=home,
        type2_home_address=type2,
        hop_limit=rng.randrange(256),
    )


def _ref_base(src: IPv6Address, dst: IPv6Address, plen: int, nh: int, hl: int = 64) -> bytes:
    return src.packed + dst.packed + struct.pack(">HBB4s", plen, nh, hl, b"\0" * 4)


def _ref_ext(next_tag: int, address: IPv6Address) -> bytes:
    return struct.pack(">BB16s6s", next_tag, 24, address.packed, b"\0" * 6)


def reference_bytes(p: Packet) -> bytes:
    """Layout oracle: serialize with explicit struct packing and literal tags."""
    exts = []
    if p.inner is not None:
        body_kind = 41
    elif p.home_address_option is None and p.type2_routing is None:
        body_kind = p.base.next_header
    else:
        body_kind = 59
    if p.home_address_option is not None:
        nxt = 43 if p.type2_routing is not None else body_kind
        exts.append(_ref_ext(nxt, p.home_address_option.home_address))
    if p.type2_routing is not None:
        exts.append(_ref_ext(body_kind, p.type2_routing.home_address))
    body = reference_bytes(p.inner) if p.inner is not None else p.payload
    content = b"".join(exts) + body
    return _ref_base(p.base.source, p.base.destination, len(content), p.base.next_header, p.base.hop_limit) + content


def golden_frames() -> dict[str, bytes]:
    """Hand-assembled wire frames, frozen on disk under tests/golden/.

    Built here from struct literals only; the .bin files, these bytes
    and the codec output must all agree three ways.
    """
    frames: dict[str, bytes] = {}
    frames["empty_min.bin"] = _ref_base(H_MN, H_CN, 0, 59)
    pattern = bytes(i % 256 for i in range(1460))
    frames["bare_full.bin"] = _ref_base(H_MN, H_CN, 1460, 59) + pattern
    hello = b"route optimized hello"
    frames["ro_data.bin"] = (
        _ref_base(C_MN, C_CN, 48 + len(hello), 60)
        + _ref_ext(43, H_MN)
        + _ref_ext(59, H_CN)
        + hello
    )
    inner_payload = b"tunnelled hello"
    inner = _ref_base(H_MN, H_CN, len(inner_payload), 59) + inner_payload
    frames["tunnel_bt.bin"] = _ref_base(C_MN, HA_MN, len(inner), 41) + inner
    bu_body = struct.pack(">16s16sIHBB", H_MN.packed, C_MN.packed, 1, 100, 0b11, 0)
    frames["binding_update.bin"] = _ref_base(C_MN, HA_MN, 40, 135) + bu_body
    return frames


def golden_packets() -> dict[str, Packet]:
    """Model counterparts of golden_frames(), built through the package API."""
    pattern = bytes(i % 256 for i in range(1460))
    hello = b"route optimized hello"
    inner_payload = b"tunnelled hello"
    return {
        "empty_min.bin": make_packet(H_MN, H_CN),
        "bare_full.bin": make_packet(H_MN, H_CN, payload=pattern),
        "ro_data.bin": make_packet(
            C_MN, C_CN, payload=hello, home_address=H_MN, type2_home_address=H_CN
        ),
        "tunnel_bt.bin": make_packet(
            C_MN, HA_MN, inner=make_packet(H_MN, H_CN, payload=inner_payload)
        ),
        "binding_update.bin": binding_update_packet(
            BindingUpdate(hoa=H_MN, coa=C_MN, sequence=1, lifetime=100, rot0=1, rot1=1),
            source=C_MN,
            destination=HA_MN,
        ),
    }
