"""Binding updates, the binding cache, and mechanism negotiation."""

from __future__ import annotations

import random
from ipaddress import IPv6Address

import pytest

from conftest import C_CN, C_MN, H_CN, H_MN, HA_MN, random_address
from mip6sim.binding import (
    BU_BODY_SIZE,
    AmbiguousCoaError,
    BindingCache,
    BindingUpdate,
    Mechanism,
    UpdateStatus,
    binding_update_from_packet,
    binding_update_packet,
    decode_binding_update,
    encode_binding_update,
    is_binding_update,
    mechanism_from_name,
    select_mechanism,
)
from mip6sim.packet import encode_packet, make_packet


# -- negotiation -----------------------------------------------------------------

def test_select_mechanism_covers_all_flag_combinations():
    assert select_mechanism(0, 0) is Mechanism.ROUTE_OPTIMIZATION
    assert select_mechanism(0, 1) is Mechanism.TUNNELING_ROUTE_OPTIMIZATION
    assert select_mechanism(1, 0) is Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION
    assert select_mechanism(1, 1) is Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION


def test_select_mechanism_rejects_non_bits():
    with pytest.raises(ValueError):
        select_mechanism(2, 0)
    with pytest.raises(ValueError):
        select_mechanism(0, -1)


def test_mechanism_names_and_tokens():
    for mechanism in Mechanism:
        assert mechanism_from_name(mechanism.value) is mechanism
        assert mechanism_from_name(mechanism.token) is mechanism
    assert Mechanism.BIDIRECTIONAL_TUNNELING.token == "bt"
    assert Mechanism.ROUTE_OPTIMIZATION.token == "ro"
    assert Mechanism.TUNNELING_ROUTE_OPTIMIZATION.token == "tro"
    assert Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION.token == "itro"
    with pytest.raises(ValueError):
        mechanism_from_name("carrier-pigeon")


# -- binding update codec ----------------------------------------------------------

def test_bu_body_is_exactly_40_bytes_with_fixed_layout():
    bu = BindingUpdate(hoa=H_MN, coa=C_MN, sequence=7, lifetime=100, rot0=1, rot1=0)
    body = encode_binding_update(bu)
    assert len(body) == BU_BODY_SIZE == 40
    assert body[0:16] == H_MN.packed
    assert body[16:32] == C_MN.packed
    assert int.from_bytes(body[32:36], "big") == 7
    assert int.from_bytes(body[36:38], "big") == 100
    assert body[38] == 0b01
    assert body[39] == 0


def test_bu_flag_bits():
    assert encode_binding_update(BindingUpdate(H_MN, C_MN, 1, 10, rot0=0, rot1=1))[38] == 0b10
    assert encode_binding_update(BindingUpdate(H_MN, C_MN, 1, 10, rot0=1, rot1=1))[38] == 0b11


def test_bu_body_roundtrip():
    rng = random.Random(0x1234)
    for _ in range(200):
        bu = BindingUpdate(
            hoa=random_address(rng),
            coa=random_address(rng),
            sequence=rng.randrange(2**32),
            lifetime=rng.randrange(2**16),
            rot0=rng.randrange(2),
            rot1=rng.randrange(2),
        )
        assert decode_binding_update(encode_binding_update(bu)) == bu


def test_bu_body_length_is_checked():
    with pytest.raises(ValueError):
        decode_binding_update(bytes(39))
    with pytest.raises(ValueError):
        decode_binding_update(bytes(41))


def test_bu_field_validation():
    with pytest.raises(ValueError):
        BindingUpdate(hoa=H_MN, coa=C_MN, sequence=2**32, lifetime=10)
    with pytest.raises(ValueError):
        BindingUpdate(hoa=H_MN, coa=C_MN, sequence=1, lifetime=-1)
    with pytest.raises(ValueError):
        BindingUpdate(hoa=H_MN, coa=C_MN, sequence=1, lifetime=10, rot0=3)
    with pytest.raises(ValueError):
        BindingUpdate(hoa=IPv6Address("::"), coa=C_MN, sequence=1, lifetime=10)


def test_bu_wire_packet_is_80_bytes():
    bu = BindingUpdate(hoa=H_MN, coa=C_MN, sequence=3, lifetime=100)
    wire = binding_update_packet(bu, source=C_MN, destination=HA_MN)
    assert len(encode_packet(wire)) == 80
    assert is_binding_update(wire)
    assert binding_update_from_packet(wire) == bu


def test_data_packet_is_not_a_binding_update():
    data = make_packet(C_MN, C_CN, payload=bytes(40))
    assert not is_binding_update(data)
    with pytest.raises(ValueError):
        binding_update_from_packet(data)


# -- binding cache ------------------------------------------------------------------

def _bu(hoa, coa, sequence=1, lifetime=100, rot0=0, rot1=0):
    return BindingUpdate(
        hoa=hoa, coa=coa, sequence=sequence, lifetime=lifetime, rot0=rot0, rot1=rot1
    )


def test_apply_and_lookup():
    cache = BindingCache()
    assert cache.apply_update(_bu(H_MN, C_MN), now=0.0) is UpdateStatus.APPLIED
    assert len(cache) == 1
    assert cache.lookup_coa(H_MN, now=50.0) == C_MN
    entry = cache.live_entry(H_MN, now=0.0)
    assert entry is not None
    assert entry.expires_at == 100.0
    assert entry.lifetime_remaining(40.0) == 60.0


def test_entry_expires_exactly_at_lifetime():
    cache = BindingCache()
    cache.apply_update(_bu(H_MN, C_MN, lifetime=100), now=0.0)
    assert cache.lookup_coa(H_MN, now=99.999) == C_MN
    assert cache.lookup_coa(H_MN, now=100.0) is None
    assert cache.live_entry(H_MN, now=100.0) is None
    entry = cache.entries()[0]
    assert entry.lifetime_remaining(150.0) == 0.0


def test_stale_sequence_is_ignored():
    cache = BindingCache()
    cache.apply_update(_bu(H_MN, C_MN, sequence=5), now=0.0)
    assert cache.apply_update(_bu(H_MN, C_CN, sequence=4), now=1.0) is UpdateStatus.STALE
    assert cache.lookup_coa(H_MN, now=1.0) == C_MN


def test_equal_sequence_replaces():
    cache = BindingCache()
    cache.apply_update(_bu(H_MN, C_MN, sequence=5), now=0.0)
    assert cache.apply_update(_bu(H_MN, C_CN, sequence=5), now=1.0) is UpdateStatus.APPLIED
    assert cache.lookup_coa(H_MN, now=1.0) == C_CN


def test_newer_sequence_replaces_and_reups_expiry():
    cache = BindingCache()
    cache.apply_update(_bu(H_MN, C_MN, sequence=1, lifetime=10), now=0.0)
    cache.apply_update(_bu(H_MN, C_MN, sequence=2, lifetime=10), now=8.0)
    assert cache.lookup_coa(H_MN, now=15.0) == C_MN


def test_zero_lifetime_deregisters():
    cache = BindingCache()
    cache.apply_update(_bu(H_MN, C_MN, sequence=1), now=0.0)
    assert cache.apply_update(_bu(H_MN, C_MN, sequence=2, lifetime=0), now=1.0) is UpdateStatus.REMOVED
    assert len(cache) == 0
    assert cache.lookup_coa(H_MN, now=1.0) is None
    # Deregistering an absent binding is harmless.
    assert cache.apply_update(_bu(H_CN, C_CN, lifetime=0), now=1.0) is UpdateStatus.REMOVED


def test_remove():
    cache = BindingCache()
    cache.apply_update(_bu(H_MN, C_MN), now=0.0)
    cache.remove(H_MN)
    assert len(cache) == 0
    cache.remove(H_MN)  # idempotent


def test_reverse_lookup():
    cache = BindingCache()
    cache.apply_update(_bu(H_MN, C_MN), now=0.0)
    assert cache.reverse_lookup_hoa(C_MN, now=1.0) == H_MN
    assert cache.reverse_lookup_hoa(C_CN, now=1.0) is None
    assert cache.reverse_lookup_hoa(C_MN, now=100.0) is None  # expired


def test_coa_collision_keeps_cache_usable_but_poisons_reverse_lookup():
    cache = BindingCache()
    shared = C_MN
    cache.apply_update(_bu(H_MN, shared), now=0.0)
    assert not cache.degraded
    assert cache.apply_update(_bu(H_CN, shared, lifetime=10), now=0.0) is UpdateStatus.APPLIED
    assert cache.degraded
    assert cache.collided_coas == frozenset({shared})
    # Forward lookups keep working for both home addresses.
    assert cache.lookup_coa(H_MN, now=1.0) == shared
    assert cache.lookup_coa(H_CN, now=1.0) == shared
    with pytest.raises(AmbiguousCoaError):
        cache.reverse_lookup_hoa(shared, now=1.0)
    # The collision heals once one of the bindings expires.
    assert cache.reverse_lookup_hoa(shared, now=10.0) == H_MN


def test_entry_flags_survive_storage():
    cache = BindingCache()
    cache.apply_update(_bu(H_MN, C_MN, rot0=1, rot1=1), now=0.0)
    entry = cache.live_entry(H_MN, now=0.0)
    assert (entry.rot1, entry.rot0) == (1, 1)
    assert select_mechanism(entry.rot1, entry.rot0) is Mechanism.IMPROVED_TUNNELING_ROUTE_OPTIMIZATION
