"""Resolver behaviour; tests taking ``backend`` run on the simulator and through a live gateway."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from indirect_dht.dht import LatencyModel, SimulatedDht
from indirect_dht.entries import (
    DirectEntry,
    HostAddress,
    HostEntry,
    IndirectEntry,
    NetworkLocation,
    encode_entry,
)
from indirect_dht.errors import (
    BatchPutError,
    DanglingHostError,
    MalformedEntryError,
    MigrationError,
    NotFoundError,
)
from indirect_dht.identifiers import Identifier, generate_identifier
from indirect_dht.resolver import (
    HostProfile,
    Strategy,
    format_profile,
    migrate,
    parse_profile,
    publish_direct,
    publish_host,
    publish_indirect,
    publish_profile,
    resolve,
)

from conftest import random_address, random_path

A = HostAddress("10.0.0.1", 8080)
B = HostAddress("10.0.0.2", 9090)


def new_id():
    return generate_identifier()


def make_profile(n, strategy, rng=None, address=A):
    rng = rng or random.Random(0)
    ids = [Identifier(rng.randbytes(20)) for _ in range(n + 1)]
    return HostProfile(ids[0], address, [(rid, f"/r/{i}") for i, rid in enumerate(ids[1:])], strategy)


# Fig. 3 conformance, both backends

def test_direct_readback(backend):
    rid = new_id()
    loc = NetworkLocation(A, "/a")
    publish_direct(backend, rid, loc, 60)
    assert resolve(backend, rid) == loc


def test_indirect_two_hop_join(backend):
    rid, hid = new_id(), new_id()
    publish_indirect(backend, rid, hid, "/docs/x", 60)
    publish_host(backend, hid, A, 60)
    assert resolve(backend, rid) == NetworkLocation(A, "/docs/x")


def test_host_entry_is_not_a_resource(backend):
    hid = new_id()
    publish_host(backend, hid, A, 60)
    with pytest.raises(NotFoundError):
        resolve(backend, hid)


def test_unknown_id_not_found(backend):
    with pytest.raises(NotFoundError):
        resolve(backend, new_id())


def test_foreign_magic_not_found(backend):
    rid = new_id()
    backend.put(rid, b"\xffsome other application", 60)
    with pytest.raises(NotFoundError):
        resolve(backend, rid)


def test_dangling_host(backend):
    rid = new_id()
    publish_indirect(backend, rid, new_id(), "/a", 60)
    with pytest.raises(DanglingHostError):
        resolve(backend, rid)


def test_malformed_entry(backend):
    rid = new_id()
    backend.put(rid, bytes([0x01, 0x00, 0x10]) + b"abc", 60)
    with pytest.raises(MalformedEntryError):
        resolve(backend, rid)


def test_chained_indirection_is_malformed(backend):
    rid, hid = new_id(), new_id()
    publish_indirect(backend, rid, hid, "/a", 60)
    publish_indirect(backend, hid, new_id(), "/b", 60)
    with pytest.raises(MalformedEntryError):
        resolve(backend, rid)


def test_direct_entry_under_host_id_is_malformed(backend):
    rid, hid = new_id(), new_id()
    publish_indirect(backend, rid, hid, "/a", 60)
    publish_direct(backend, hid, NetworkLocation(A, "/x"), 60)
    with pytest.raises(MalformedEntryError):
        resolve(backend, rid)


def test_two_hosts(backend):
    h1, h2 = new_id(), new_id()
    r1, r2 = new_id(), new_id()
    publish_host(backend, h1, A, 60)
    publish_host(backend, h2, B, 60)
    publish_indirect(backend, r1, h1, "/one", 60)
    publish_indirect(backend, r2, h2, "/two", 60)
    assert resolve(backend, r1) == NetworkLocation(A, "/one")
    assert resolve(backend, r2) == NetworkLocation(B, "/two")


def test_host_republish_keeps_both_records(backend):
    hid = new_id()
    publish_host(backend, hid, A, 60)
    publish_host(backend, hid, B, 60)
    assert len(backend.get(hid)) == 2


def test_mixed_direct_and_indirect(backend):
    direct = make_profile(20, Strategy.DIRECT, random.Random(backend.now()), A)
    indirect = make_profile(20, Strategy.INDIRECT, random.Random(backend.now() + 1), B)
    publish_profile(backend, direct, 60)
    publish_profile(backend, indirect, 60)
    for profile, addr in ((direct, A), (indirect, B)):
        for rid, path in profile.resources:
            assert resolve(backend, rid) == NetworkLocation(addr, path)


@pytest.mark.parametrize("strategy", list(Strategy))
def test_migration_moves_every_resource(backend, strategy):
    profile = make_profile(30, strategy, random.Random(hash((strategy, backend.now()))))
    publish_profile(backend, profile, 60)
    result = migrate(backend, profile, B, 60)
    assert result.ops_issued == (30 if strategy is Strategy.DIRECT else 1)
    assert profile.address == B
    for rid, path in profile.resources:
        assert resolve(backend, rid) == NetworkLocation(B, path)
    migrate(backend, profile, A, 60)
    for rid, path in profile.resources:
        assert resolve(backend, rid) == NetworkLocation(A, path)


# timing and expiry on the virtual clock

def test_direct_publish_twice_later_wins():
    d = SimulatedDht(LatencyModel())
    rid = new_id()
    publish_direct(d, rid, NetworkLocation(A, "/a"), 60)
    publish_direct(d, rid, NetworkLocation(B, "/a"), 60)
    assert resolve(d, rid).address == B


def test_direct_publish_twice_equal_ttl_tie_break():
    d = SimulatedDht(LatencyModel.zero())
    rid = new_id()
    publish_direct(d, rid, NetworkLocation(A, "/a"), 60)
    publish_direct(d, rid, NetworkLocation(B, "/a"), 60)
    assert resolve(d, rid).address == B


def test_direct_expiry():
    d = SimulatedDht(LatencyModel.zero())
    rid = new_id()
    publish_direct(d, rid, NetworkLocation(A, "/a"), 1)
    d.advance(2000)
    with pytest.raises(NotFoundError):
        resolve(d, rid)


def test_host_entry_expiry_makes_dangling():
    d = SimulatedDht(LatencyModel.zero())
    rid, hid = new_id(), new_id()
    publish_indirect(d, rid, hid, "/a", 60)
    publish_host(d, hid, A, 1)
    d.advance(2000)
    with pytest.raises(DanglingHostError):
        resolve(d, rid)


def test_freshest_host_record_wins_after_migration():
    d = SimulatedDht(LatencyModel())
    profile = make_profile(3, Strategy.INDIRECT)
    publish_profile(d, profile, 3600)
    for target in (B, A, B):
        migrate(d, profile, target, 3600)
    rid, path = profile.resources[0]
    assert resolve(d, rid) == NetworkLocation(B, path)
    assert len(d.get(profile.host_id)) == 4


def test_lookup_elapsed(sim):
    rid, hid, rid2 = new_id(), new_id(), new_id()
    publish_direct(sim, rid, NetworkLocation(A, "/a"))
    publish_indirect(sim, rid2, hid, "/b")
    publish_host(sim, hid, A)
    t = sim.now()
    resolve(sim, rid)
    assert sim.now() - t == 230
    t = sim.now()
    resolve(sim, rid2)
    assert sim.now() - t == 460


@pytest.mark.parametrize("n", [1, 10, 5000])
def test_indirect_migration_constant(n):
    d = SimulatedDht(LatencyModel(c_p=50, c_q=100))
    profile = make_profile(n, Strategy.INDIRECT)
    publish_profile(d, profile)
    assert migrate(d, profile, B) == (150, 1)


def test_direct_migration_ten():
    d = SimulatedDht(LatencyModel(c_p=50, c_q=100))
    profile = make_profile(10, Strategy.DIRECT)
    publish_profile(d, profile)
    assert migrate(d, profile, B, window=100) == (600, 10)


def test_direct_migration_empty():
    d = SimulatedDht(LatencyModel(c_p=50, c_q=100))
    profile = make_profile(0, Strategy.DIRECT)
    assert migrate(d, profile, B) == (100, 0)
    assert profile.address == B


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 400), min_size=2, max_size=6, unique=True))
def test_migration_timing_is_affine_in_n(ns):
    c_p, c_q = 50.0, 500.0
    for n in ns:
        for strategy in Strategy:
            d = SimulatedDht(LatencyModel(c_p=c_p, c_q=c_q))
            profile = make_profile(n, strategy)
            publish_profile(d, profile)
            elapsed, issued = migrate(d, profile, B)
            if strategy is Strategy.DIRECT:
                assert (elapsed, issued) == (n * c_p + c_q, n)
            else:
                assert (elapsed, issued) == (c_p + c_q, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 40))
def test_resolution_equivalence(seed, n):
    rng = random.Random(seed)
    host_id = Identifier(rng.randbytes(20))
    resources = [(Identifier(rng.randbytes(20)), random_path(rng)) for _ in range(n)]
    addr = random_address(rng)
    results = {}
    for strategy in Strategy:
        d = SimulatedDht(LatencyModel.zero())
        publish_profile(d, HostProfile(host_id, addr, resources, strategy))
        results[strategy] = [resolve(d, rid) for rid, _ in resources]
    assert results[Strategy.DIRECT] == results[Strategy.INDIRECT]


class FailingDht(SimulatedDht):
    def __init__(self, fail_at):
        super().__init__(LatencyModel.zero())
        self.fail_at = fail_at

    def batch_put(self, ops, window=100):
        super().batch_put(ops[: self.fail_at], window)
        raise BatchPutError(range(self.fail_at), len(ops), ConnectionError("gateway went away"))

    def put(self, key, value, ttl=3600):
        if self.fail_at == 0:
            raise ConnectionError("gateway went away")
        super().put(key, value, ttl)


def test_partial_direct_migration_reports_completed():
    d = FailingDht(fail_at=4)
    profile = make_profile(10, Strategy.DIRECT)
    with pytest.raises(MigrationError) as info:
        migrate(d, profile, B)
    assert (info.value.completed, info.value.total) == (4, 10)
    assert profile.address == A


def test_failed_indirect_migration_leaves_profile():
    d = FailingDht(fail_at=0)
    profile = make_profile(3, Strategy.INDIRECT)
    with pytest.raises(MigrationError) as info:
        migrate(d, profile, B)
    assert info.value.completed == 0
    assert profile.address == A


def test_profile_invariants():
    rid = new_id()
    with pytest.raises(ValueError):
        HostProfile(new_id(), A, [(rid, "/a"), (rid, "/b")])
    hid = new_id()
    with pytest.raises(ValueError):
        HostProfile(hid, A, [(hid, "/a")])
    with pytest.raises(ValueError):
        HostProfile(hid, A, [(rid, "nope")])


def test_profile_file_round_trip():
    profile = make_profile(5, Strategy.DIRECT)
    profile.resources.append((new_id(), "/with space/x"))
    text = format_profile(profile)
    assert text.splitlines()[0] == f"host {profile.host_id.hex()} direct 10.0.0.1:8080"
    assert text.splitlines()[1] == f"res {profile.resources[0][0].hex()} /r/0"
    again = parse_profile(text)
    assert again == profile


@pytest.mark.parametrize(
    "text",
    ["", "host abc direct h:1\n", "host " + "0" * 40 + " sideways h:1\n", "host " + "0" * 40 + " direct h:1\nres x\n"],
)
def test_profile_file_errors(text):
    with pytest.raises(ValueError):
        parse_profile(text)
