"""Publishing, resolving and migrating resources over any :class:`DhtBackend`."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

from indirect_dht.dht import DEFAULT_TTL, DEFAULT_WINDOW, DhtBackend, freshest
from indirect_dht.entries import (
    DirectEntry,
    HostAddress,
    HostEntry,
    IndirectEntry,
    NetworkLocation,
    check_path,
    decode_entry,
    encode_entry,
)
from indirect_dht.errors import (
    BatchPutError,
    DanglingHostError,
    EntryError,
    ForeignEntryError,
    MalformedEntryError,
    MigrationError,
    NotFoundError,
)
from indirect_dht.identifiers import Identifier


class Strategy(str, enum.Enum):
    DIRECT = "direct"
    INDIRECT = "indirect"


@dataclass
class HostProfile:
    """Client-side record of a host and the resources it serves.

    The table cannot be enumerated, so the host keeps this list itself.
    Callers must not migrate the same profile from two threads at once.
    """

    host_id: Identifier
    address: HostAddress
    resources: list[tuple[Identifier, str]] = field(default_factory=list)
    strategy: Strategy = Strategy.INDIRECT

    def __post_init__(self):
        self.strategy = Strategy(self.strategy)
        ids = set()
        for rid, path in self.resources:
            check_path(path)
            if rid in ids:
                raise ValueError(f"duplicate resource id {rid}")
            ids.add(rid)
        if self.host_id in ids:
            raise ValueError("host id collides with a resource id")

    def location_of(self, path: str, address: HostAddress | None = None) -> NetworkLocation:
        return NetworkLocation(address or self.address, path)


class MigrationResult(NamedTuple):
    elapsed: float  # ms
    ops_issued: int


def publish_direct(backend: DhtBackend, resource_id: Identifier, location: NetworkLocation, ttl: float = DEFAULT_TTL) -> None:
    backend.put(resource_id, encode_entry(DirectEntry(location)), ttl)


def publish_indirect(backend: DhtBackend, resource_id: Identifier, host_id: Identifier, path: str, ttl: float = DEFAULT_TTL) -> None:
    backend.put(resource_id, encode_entry(IndirectEntry(host_id, path)), ttl)


def publish_host(backend: DhtBackend, host_id: Identifier, address: HostAddress, ttl: float = DEFAULT_TTL) -> None:
    backend.put(host_id, encode_entry(HostEntry(address)), ttl)


def _direct_ops(profile: HostProfile, address: HostAddress, ttl: float):
    return [
        (rid, encode_entry(DirectEntry(NetworkLocation(address, path))), ttl)
        for rid, path in profile.resources
    ]


def publish_profile(backend: DhtBackend, profile: HostProfile, ttl: float = DEFAULT_TTL, window: int = DEFAULT_WINDOW) -> float:
    """Store every entry of ``profile`` under its strategy; returns elapsed ms."""
    start = backend.now()
    if profile.strategy is Strategy.DIRECT:
        backend.batch_put(_direct_ops(profile, profile.address, ttl), window)
    else:
        ops = [(rid, encode_entry(IndirectEntry(profile.host_id, path)), ttl) for rid, path in profile.resources]
        ops.append((profile.host_id, encode_entry(HostEntry(profile.address)), ttl))
        backend.batch_put(ops, window)
    return backend.now() - start


def _fetch(backend: DhtBackend, key: Identifier):
    value = freshest(backend.get(key))
    if value is None:
        return None
    return decode_entry(value)


def resolve(backend: DhtBackend, resource_id: Identifier) -> NetworkLocation:
    """Map a resource identifier to its current network location.

    A direct entry answers in one get. An indirect entry needs a second,
    dependent get for the host entry, whose address is joined with the
    stored path. Anything else, including a host entry or another
    application's data under the key, is reported as not found.
    """
    try:
        entry = _fetch(backend, resource_id)
    except ForeignEntryError:
        entry = None
    except EntryError as exc:
        raise MalformedEntryError(f"entry for {resource_id}: {exc}") from exc

    if isinstance(entry, DirectEntry):
        return entry.location
    if isinstance(entry, IndirectEntry):
        try:
            host = _fetch(backend, entry.host_id)
        except ForeignEntryError:
            host = None
        except EntryError as exc:
            raise MalformedEntryError(f"host entry for {entry.host_id}: {exc}") from exc
        if host is None:
            raise DanglingHostError(entry.host_id)
        if not isinstance(host, HostEntry):
            raise MalformedEntryError(f"key {entry.host_id} holds a {type(host).__name__}, not a host entry")
        return NetworkLocation(host.address, entry.path)
    raise NotFoundError(f"resource {resource_id} cannot be found")


def migrate(
    backend: DhtBackend,
    profile: HostProfile,
    new_address: HostAddress,
    ttl: float = DEFAULT_TTL,
    window: int = DEFAULT_WINDOW,
) -> MigrationResult:
    """Point every resource of ``profile`` at ``new_address``.

    Direct profiles re-put one entry per resource (freshest TTL wins on
    lookup, so nothing is deleted); indirect profiles re-put only the host
    entry. ``profile.address`` is updated only when every put succeeded.
    """
    start = backend.now()
    if profile.strategy is Strategy.DIRECT:
        ops = _direct_ops(profile, new_address, ttl)
        try:
            backend.batch_put(ops, window)
        except BatchPutError as exc:
            raise MigrationError(len(exc.completed), len(ops), exc.cause) from exc
        issued = len(ops)
    else:
        try:
            publish_host(backend, profile.host_id, new_address, ttl)
        except Exception as exc:
            raise MigrationError(0, 1, exc) from exc
        issued = 1
    elapsed = backend.now() - start
    profile.address = new_address
    return MigrationResult(elapsed, issued)


# Profile files: "host <hex-id> <strategy> <host:port>" then one "res <hex-id> <path>" per line.

def format_profile(profile: HostProfile) -> str:
    lines = [f"host {profile.host_id.hex()} {profile.strategy.value} {profile.address}"]
    for rid, path in profile.resources:
        if "\n" in path or "\r" in path:
            raise ValueError(f"path {path!r} cannot be written to a profile file")
        lines.append(f"res {rid.hex()} {path}")
    return "\n".join(lines) + "\n"


def parse_profile(text: str) -> HostProfile:
    from indirect_dht.identifiers import decode_hex

    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty profile")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "host":
        raise ValueError(f"line 1: expected 'host <id> <strategy> <host:port>', got {lines[0]!r}")
    try:
        strategy = Strategy(head[2])
    except ValueError:
        raise ValueError(f"line 1: unknown strategy {head[2]!r}") from None
    resources = []
    for lineno, line in enumerate(lines[1:], start=2):
        tag, _, rest = line.partition(" ")
        rid, _, path = rest.partition(" ")
        if tag != "res" or not path:
            raise ValueError(f"line {lineno}: expected 'res <id> <path>', got {line!r}")
        resources.append((decode_hex(rid), path))
    return HostProfile(decode_hex(head[1]), HostAddress.parse(head[3]), resources, strategy)
