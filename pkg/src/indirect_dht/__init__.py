"""Resolution of random resource identifiers through a distributed hash table.

Resources on a mobile host are published either as *direct* entries (the
full network location) or as *indirect* entries (host identifier plus path)
backed by a single *host* entry, so that a host migration rewrites one
record instead of one per resource.
"""

from indirect_dht.identifiers import Identifier, decode_hex, encode_hex, generate_identifier
from indirect_dht.entries import (
    DirectEntry,
    HostAddress,
    HostEntry,
    IndirectEntry,
    NetworkLocation,
    decode_entry,
    encode_entry,
)
from indirect_dht.dht import DhtBackend, LatencyModel, MemoryStore, SimulatedDht, freshest
from indirect_dht.resolver import (
    HostProfile,
    Strategy,
    migrate,
    publish_direct,
    publish_host,
    publish_indirect,
    publish_profile,
    resolve,
)
from indirect_dht.cost_model import CostParams, CostReport, Recommendation, recommend

__version__ = "0.1.0"

__all__ = [
    "CostParams",
    "CostReport",
    "DhtBackend",
    "DirectEntry",
    "HostAddress",
    "HostEntry",
    "HostProfile",
    "Identifier",
    "IndirectEntry",
    "LatencyModel",
    "MemoryStore",
    "NetworkLocation",
    "Recommendation",
    "SimulatedDht",
    "Strategy",
    "decode_entry",
    "decode_hex",
    "encode_entry",
    "encode_hex",
    "freshest",
    "generate_identifier",
    "migrate",
    "publish_direct",
    "publish_host",
    "publish_indirect",
    "publish_profile",
    "recommend",
    "resolve",
]
