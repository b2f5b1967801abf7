"""160-bit random identifiers for resources and hosts."""

from __future__ import annotations

import secrets
import string
from dataclasses import dataclass
from typing import Callable

from indirect_dht.errors import EntropyError, IdentifierDecodeError

ID_BYTES = 20
ID_BITS = ID_BYTES * 8
HEX_LENGTH = ID_BYTES * 2

_HEX_DIGITS = frozenset(string.hexdigits)


@dataclass(frozen=True, order=True)
class Identifier:
    """An opaque 160-bit value stored as 20 big-endian octets."""

    raw: bytes

    def __post_init__(self):
        if not isinstance(self.raw, (bytes, bytearray)) or len(self.raw) != ID_BYTES:
            raise ValueError(f"identifier must be exactly {ID_BYTES} octets")
        if isinstance(self.raw, bytearray):
            object.__setattr__(self, "raw", bytes(self.raw))

    @classmethod
    def from_int(cls, value: int) -> Identifier:
        if not 0 <= value < 1 << ID_BITS:
            raise ValueError("identifier value out of range")
        return cls(value.to_bytes(ID_BYTES, "big"))

    def __int__(self) -> int:
        return int.from_bytes(self.raw, "big")

    def hex(self) -> str:
        return self.raw.hex()

    def __str__(self) -> str:
        return self.raw.hex()

    def __repr__(self) -> str:
        return f"Identifier({self.raw.hex()!r})"


def generate_identifier(entropy_source: Callable[[int], bytes] = secrets.token_bytes) -> Identifier:
    """Draw a uniformly random identifier.

    ``entropy_source(n)`` must return ``n`` random octets. The default is the
    OS CSPRNG, which is safe to call from several threads; seeded sources
    such as ``random.Random(seed).randbytes`` give reproducible runs.
    """
    try:
        raw = entropy_source(ID_BYTES)
    except (OSError, NotImplementedError) as exc:
        raise EntropyError(f"entropy source failed: {exc}") from exc
    if len(raw) != ID_BYTES:
        raise EntropyError(f"entropy source returned {len(raw)} octets, expected {ID_BYTES}")
    return Identifier(bytes(raw))


def encode_hex(ident: Identifier) -> str:
    return ident.raw.hex()


def decode_hex(text: str) -> Identifier:
    """Parse 40 hex digits (either case) into an identifier."""
    if len(text) != HEX_LENGTH:
        raise IdentifierDecodeError(
            f"identifier must be {HEX_LENGTH} hex characters, got {len(text)}",
            position=min(len(text), HEX_LENGTH),
        )
    for pos, ch in enumerate(text):
        if ch not in _HEX_DIGITS:
            raise IdentifierDecodeError(f"invalid hex character {ch!r} at position {pos}", position=pos)
    return Identifier(bytes.fromhex(text))
