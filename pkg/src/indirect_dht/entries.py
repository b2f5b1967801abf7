"""Entry types stored in the hash table and their binary codec.

Every stored value starts with a one-octet magic number::

    0x01  direct    len:u16  location text ("host:port/path")
    0x02  indirect  host_id:20 octets  len:u16  path text
    0x03  host      len:u16  address text ("host:port")

Lengths are big-endian and count UTF-8 octets.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Union

from indirect_dht.errors import (
    EntryEncodingError,
    EntryValidationError,
    ForeignEntryError,
    FramingError,
)
from indirect_dht.identifiers import ID_BYTES, Identifier

MAGIC_DIRECT = 0x01
MAGIC_INDIRECT = 0x02
MAGIC_HOST = 0x03

MAX_FIELD_OCTETS = 0xFFFF

_U16 = struct.Struct(">H")


def check_path(path: str) -> str:
    if not isinstance(path, str) or not path.startswith("/"):
        raise EntryValidationError(f"path must start with '/': {path!r}")
    try:
        path.encode("utf-8")
    except UnicodeEncodeError as exc:
        raise EntryValidationError(f"path is not valid UTF-8 text: {exc}") from exc
    return path


@dataclass(frozen=True)
class HostAddress:
    host: str
    port: int

    def __post_init__(self):
        if not isinstance(self.host, str) or not self.host:
            raise EntryValidationError("host must be a non-empty string")
        if any(ch.isspace() for ch in self.host) or "/" in self.host:
            raise EntryValidationError(f"host may not contain whitespace or '/': {self.host!r}")
        if isinstance(self.port, bool) or not isinstance(self.port, int) or not 1 <= self.port <= 65535:
            raise EntryValidationError(f"port must be an integer in [1, 65535], got {self.port!r}")
        try:
            self.host.encode("utf-8")
        except UnicodeEncodeError as exc:
            raise EntryValidationError(f"host is not valid UTF-8 text: {exc}") from exc

    @classmethod
    def parse(cls, text: str) -> HostAddress:
        host, sep, port = text.rpartition(":")
        if not sep or not host:
            raise EntryValidationError(f"expected host:port, got {text!r}")
        if not port.isascii() or not port.isdigit():
            raise EntryValidationError(f"invalid port in {text!r}")
        return cls(host, int(port))

    def __str__(self) -> str:
        return f"{self.host}:{self.port}"


@dataclass(frozen=True)
class NetworkLocation:
    address: HostAddress
    path: str

    def __post_init__(self):
        check_path(self.path)

    @classmethod
    def parse(cls, text: str) -> NetworkLocation:
        slash = text.find("/")
        if slash < 0:
            raise EntryValidationError(f"location needs a path: {text!r}")
        return cls(HostAddress.parse(text[:slash]), text[slash:])

    def __str__(self) -> str:
        return f"{self.address}{self.path}"


@dataclass(frozen=True)
class DirectEntry:
    location: NetworkLocation


@dataclass(frozen=True)
class IndirectEntry:
    host_id: Identifier
    path: str

    def __post_init__(self):
        check_path(self.path)


@dataclass(frozen=True)
class HostEntry:
    address: HostAddress


Entry = Union[DirectEntry, IndirectEntry, HostEntry]


def _text_field(text: str) -> bytes:
    data = text.encode("utf-8")
    if len(data) > MAX_FIELD_OCTETS:
        raise EntryEncodingError(f"text field of {len(data)} octets exceeds {MAX_FIELD_OCTETS}")
    return _U16.pack(len(data)) + data


def encode_entry(entry: Entry) -> bytes:
    if isinstance(entry, DirectEntry):
        return bytes([MAGIC_DIRECT]) + _text_field(str(entry.location))
    if isinstance(entry, IndirectEntry):
        return bytes([MAGIC_INDIRECT]) + entry.host_id.raw + _text_field(entry.path)
    if isinstance(entry, HostEntry):
        return bytes([MAGIC_HOST]) + _text_field(str(entry.address))
    raise TypeError(f"not an entry: {entry!r}")


def _read_text(data: bytes, offset: int) -> str:
    if len(data) < offset + 2:
        raise FramingError("truncated length prefix")
    (length,) = _U16.unpack_from(data, offset)
    end = offset + 2 + length
    if len(data) < end:
        raise FramingError(f"text field declares {length} octets, {len(data) - offset - 2} present")
    if len(data) > end:
        raise FramingError(f"{len(data) - end} trailing octets after entry")
    try:
        return data[offset + 2:end].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EntryValidationError(f"invalid UTF-8: {exc}") from exc


def decode_entry(data: bytes) -> Entry:
    """Inverse of :func:`encode_entry`.

    Raises ForeignEntryError for an unknown magic, FramingError for
    truncated or overlong input and EntryValidationError for bad contents.
    """
    if not data:
        raise FramingError("empty value")
    magic = data[0]
    if magic == MAGIC_DIRECT:
        return DirectEntry(NetworkLocation.parse(_read_text(data, 1)))
    if magic == MAGIC_INDIRECT:
        if len(data) < 1 + ID_BYTES:
            raise FramingError("truncated host identifier")
        host_id = Identifier(bytes(data[1:1 + ID_BYTES]))
        return IndirectEntry(host_id, check_path(_read_text(data, 1 + ID_BYTES)))
    if magic == MAGIC_HOST:
        return HostEntry(HostAddress.parse(_read_text(data, 1)))
    raise ForeignEntryError(magic)
