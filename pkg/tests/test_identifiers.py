import random

import numpy as np
import pytest
from hypothesis import given

from indirect_dht.errors import EntropyError, IdentifierDecodeError
from indirect_dht.identifiers import ID_BITS, Identifier, decode_hex, encode_hex, generate_identifier

from conftest import identifiers


def test_successive_draws_differ():
    assert generate_identifier() != generate_identifier()


def test_hex_length():
    assert len(encode_hex(generate_identifier())) == 40


def test_million_draws_no_duplicates():
    seen = {generate_identifier().raw for _ in range(1_000_000)}
    assert len(seen) == 1_000_000


def test_bit_frequencies_are_uniform():
    raw = b"".join(generate_identifier().raw for _ in range(100_000))
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8)).reshape(100_000, ID_BITS)
    freq = bits.mean(axis=0)
    assert np.all(np.abs(freq - 0.5) <= 0.01), (freq.min(), freq.max())


def test_seeded_source_is_reproducible():
    a = generate_identifier(random.Random(5).randbytes)
    b = generate_identifier(random.Random(5).randbytes)
    assert a == b


def test_entropy_failure_is_distinct():
    def broken(n):
        raise OSError("no entropy")

    with pytest.raises(EntropyError):
        generate_identifier(broken)
    with pytest.raises(EntropyError):
        generate_identifier(lambda n: b"short")


def test_encode_zero_and_one():
    assert encode_hex(Identifier(bytes(20))) == "0" * 40
    assert encode_hex(Identifier.from_int(1)) == "0" * 39 + "1"


@given(identifiers)
def test_hex_round_trip(ident):
    text = encode_hex(ident)
    assert text == text.lower()
    assert decode_hex(text) == ident
    assert decode_hex(text.upper()) == ident
    assert Identifier.from_int(int(ident)) == ident


def test_decode_zero():
    assert decode_hex("00" * 20) == Identifier(bytes(20))


def test_decode_wrong_length():
    with pytest.raises(IdentifierDecodeError, match="40"):
        decode_hex("0" * 39)


def test_decode_bad_character_position():
    with pytest.raises(IdentifierDecodeError) as info:
        decode_hex("z" * 40)
    assert info.value.position == 0
    with pytest.raises(IdentifierDecodeError) as info:
        decode_hex("0" * 17 + "g" + "0" * 22)
    assert info.value.position == 17
    assert "position 17" in str(info.value)


def test_identifier_rejects_wrong_width():
    with pytest.raises(ValueError):
        Identifier(bytes(19))
    with pytest.raises(ValueError):
        Identifier.from_int(1 << 160)
