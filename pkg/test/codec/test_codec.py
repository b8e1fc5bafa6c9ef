import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zkcbridge.codec import (
    MAX_PAYLOAD_LENGTH,
    RECEIPT_LENGTH,
    BoundPayload,
    ReceiptPayload,
    Vaa,
    VaaBody,
    decode_receipt,
    decode_vaa,
    encode_bound_payload,
    encode_receipt,
    encode_vaa,
    parse_bound_payload,
    receipt_from_dict,
    receipt_to_dict,
    serialize_vaa_body,
    vaa_body_hash,
    vaa_from_dict,
    vaa_to_dict,
)
from zkcbridge.crypto import keccak256
from zkcbridge.errors import (
    CodecError,
    MalformedReceipt,
    MalformedVaa,
    PayloadTooLarge,
    PayloadTooShort,
    UnsupportedVersion,
)


def _random_vaa(rng: np.random.Generator) -> Vaa:
    body = VaaBody(
        version=int(rng.integers(0, 256)),
        guardian_set_index=int(rng.integers(0, 2**32)),
        timestamp=int(rng.integers(0, 2**32)),
        nonce=int(rng.integers(0, 2**32)),
        emitter_chain=int(rng.integers(0, 2**16)),
        emitter_address=rng.bytes(32),
        sequence=int(rng.integers(0, 2**63)) * 2 + int(rng.integers(0, 2)),
        consistency_level=int(rng.integers(0, 256)),
        payload=rng.bytes(int(rng.integers(0, 120))),
    )
    count = int(rng.integers(0, 6))
    indices = sorted(int(i) for i in rng.choice(256, size=count, replace=False))
    return Vaa(body=body, signatures=tuple((i, rng.bytes(65)) for i in indices))


def _random_receipt(rng: np.random.Generator) -> ReceiptPayload:
    return ReceiptPayload(
        version=int(rng.integers(0, 256)),
        orig_emitter_chain=int(rng.integers(0, 2**16)),
        orig_emitter=rng.bytes(32),
        orig_sequence=int(rng.integers(0, 2**63)),
        c=rng.bytes(32),
        aztec_key=rng.bytes(32),
        leaf_index=int.from_bytes(rng.bytes(32), "big"),
        secret_hash=rng.bytes(32),
        result_hash=rng.bytes(32),
    )


@pytest.fixture
def vaa() -> Vaa:
    """
    Fixture with a small two-signature VAA.

    Returns:
        Vaa: A VAA carrying the payload secretHash || "hello".
    """
    body = VaaBody(
        version=1,
        guardian_set_index=0,
        timestamp=1,
        nonce=0,
        emitter_chain=1,
        emitter_address=bytes(31) + b"\x01",
        sequence=0,
        consistency_level=1,
        payload=bytes(range(32)) + b"hello",
    )
    return Vaa(body=body, signatures=((0, b"\xab" * 65), (2, b"\xcd" * 65)))


@pytest.fixture
def receipt() -> ReceiptPayload:
    """
    Fixture with a version 1 receipt.

    Returns:
        ReceiptPayload: A receipt for origin sequence 5.
    """
    return ReceiptPayload(
        version=1,
        orig_emitter_chain=1,
        orig_emitter=b"\x01" * 32,
        orig_sequence=5,
        c=b"\x02" * 32,
        aztec_key=b"\x03" * 32,
        leaf_index=3,
        secret_hash=b"\x04" * 32,
        result_hash=b"\x05" * 32,
    )


def test_vaa_round_trip_many() -> None:
    """
    Test decode(encode(v)) == v over many seeded random VAAs.
    """
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        v = _random_vaa(rng)
        encoded = encode_vaa(v)
        assert len(encoded) == 6 + 66 * len(v.signatures) + 55 + len(v.body.payload)
        assert decode_vaa(encoded) == v


def test_receipt_round_trip_many() -> None:
    rng = np.random.default_rng(8)
    for _ in range(10_000):
        r = _random_receipt(rng)
        encoded = encode_receipt(r)
        assert len(encoded) == RECEIPT_LENGTH
        assert decode_receipt(encoded) == r


def test_bound_payload_round_trip_many() -> None:
    rng = np.random.default_rng(9)
    for _ in range(10_000):
        p = BoundPayload(rng.bytes(32), rng.bytes(int(rng.integers(0, 64))))
        assert parse_bound_payload(encode_bound_payload(p)) == p


def test_receipt_length_is_203(receipt: ReceiptPayload) -> None:
    assert RECEIPT_LENGTH == 203
    assert len(encode_receipt(receipt)) == 203


def test_receipt_field_offsets(receipt: ReceiptPayload) -> None:
    encoded = encode_receipt(receipt)
    assert encoded[0] == 1
    assert encoded[1:3] == b"\x00\x01"
    assert encoded[3:35] == b"\x01" * 32
    assert encoded[35:43] == (5).to_bytes(8, "big")
    assert encoded[107:139] == (3).to_bytes(32, "big")
    assert encoded[171:] == b"\x05" * 32


def test_vaa_layout(vaa: Vaa) -> None:
    """
    Test the header, signature and body layout of an encoded VAA.

    Args:
        vaa (Vaa): Two-signature VAA.
    """
    encoded = encode_vaa(vaa)
    assert encoded[0] == 1
    assert encoded[1:5] == bytes(4)
    assert encoded[5] == 2
    assert encoded[6] == 0 and encoded[7:72] == b"\xab" * 65
    assert encoded[72] == 2 and encoded[73:138] == b"\xcd" * 65
    body = encoded[138:]
    assert body == serialize_vaa_body(vaa.body)
    assert body[51:55] == (37).to_bytes(4, "big")


def test_vaa_hash_covers_body_only(vaa: Vaa) -> None:
    assert vaa.hash == keccak256(serialize_vaa_body(vaa.body))
    unsigned = Vaa(body=dataclasses.replace(vaa.body, version=2, guardian_set_index=9))
    assert unsigned.hash == vaa.hash
    assert vaa_body_hash(dataclasses.replace(vaa.body, sequence=1)) != vaa.hash


def test_body_hash_changes_with_every_byte(vaa: Vaa) -> None:
    """
    Test that flipping any single byte of the serialized body either breaks decoding or changes the hash.

    Args:
        vaa (Vaa): Two-signature VAA whose body starts at offset 138.
    """
    encoded = encode_vaa(vaa)
    body = serialize_vaa_body(vaa.body)
    start = len(encoded) - len(body)
    assert encoded[start:] == body

    rejected = 0
    for i in range(len(body)):
        flipped = bytearray(encoded)
        flipped[start + i] ^= 0xFF
        try:
            decoded = decode_vaa(bytes(flipped))
        except CodecError:
            rejected += 1
            continue
        assert decoded.hash != vaa.hash
        assert decoded.hash == vaa_body_hash(decoded.body) == keccak256(bytes(flipped[start:]))
    # only the four payload length bytes make the buffer undecodable
    assert rejected == 4


def _strictly_decoded(decode, encode, b: bytes) -> bool:
    try:
        decoded = decode(b)
    except CodecError:
        return False
    assert encode(decoded) == b
    return True


@given(st.binary(max_size=400))
def test_vaa_decoder_is_strict(b: bytes) -> None:
    _strictly_decoded(decode_vaa, encode_vaa, b)


@given(st.binary(min_size=190, max_size=216))
def test_receipt_decoder_is_strict(b: bytes) -> None:
    assert _strictly_decoded(decode_receipt, encode_receipt, b) == (len(b) == RECEIPT_LENGTH)


@given(st.binary(max_size=100))
def test_bound_payload_parse_is_strict(b: bytes) -> None:
    assert _strictly_decoded(parse_bound_payload, encode_bound_payload, b) == (len(b) >= 32)


def test_mutated_vaas_are_rejected_or_reencode_exactly() -> None:
    """
    Test decoder strictness on many seeded near-valid buffers: random VAAs with a byte flipped, a byte
    dropped or a byte appended.
    """
    rng = np.random.default_rng(10)
    accepted = 0
    for _ in range(10_000):
        buffer = bytearray(encode_vaa(_random_vaa(rng)))
        i = int(rng.integers(0, len(buffer)))
        mutation = int(rng.integers(0, 3))
        if mutation == 0:
            buffer[i] ^= int(rng.integers(1, 256))
        elif mutation == 1:
            del buffer[i]
        else:
            buffer.insert(i, int(rng.integers(0, 256)))
        accepted += _strictly_decoded(decode_vaa, encode_vaa, bytes(buffer))
    assert 0 < accepted < 10_000


def test_decode_rejects_truncation(vaa: Vaa) -> None:
    encoded = encode_vaa(vaa)
    for cut in (0, 5, 60, len(encoded) - 1):
        with pytest.raises(MalformedVaa):
            decode_vaa(encoded[:cut])


def test_decode_rejects_trailing_bytes(vaa: Vaa) -> None:
    with pytest.raises(MalformedVaa):
        decode_vaa(encode_vaa(vaa) + b"\x00")


def test_decode_rejects_unordered_signatures(vaa: Vaa) -> None:
    encoded = bytearray(encode_vaa(vaa))
    encoded[72] = 0
    with pytest.raises(MalformedVaa):
        decode_vaa(bytes(encoded))


def test_decode_rejects_oversized_length(vaa: Vaa) -> None:
    encoded = bytearray(encode_vaa(vaa))
    encoded[138 + 51 : 138 + 55] = (MAX_PAYLOAD_LENGTH + 1).to_bytes(4, "big")
    with pytest.raises(MalformedVaa):
        decode_vaa(bytes(encoded))


def test_body_rejects_large_payload(vaa: Vaa) -> None:
    with pytest.raises(PayloadTooLarge):
        dataclasses.replace(vaa.body, payload=bytes(MAX_PAYLOAD_LENGTH + 1))


def test_body_rejects_out_of_range_fields(vaa: Vaa) -> None:
    with pytest.raises(ValueError):
        dataclasses.replace(vaa.body, emitter_chain=2**16)
    with pytest.raises(ValueError):
        dataclasses.replace(vaa.body, emitter_address=bytes(31))


@pytest.mark.parametrize("length", [0, 1, 31])
def test_parse_bound_payload_too_short(length: int) -> None:
    with pytest.raises(PayloadTooShort):
        parse_bound_payload(bytes(length))


def test_parse_bound_payload_splits() -> None:
    p = parse_bound_payload(b"\x07" * 32)
    assert p.secret_hash == b"\x07" * 32
    assert p.m == b""


@given(st.binary(min_size=32, max_size=200))
def test_bound_payload_reencodes(b: bytes) -> None:
    assert encode_bound_payload(parse_bound_payload(b)) == b


@pytest.mark.parametrize("length", [0, 202, 204])
def test_decode_receipt_rejects_length(length: int) -> None:
    with pytest.raises(MalformedReceipt):
        decode_receipt(bytes(length))


def test_decode_receipt_version(receipt: ReceiptPayload) -> None:
    encoded = encode_receipt(dataclasses.replace(receipt, version=2))
    assert decode_receipt(encoded).version == 2
    with pytest.raises(UnsupportedVersion):
        decode_receipt(encoded, require_version=1)


def test_dict_forms(vaa: Vaa, receipt: ReceiptPayload) -> None:
    """
    Test the JSON-facing dictionary forms used by the command line.

    Args:
        vaa (Vaa): Two-signature VAA.
        receipt (ReceiptPayload): Version 1 receipt.
    """
    d = vaa_to_dict(vaa)
    assert d["hash"] == "0x" + vaa.hash.hex()
    assert d["payload"].startswith("0x")
    assert vaa_from_dict(d) == vaa
    assert receipt_from_dict(receipt_to_dict(receipt)) == receipt
