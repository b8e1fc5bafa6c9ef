"""
Codec Module

Bit-exact wire formats for VAAs, the bound payload `secretHash || m` and the canonical receipt payload. All
integers are big-endian. Parsers are strict: they never read past declared lengths and reject any buffer the
encoders could not have produced.

VAA layout (Wormhole v1 header, then the hashed body):

    version u8 | guardian_set_index u32 | n u8 | n * (guardian_index u8 | signature 65)
    timestamp u32 | nonce u32 | emitter_chain u16 | emitter_address 32 | sequence u64 |
    consistency_level u8 | payload_length u32 | payload

The body hash h covers everything from `timestamp` onwards, so the header fields `version` and
`guardian_set_index` are authenticated by the verifier's guardian-set lookup rather than by h. The explicit
`payload_length` makes trailing bytes detectable.

Receipt layout (203 bytes):

    version u8 | orig_emitter_chain u16 | orig_emitter 32 | orig_sequence u64 | c 32 | aztec_key 32 |
    leaf_index u256 | secret_hash 32 | result_hash 32
"""

__all__ = [
    "MAX_PAYLOAD_LENGTH",
    "RECEIPT_LENGTH",
    "RECEIPT_VERSION",
    "VaaBody",
    "Vaa",
    "BoundPayload",
    "ReceiptPayload",
    "serialize_vaa_body",
    "encode_vaa",
    "decode_vaa",
    "vaa_body_hash",
    "encode_bound_payload",
    "parse_bound_payload",
    "encode_receipt",
    "decode_receipt",
    "vaa_to_dict",
    "vaa_from_dict",
    "receipt_to_dict",
    "receipt_from_dict",
]

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

from ..crypto import Digest32, keccak256
from ..errors import (
    MalformedReceipt,
    MalformedVaa,
    PayloadTooLarge,
    PayloadTooShort,
    UnsupportedVersion,
)

logger = logging.getLogger(__name__)

MAX_PAYLOAD_LENGTH = 64 * 1024
RECEIPT_VERSION = 1
RECEIPT_LENGTH = 1 + 2 + 32 + 8 + 32 + 32 + 32 + 32 + 32

_SIGNATURE_ENTRY = 1 + 65
_HEADER = 1 + 4 + 1
_BODY_FIXED = 4 + 4 + 2 + 32 + 8 + 1 + 4


def _check_uint(name: str, value: int, width: int) -> None:
    if not isinstance(value, int) or not 0 <= value < 1 << (8 * width):
        raise ValueError(f"{name}={value!r} does not fit in {width} unsigned bytes")


def _check_bytes32(name: str, value: bytes) -> None:
    if len(value) != 32:
        raise ValueError(f"{name} must be 32 bytes, got {len(value)}")


@dataclass(frozen=True)
class VaaBody:
    """
    Header and body fields of a VAA.

    Attributes:
        version (int): VAA format version (u8).
        guardian_set_index (int): Guardian set that signed (u32).
        timestamp (int): Observation time, seconds (u32).
        nonce (int): Emitter-chosen batch id (u32).
        emitter_chain (int): Wormhole chain id of the emitter (u16).
        emitter_address (bytes): 32-byte emitter address.
        sequence (int): Emitter sequence (u64).
        consistency_level (int): Finality flag requested by the emitter (u8).
        payload (bytes): Application payload, at most MAX_PAYLOAD_LENGTH bytes.
    """

    version: int
    guardian_set_index: int
    timestamp: int
    nonce: int
    emitter_chain: int
    emitter_address: bytes
    sequence: int
    consistency_level: int
    payload: bytes = b""

    def __post_init__(self):
        for name, width in (
            ("version", 1),
            ("guardian_set_index", 4),
            ("timestamp", 4),
            ("nonce", 4),
            ("emitter_chain", 2),
            ("sequence", 8),
            ("consistency_level", 1),
        ):
            _check_uint(name, getattr(self, name), width)
        object.__setattr__(self, "emitter_address", bytes(self.emitter_address))
        object.__setattr__(self, "payload", bytes(self.payload))
        _check_bytes32("emitter_address", self.emitter_address)
        if len(self.payload) > MAX_PAYLOAD_LENGTH:
            raise PayloadTooLarge(
                f"Payload of {len(self.payload)} bytes exceeds {MAX_PAYLOAD_LENGTH}"
            )


@dataclass(frozen=True)
class Vaa:
    """
    A signed VAA.

    Attributes:
        body (VaaBody): The attested body.
        signatures (Tuple[Tuple[int, bytes], ...]): (guardian index, 65-byte signature), indices strictly
            increasing.
    """

    body: VaaBody
    signatures: Tuple[Tuple[int, bytes], ...] = field(default_factory=tuple)

    def __post_init__(self):
        signatures = tuple((int(i), bytes(s)) for i, s in self.signatures)
        object.__setattr__(self, "signatures", signatures)
        last = -1
        for index, sig in signatures:
            _check_uint("guardian_index", index, 1)
            if index <= last:
                raise MalformedVaa("Guardian indices must be strictly increasing")
            if len(sig) != 65:
                raise MalformedVaa(f"Signature must be 65 bytes, got {len(sig)}")
            last = index
        if len(signatures) > 255:
            raise MalformedVaa("At most 255 signatures fit in a VAA")

    @property
    def hash(self) -> Digest32:
        return vaa_body_hash(self.body)


def serialize_vaa_body(body: VaaBody) -> bytes:
    return b"".join(
        [
            body.timestamp.to_bytes(4, "big"),
            body.nonce.to_bytes(4, "big"),
            body.emitter_chain.to_bytes(2, "big"),
            body.emitter_address,
            body.sequence.to_bytes(8, "big"),
            body.consistency_level.to_bytes(1, "big"),
            len(body.payload).to_bytes(4, "big"),
            body.payload,
        ]
    )


def vaa_body_hash(body: VaaBody) -> Digest32:
    """
    The VAA hash h used by the replay lock: Keccak-256 over the serialized body.

    Args:
        body (VaaBody): Body to hash.

    Returns:
        Digest32: h. Guardians sign keccak256(h).
    """
    return keccak256(serialize_vaa_body(body))


def encode_vaa(v: Vaa) -> bytes:
    parts = [
        v.body.version.to_bytes(1, "big"),
        v.body.guardian_set_index.to_bytes(4, "big"),
        len(v.signatures).to_bytes(1, "big"),
    ]
    for index, sig in v.signatures:
        parts.append(index.to_bytes(1, "big") + sig)
    parts.append(serialize_vaa_body(v.body))
    return b"".join(parts)


def decode_vaa(b: bytes) -> Vaa:
    """
    Parse an encoded VAA.

    Args:
        b (bytes): Complete encoded VAA.

    Returns:
        Vaa: The decoded VAA.

    Raises:
        MalformedVaa: On truncation, trailing bytes, bad lengths or non-increasing guardian indices.
    """
    b = bytes(b)
    if len(b) < _HEADER:
        raise MalformedVaa(f"VAA of {len(b)} bytes is shorter than its header")

    version = b[0]
    guardian_set_index = int.from_bytes(b[1:5], "big")
    count = b[5]
    offset = _HEADER
    if len(b) < offset + count * _SIGNATURE_ENTRY + _BODY_FIXED:
        raise MalformedVaa("VAA truncated before the end of its fixed fields")

    signatures = []
    for _ in range(count):
        signatures.append((b[offset], b[offset + 1 : offset + _SIGNATURE_ENTRY]))
        offset += _SIGNATURE_ENTRY

    timestamp = int.from_bytes(b[offset : offset + 4], "big")
    nonce = int.from_bytes(b[offset + 4 : offset + 8], "big")
    emitter_chain = int.from_bytes(b[offset + 8 : offset + 10], "big")
    emitter_address = b[offset + 10 : offset + 42]
    sequence = int.from_bytes(b[offset + 42 : offset + 50], "big")
    consistency_level = b[offset + 50]
    payload_length = int.from_bytes(b[offset + 51 : offset + 55], "big")
    offset += _BODY_FIXED

    if payload_length > MAX_PAYLOAD_LENGTH:
        raise MalformedVaa(f"Declared payload length {payload_length} is too large")
    if len(b) != offset + payload_length:
        raise MalformedVaa(
            f"VAA length {len(b)} does not match declared payload length {payload_length}"
        )

    body = VaaBody(
        version=version,
        guardian_set_index=guardian_set_index,
        timestamp=timestamp,
        nonce=nonce,
        emitter_chain=emitter_chain,
        emitter_address=emitter_address,
        sequence=sequence,
        consistency_level=consistency_level,
        payload=b[offset:],
    )
    return Vaa(body=body, signatures=tuple(signatures))


@dataclass(frozen=True)
class BoundPayload:
    """
    The normative VAA payload, secretHash || m.

    Attributes:
        secret_hash (bytes): 32-byte hash of the consumer's secret.
        m (bytes): Opaque user message.
    """

    secret_hash: bytes
    m: bytes = b""

    def __post_init__(self):
        object.__setattr__(self, "secret_hash", Digest32(self.secret_hash))
        object.__setattr__(self, "m", bytes(self.m))


def encode_bound_payload(p: BoundPayload) -> bytes:
    return bytes(p.secret_hash) + p.m


def parse_bound_payload(b: bytes) -> BoundPayload:
    """
    Split an attested payload into secretHash and m.

    Args:
        b (bytes): Payload bytes.

    Returns:
        BoundPayload: First 32 bytes as the secret hash, the rest as m.

    Raises:
        PayloadTooShort: If fewer than 32 bytes are given.
    """
    if len(b) < 32:
        raise PayloadTooShort(f"Bound payload needs at least 32 bytes, got {len(b)}")
    return BoundPayload(secret_hash=b[:32], m=b[32:])


@dataclass(frozen=True)
class ReceiptPayload:
    """
    Canonical receipt binding an origin message to its consumption on Aztec.

    Attributes:
        version (int): Receipt format version (1 on the normative path).
        orig_emitter_chain (int): Chain of the original emitter (u16).
        orig_emitter (bytes): 32-byte original emitter.
        orig_sequence (int): Original sequence (u64).
        c (bytes): 32-byte big-endian field commitment.
        aztec_key (bytes): 32-byte key of the enqueued message.
        leaf_index (int): Inbox leaf index (u256).
        secret_hash (bytes): 32-byte secret hash.
        result_hash (bytes): 32-byte digest of the consumption result.
    """

    version: int
    orig_emitter_chain: int
    orig_emitter: bytes
    orig_sequence: int
    c: bytes
    aztec_key: bytes
    leaf_index: int
    secret_hash: bytes
    result_hash: bytes

    def __post_init__(self):
        _check_uint("version", self.version, 1)
        _check_uint("orig_emitter_chain", self.orig_emitter_chain, 2)
        _check_uint("orig_sequence", self.orig_sequence, 8)
        _check_uint("leaf_index", self.leaf_index, 32)
        for name in ("orig_emitter", "c", "aztec_key", "secret_hash", "result_hash"):
            value = bytes(getattr(self, name))
            _check_bytes32(name, value)
            object.__setattr__(self, name, value)


def encode_receipt(r: ReceiptPayload) -> bytes:
    return b"".join(
        [
            r.version.to_bytes(1, "big"),
            r.orig_emitter_chain.to_bytes(2, "big"),
            r.orig_emitter,
            r.orig_sequence.to_bytes(8, "big"),
            r.c,
            r.aztec_key,
            r.leaf_index.to_bytes(32, "big"),
            r.secret_hash,
            r.result_hash,
        ]
    )


def decode_receipt(b: bytes, require_version: Optional[int] = None) -> ReceiptPayload:
    """
    Parse a canonical receipt payload.

    Args:
        b (bytes): Exactly RECEIPT_LENGTH bytes.
        require_version (Optional[int], optional): Version the caller insists on. Defaults to None (any).

    Returns:
        ReceiptPayload: The decoded receipt.

    Raises:
        MalformedReceipt: If the length is not RECEIPT_LENGTH.
        UnsupportedVersion: If `require_version` is given and differs from the receipt's version.
    """
    b = bytes(b)
    if len(b) != RECEIPT_LENGTH:
        raise MalformedReceipt(f"Receipt must be {RECEIPT_LENGTH} bytes, got {len(b)}")

    receipt = ReceiptPayload(
        version=b[0],
        orig_emitter_chain=int.from_bytes(b[1:3], "big"),
        orig_emitter=b[3:35],
        orig_sequence=int.from_bytes(b[35:43], "big"),
        c=b[43:75],
        aztec_key=b[75:107],
        leaf_index=int.from_bytes(b[107:139], "big"),
        secret_hash=b[139:171],
        result_hash=b[171:203],
    )
    if require_version is not None and receipt.version != require_version:
        raise UnsupportedVersion(
            f"Receipt version {receipt.version}, expected {require_version}"
        )
    return receipt


def _hex(b: bytes) -> str:
    return "0x" + bytes(b).hex()


def _unhex(text: str) -> bytes:
    return bytes.fromhex(text.removeprefix("0x"))


def vaa_to_dict(v: Vaa) -> Dict[str, Any]:
    body = v.body
    return {
        "version": body.version,
        "guardian_set_index": body.guardian_set_index,
        "signatures": [
            {"guardian_index": index, "signature": _hex(sig)}
            for index, sig in v.signatures
        ],
        "timestamp": body.timestamp,
        "nonce": body.nonce,
        "emitter_chain": body.emitter_chain,
        "emitter_address": _hex(body.emitter_address),
        "sequence": body.sequence,
        "consistency_level": body.consistency_level,
        "payload": _hex(body.payload),
        "hash": _hex(vaa_body_hash(body)),
    }


def vaa_from_dict(d: Dict[str, Any]) -> Vaa:
    body = VaaBody(
        version=d["version"],
        guardian_set_index=d["guardian_set_index"],
        timestamp=d["timestamp"],
        nonce=d["nonce"],
        emitter_chain=d["emitter_chain"],
        emitter_address=_unhex(d["emitter_address"]),
        sequence=d["sequence"],
        consistency_level=d["consistency_level"],
        payload=_unhex(d.get("payload", "")),
    )
    signatures = tuple(
        (s["guardian_index"], _unhex(s["signature"])) for s in d.get("signatures", [])
    )
    return Vaa(body=body, signatures=signatures)


def receipt_to_dict(r: ReceiptPayload) -> Dict[str, Any]:
    return {
        "version": r.version,
        "orig_emitter_chain": r.orig_emitter_chain,
        "orig_emitter": _hex(r.orig_emitter),
        "orig_sequence": r.orig_sequence,
        "c": _hex(r.c),
        "aztec_key": _hex(r.aztec_key),
        "leaf_index": r.leaf_index,
        "secret_hash": _hex(r.secret_hash),
        "result_hash": _hex(r.result_hash),
    }


def receipt_from_dict(d: Dict[str, Any]) -> ReceiptPayload:
    return ReceiptPayload(
        version=d["version"],
        orig_emitter_chain=d["orig_emitter_chain"],
        orig_emitter=_unhex(d["orig_emitter"]),
        orig_sequence=d["orig_sequence"],
        c=_unhex(d["c"]),
        aztec_key=_unhex(d["aztec_key"]),
        leaf_index=d["leaf_index"],
        secret_hash=_unhex(d["secret_hash"]),
        result_hash=_unhex(d["result_hash"]),
    )
