"""
Crypto Module

Hashing, field reduction, domain separation, secret commitments and guardian signatures used by every other
part of the bridge.

Conventions:
    - Keccak-256 outputs are `Digest32` values (a `bytes` subclass fixed at 32 bytes).
    - Field elements are `FieldElement` values (an `int` subclass reduced into the BN254 scalar field).
    - 32-byte strings are read as big-endian integers, and fixed-width integers are written big-endian.
    - Guardian public keys are 20-byte Ethereum-style addresses: the last 20 bytes of the Keccak-256 of the
      uncompressed secp256k1 point, which is how a Wormhole verifier identifies guardians.

Usage:
    ```
    from zkcbridge import crypto

    dom = crypto.domain_tag(1, emitter, 7)
    c = crypto.commitment(dom, b"hello")
    ```
"""

__all__ = [
    "BN254_R",
    "SECP256K1_N",
    "DOMAIN_TAG_PREFIX",
    "Digest32",
    "FieldElement",
    "GuardianKeyPair",
    "GuardianSet",
    "GuardianSignature",
    "keccak256",
    "to_field",
    "field_to_bytes",
    "domain_tag",
    "commitment",
    "secret_hash",
    "signing_digest",
    "sign_digest",
    "recover_signer",
    "verify_quorum",
    "generate_guardian_keys",
]

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import coincurve
from eth_utils import keccak

logger = logging.getLogger(__name__)

# BN254 (alt_bn128) scalar field modulus, as used by Aztec and the EVM pairing precompiles.
BN254_R = 21888242871839275222246405745257275088548364400416034343698204186575808495617
SECP256K1_N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
DOMAIN_TAG_PREFIX = b"ZKCB/v1"

GuardianSignature = bytes  # 65 bytes: r (32) || s (32) || recovery id (1)


class Digest32(bytes):
    """A 32-byte string: Keccak-256 outputs, domain tags, secret hashes and VAA hashes."""

    def __new__(cls, value: bytes = bytes(32)) -> "Digest32":
        value = bytes(value)
        if len(value) != 32:
            raise ValueError(f"Digest32 needs exactly 32 bytes, got {len(value)}")
        return super().__new__(cls, value)

    @classmethod
    def from_hex(cls, text: str) -> "Digest32":
        return cls(bytes.fromhex(text.removeprefix("0x")))

    def __repr__(self) -> str:
        return f"Digest32(0x{self.hex()})"


class FieldElement(int):
    """Canonical representative of an element of the BN254 scalar field, 0 <= value < r."""

    def __new__(cls, value: int = 0) -> "FieldElement":
        value = int(value)
        if not 0 <= value < BN254_R:
            raise ValueError(f"{value} is not a canonical BN254 scalar")
        return super().__new__(cls, value)

    def to_bytes32(self) -> bytes:
        return int(self).to_bytes(32, "big")

    def __repr__(self) -> str:
        return f"FieldElement({int(self)})"


def keccak256(data: bytes) -> Digest32:
    return Digest32(keccak(bytes(data)))


def to_field(d: bytes) -> FieldElement:
    """
    Reduce a 32-byte string into the BN254 scalar field.

    Args:
        d (bytes): 32-byte string, read as a big-endian integer.

    Returns:
        FieldElement: The integer modulo r.
    """
    return FieldElement(int.from_bytes(Digest32(d), "big") % BN254_R)


def field_to_bytes(f: int) -> bytes:
    return FieldElement(f).to_bytes32()


def domain_tag(emitter_chain: int, emitter_address: bytes, sequence: int) -> Digest32:
    """
    Compute the per-message domain separation tag.

    The preimage is the 7 ASCII bytes "ZKCB/v1", the emitter chain as 2 big-endian bytes, the 32-byte emitter
    address and the sequence as 8 big-endian bytes.

    Args:
        emitter_chain (int): Wormhole chain id of the emitter (u16).
        emitter_address (bytes): 32-byte emitter address.
        sequence (int): Emitter sequence number (u64).

    Returns:
        Digest32: Keccak-256 of the preimage.
    """
    return keccak256(
        DOMAIN_TAG_PREFIX
        + emitter_chain.to_bytes(2, "big")
        + bytes(Digest32(emitter_address))
        + sequence.to_bytes(8, "big")
    )


def commitment(dom: bytes, m: bytes) -> FieldElement:
    """
    Field commitment to a user message, c = toField(Keccak-256(dom || m)).

    Args:
        dom (bytes): 32-byte domain tag.
        m (bytes): User message, possibly empty.

    Returns:
        FieldElement: The commitment Aztec observes in place of m.
    """
    return to_field(keccak256(bytes(Digest32(dom)) + bytes(m)))


def secret_hash(s: int) -> Digest32:
    """
    Hash of a consumer secret: Keccak-256 over its 32-byte big-endian encoding.

    This is the only place the secret hash function is chosen, so a different hash (for example the one an
    Aztec deployment uses) only needs to be swapped in here.

    Args:
        s (int): Canonical field element.

    Returns:
        Digest32: The secret hash carried in bound payloads.
    """
    return keccak256(field_to_bytes(s))


def signing_digest(body_hash: bytes) -> Digest32:
    """Digest guardians actually sign: the Keccak-256 of the VAA body hash."""
    return keccak256(Digest32(body_hash))


@dataclass(frozen=True)
class GuardianKeyPair:
    """
    A guardian's secp256k1 key.

    Attributes:
        secret_key (bytes): 32-byte private scalar.
        public_key (bytes): 20-byte address derived from the public point.
    """

    secret_key: bytes
    public_key: bytes

    @classmethod
    def from_secret(cls, secret_key: bytes) -> "GuardianKeyPair":
        private = coincurve.PrivateKey(bytes(secret_key))
        return cls(
            secret_key=bytes(secret_key),
            public_key=_address(private.public_key),
        )

    def __repr__(self) -> str:
        return f"GuardianKeyPair(public_key=0x{self.public_key.hex()})"


def _address(public_key: coincurve.PublicKey) -> bytes:
    return bytes(keccak256(public_key.format(compressed=False)[1:])[12:])


def generate_guardian_keys(n: int, seed: int = 0) -> List[GuardianKeyPair]:
    """
    Deterministically derive `n` guardian keys from a seed.

    Args:
        n (int): Number of guardians.
        seed (int, optional): Derivation seed. Defaults to 0.

    Returns:
        List[GuardianKeyPair]: Keys in guardian index order.
    """
    keys = []
    for index in range(n):
        material = keccak256(
            b"zkcbridge/guardian" + seed.to_bytes(8, "big") + index.to_bytes(4, "big")
        )
        scalar = int.from_bytes(material, "big") % (SECP256K1_N - 1) + 1
        keys.append(GuardianKeyPair.from_secret(scalar.to_bytes(32, "big")))
    return keys


@dataclass(frozen=True)
class GuardianSet:
    """
    The committee whose signatures make a VAA valid.

    Attributes:
        index (int): Guardian set index carried in VAA headers.
        keys (Tuple[bytes, ...]): Guardian addresses in index order.
    """

    index: int
    keys: Tuple[bytes, ...]

    def __post_init__(self):
        object.__setattr__(self, "keys", tuple(bytes(k) for k in self.keys))
        if len(set(self.keys)) != len(self.keys):
            raise ValueError("Guardian keys must be distinct")
        if not self.keys:
            raise ValueError("Guardian set is empty")

    @property
    def quorum(self) -> int:
        return 2 * len(self.keys) // 3 + 1

    @classmethod
    def from_keypairs(
        cls, keypairs: Iterable[GuardianKeyPair], index: int = 0
    ) -> "GuardianSet":
        return cls(index=index, keys=tuple(k.public_key for k in keypairs))


def sign_digest(d: bytes, key: GuardianKeyPair) -> GuardianSignature:
    """
    Produce a recoverable ECDSA signature over a 32-byte digest (RFC 6979 nonces, so deterministic).

    Args:
        d (bytes): Digest to sign, used as-is without further hashing.
        key (GuardianKeyPair): Signing key.

    Returns:
        GuardianSignature: 65-byte r || s || v signature.
    """
    private = coincurve.PrivateKey(key.secret_key)
    return private.sign_recoverable(bytes(Digest32(d)), hasher=None)


def recover_signer(d: bytes, sig: bytes) -> Optional[bytes]:
    """
    Recover the signer address of a signature, or None if the signature is unusable.

    Args:
        d (bytes): 32-byte digest that was signed.
        sig (bytes): 65-byte recoverable signature.

    Returns:
        Optional[bytes]: 20-byte address of the signer.
    """
    if len(sig) != 65 or len(d) != 32:
        return None
    try:
        public_key = coincurve.PublicKey.from_signature_and_message(
            bytes(sig), bytes(d), hasher=None
        )
    except Exception as exc:  # coincurve raises plain Exception/ValueError on bad points
        logger.debug(f"Signature recovery failed: {exc}")
        return None
    return _address(public_key)


def verify_quorum(
    body_digest: bytes,
    sigs: Sequence[Tuple[int, bytes]],
    guardian_set: GuardianSet,
) -> bool:
    """
    Check that a VAA body hash carries a quorum of guardian signatures.

    Signatures must be listed by strictly increasing guardian index and each must recover, over the signing
    digest keccak256(body_digest), to the key registered at its index. Malformed input yields False.

    Args:
        body_digest (bytes): The VAA body hash h.
        sigs (Sequence[Tuple[int, bytes]]): (guardian index, signature) pairs.
        guardian_set (GuardianSet): The set to verify against.

    Returns:
        bool: True if the quorum is met.
    """
    if len(body_digest) != 32 or len(sigs) < guardian_set.quorum:
        return False

    digest = signing_digest(body_digest)
    last_index = -1
    for guardian_index, sig in sigs:
        if guardian_index <= last_index or guardian_index >= len(guardian_set.keys):
            return False
        last_index = guardian_index
        if recover_signer(digest, sig) != guardian_set.keys[guardian_index]:
            return False
    return True
