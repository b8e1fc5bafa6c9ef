"""
Portal Module

The EVM Portal: verifies VAAs, checks the configured origin, enforces the replay lock on the VAA hash, derives
the field commitment and enqueues (c, secretHash) into the Aztec Inbox.

Two entry points exist:
    - `consume(encoded_vaa)`, the normative interface. secretHash is the first 32 bytes of the signed payload
      and c = toField(Keccak-256(dom || m)) with the per-message domain tag, so the enqueued pair is fixed by
      the signed body.
    - `consume_with_secret(encoded_vaa, secret_hash)`, the legacy interface behind `legacy_enabled`. The caller
      supplies secretHash and c = toField(Keccak-256(payload)) with no domain tag, so whoever submits first
      chooses the secret hash.

A transition either fully succeeds or raises and leaves consumed, the inbox and the event log untouched.
Rejections are checked in the order InvalidVaa, WrongOrigin, AlreadyConsumed, PayloadTooShort.
"""

__all__ = [
    "ETHEREUM_CHAIN_ID",
    "DEFAULT_PORTAL_ADDRESS",
    "DEFAULT_L2_INSTANCE",
    "ZERO_SECRET_HASH_FLAG",
    "PortalConfig",
    "PortalEvent",
    "EnqueueResult",
    "ConsumedEntry",
    "AztecFacts",
    "Portal",
    "aztec_key",
    "PortalError",
    "InvalidVaa",
    "WrongOrigin",
    "AlreadyConsumed",
    "LegacyDisabled",
    "UnknownConsumption",
]

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Set, Tuple

from ..aztec import AztecState
from ..codec import (
    RECEIPT_VERSION,
    ReceiptPayload,
    Vaa,
    decode_vaa,
    encode_receipt,
    parse_bound_payload,
)
from ..crypto import (
    Digest32,
    FieldElement,
    GuardianSet,
    commitment,
    domain_tag,
    keccak256,
    to_field,
    verify_quorum,
)
from ..errors import BridgeError, MalformedVaa
from ..origin import DEFAULT_PORTAL_ADDRESS, ETHEREUM_CHAIN_ID, Finality, PostedMessage

logger = logging.getLogger(__name__)

DEFAULT_L2_INSTANCE = bytes.fromhex(
    "0000000000000000000000000000000000000000000000000000000000aa0001"
)
ZERO_SECRET_HASH_FLAG = "zero-secret-hash"

NORMATIVE = "normative"
LEGACY = "legacy"


class PortalError(BridgeError):
    pass


class InvalidVaa(PortalError):
    pass


class WrongOrigin(PortalError):
    pass


class AlreadyConsumed(PortalError):
    pass


class LegacyDisabled(PortalError):
    pass


class UnknownConsumption(PortalError):
    pass


@dataclass(frozen=True)
class PortalConfig:
    """
    Immutable Portal configuration.

    Attributes:
        guardian_set (GuardianSet): Guardians whose quorum makes a VAA valid.
        emitter_chain (int): Accepted origin chain.
        emitter (bytes): Accepted 32-byte origin emitter.
        l2_instance (bytes): 32-byte Aztec instance id messages are addressed to.
        rollup_version (int): Aztec rollup version messages are addressed to.
        legacy_enabled (bool): Whether `consume_with_secret` is callable. Defaults to False.
        portal_address (bytes): This Portal's 32-byte address, the inbox sender and receipt emitter.
    """

    guardian_set: GuardianSet
    emitter_chain: int
    emitter: bytes
    l2_instance: bytes = DEFAULT_L2_INSTANCE
    rollup_version: int = 1
    legacy_enabled: bool = False
    portal_address: bytes = DEFAULT_PORTAL_ADDRESS

    def __post_init__(self):
        if not 0 <= self.rollup_version < 2**32:
            raise ValueError(f"Rollup version {self.rollup_version} does not fit in u32")


@dataclass(frozen=True)
class PortalEvent:
    """
    A VaaConsumed or InboxEnqueued event.

    Fields that only one kind carries are None on the other kind.
    """

    kind: str
    h: Digest32
    seq: int
    aztec_key: Digest32
    emitter_chain: int
    emitter: bytes
    path: str = NORMATIVE
    payload: Optional[bytes] = None
    c: Optional[FieldElement] = None
    leaf_index: Optional[int] = None
    secret_hash: Optional[Digest32] = None
    flags: Tuple[str, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        record = {
            "kind": self.kind,
            "h": "0x" + self.h.hex(),
            "seq": self.seq,
            "aztec_key": "0x" + self.aztec_key.hex(),
            "emitter_chain": self.emitter_chain,
            "emitter": "0x" + self.emitter.hex(),
            "path": self.path,
        }
        if self.payload is not None:
            record["payload"] = "0x" + self.payload.hex()
        if self.c is not None:
            record["c"] = "0x" + self.c.to_bytes32().hex()
        if self.leaf_index is not None:
            record["leaf_index"] = self.leaf_index
        if self.secret_hash is not None:
            record["secret_hash"] = "0x" + self.secret_hash.hex()
        if self.flags:
            record["flags"] = list(self.flags)
        return record


class EnqueueResult(NamedTuple):
    aztec_key: Digest32
    leaf_index: int


class AztecFacts(NamedTuple):
    aztec_key: bytes
    leaf_index: int
    secret_hash: bytes
    result_hash: bytes


@dataclass(frozen=True)
class ConsumedEntry:
    """What the Portal remembers about an accepted VAA, for receipts."""

    h: Digest32
    emitter_chain: int
    emitter: bytes
    sequence: int
    c: FieldElement
    secret_hash: Digest32
    aztec_key: Digest32
    leaf_index: int
    path: str


def aztec_key(
    l2_instance: bytes, rollup_version: int, c: int, secret_hash: bytes, leaf_index: int
) -> Digest32:
    """Identifier of an enqueued L1->L2 message, derived from everything that was enqueued."""
    return keccak256(
        bytes(l2_instance)
        + rollup_version.to_bytes(4, "big")
        + FieldElement(c).to_bytes32()
        + bytes(secret_hash)
        + leaf_index.to_bytes(32, "big")
    )


@dataclass
class Portal:
    """
    Portal state: configuration, replay lock and event log.

    Attributes:
        config (PortalConfig): Immutable configuration.
        inbox (AztecState): The Aztec inbox messages are enqueued into.
        consumed (Set[Digest32]): Hashes of accepted VAAs. Only ever grows.
        events (List[PortalEvent]): Emitted events in order.
        entries (Dict[Digest32, ConsumedEntry]): Facts about each accepted VAA.
        receipt_sequence (int): Sequence of the next receipt message this Portal emits.
        outbox (List[PostedMessage]): Receipt messages awaiting guardian observation.
    """

    config: PortalConfig
    inbox: AztecState
    consumed: Set[Digest32] = field(default_factory=set)
    events: List[PortalEvent] = field(default_factory=list)
    entries: Dict[Digest32, ConsumedEntry] = field(default_factory=dict)
    receipt_sequence: int = 0
    outbox: List[PostedMessage] = field(default_factory=list)

    def _verify(self, encoded_vaa: bytes) -> Tuple[Vaa, Digest32]:
        try:
            vaa = decode_vaa(encoded_vaa)
        except MalformedVaa as exc:
            raise InvalidVaa(f"Malformed VAA: {exc}") from exc

        config = self.config
        h = vaa.hash
        if vaa.body.guardian_set_index != config.guardian_set.index or not verify_quorum(
            h, vaa.signatures, config.guardian_set
        ):
            raise InvalidVaa(f"VAA 0x{h.hex()} lacks a valid guardian quorum")
        if (vaa.body.emitter_chain, vaa.body.emitter_address) != (
            config.emitter_chain,
            config.emitter,
        ):
            raise WrongOrigin(
                f"VAA from chain {vaa.body.emitter_chain} emitter 0x{vaa.body.emitter_address.hex()}"
            )
        if h in self.consumed:
            raise AlreadyConsumed(f"VAA 0x{h.hex()} was already consumed")
        return vaa, h

    def consume(self, encoded_vaa: bytes) -> Tuple[List[PortalEvent], EnqueueResult]:
        """
        Normative consumption of a VAA carrying a bound payload secretHash || m.

        Args:
            encoded_vaa (bytes): Wire-encoded VAA.

        Returns:
            Tuple[List[PortalEvent], EnqueueResult]: VaaConsumed and InboxEnqueued, and the enqueue location.

        Raises:
            InvalidVaa, WrongOrigin, AlreadyConsumed, PayloadTooShort: State is unchanged.
        """
        vaa, h = self._verify(encoded_vaa)
        body = vaa.body
        bound = parse_bound_payload(body.payload)
        dom = domain_tag(body.emitter_chain, body.emitter_address, body.sequence)
        c = commitment(dom, bound.m)

        flags = ()
        if bound.secret_hash == bytes(32):
            logger.warning(f"Sequence {body.sequence} carries the all-zero secret hash")
            flags = (ZERO_SECRET_HASH_FLAG,)
        return self._enqueue(vaa, h, c, bound.secret_hash, NORMATIVE, flags)

    def consume_with_secret(
        self, encoded_vaa: bytes, secret_hash: bytes
    ) -> Tuple[List[PortalEvent], EnqueueResult]:
        """
        Legacy consumption with a caller-supplied secret hash.

        Args:
            encoded_vaa (bytes): Wire-encoded VAA.
            secret_hash (bytes): 32-byte secret hash chosen by the caller.

        Returns:
            Tuple[List[PortalEvent], EnqueueResult]: As `consume`.

        Raises:
            LegacyDisabled: If the legacy path is switched off.
            InvalidVaa, WrongOrigin, AlreadyConsumed: State is unchanged.
        """
        if not self.config.legacy_enabled:
            raise LegacyDisabled("consume_with_secret is disabled")
        secret_hash = Digest32(secret_hash)
        vaa, h = self._verify(encoded_vaa)
        c = to_field(keccak256(vaa.body.payload))
        return self._enqueue(vaa, h, c, secret_hash, LEGACY, ())

    def _enqueue(
        self,
        vaa: Vaa,
        h: Digest32,
        c: FieldElement,
        secret_hash: Digest32,
        path: str,
        flags: Tuple[str, ...],
    ) -> Tuple[List[PortalEvent], EnqueueResult]:
        config = self.config
        body = vaa.body

        self.consumed.add(h)
        leaf_index = self.inbox.inbox_enqueue(
            c,
            secret_hash,
            sender=config.portal_address,
            recipient=(config.l2_instance, config.rollup_version),
        )
        key = aztec_key(config.l2_instance, config.rollup_version, c, secret_hash, leaf_index)

        common = dict(
            h=h,
            seq=body.sequence,
            aztec_key=key,
            emitter_chain=body.emitter_chain,
            emitter=body.emitter_address,
            path=path,
        )
        events = [
            PortalEvent(kind="VaaConsumed", payload=body.payload, **common),
            PortalEvent(
                kind="InboxEnqueued",
                c=c,
                leaf_index=leaf_index,
                secret_hash=secret_hash,
                flags=flags,
                **common,
            ),
        ]
        self.events.extend(events)
        self.entries[h] = ConsumedEntry(
            h=h,
            emitter_chain=body.emitter_chain,
            emitter=body.emitter_address,
            sequence=body.sequence,
            c=c,
            secret_hash=secret_hash,
            aztec_key=key,
            leaf_index=leaf_index,
            path=path,
        )
        logger.info(f"Consumed sequence {body.sequence} ({path}) into leaf {leaf_index}")
        return events, EnqueueResult(aztec_key=key, leaf_index=leaf_index)

    def publish_receipt(self, h: bytes, aztec_facts: AztecFacts) -> ReceiptPayload:
        """
        Build the version 1 receipt for an accepted VAA.

        Args:
            h (bytes): Hash of the consumed VAA.
            aztec_facts (AztecFacts): Consumption facts observed on Aztec.

        Returns:
            ReceiptPayload: The canonical receipt.

        Raises:
            UnknownConsumption: If h was never consumed here.
        """
        entry = self.entries.get(Digest32(h))
        if entry is None:
            raise UnknownConsumption(f"No consumption recorded for 0x{bytes(h).hex()}")
        return ReceiptPayload(
            version=RECEIPT_VERSION,
            orig_emitter_chain=entry.emitter_chain,
            orig_emitter=entry.emitter,
            orig_sequence=entry.sequence,
            c=entry.c.to_bytes32(),
            aztec_key=aztec_facts.aztec_key,
            leaf_index=aztec_facts.leaf_index,
            secret_hash=aztec_facts.secret_hash,
            result_hash=aztec_facts.result_hash,
        )

    def post_receipt(self, receipt: ReceiptPayload, current_slot: int) -> PostedMessage:
        """
        Emit a receipt as a Wormhole message from the Portal's own emitter, for guardians to sign.

        Args:
            receipt (ReceiptPayload): Receipt to publish.
            current_slot (int): Slot of publication.

        Returns:
            PostedMessage: The queued message, also appended to `outbox`.
        """
        message = PostedMessage(
            batch_id=0,
            payload=encode_receipt(receipt),
            finality_flag=Finality.FINALIZED,
            sequence=self.receipt_sequence,
            post_slot=current_slot,
        )
        self.receipt_sequence += 1
        self.outbox.append(message)
        logger.info(f"Published receipt for origin sequence {receipt.orig_sequence}")
        return message

    def state_digest(self) -> str:
        """
        Digest of everything a Portal call can write, used to witness atomicity in traces.

        Covers the consumed set, every inbox leaf's enqueued fields, the serialized event log and the receipt
        outbox.

        Returns:
            str: 0x-prefixed Keccak-256 hex digest.
        """
        material = len(self.consumed).to_bytes(8, "big") + b"".join(sorted(self.consumed))
        for leaf in self.inbox.leaves:
            l2_instance, rollup_version = leaf.recipient
            material += (
                leaf.leaf_index.to_bytes(8, "big")
                + leaf.content.to_bytes32()
                + bytes(leaf.secret_hash)
                + bytes(leaf.sender)
                + bytes(l2_instance)
                + int(rollup_version).to_bytes(4, "big")
            )
        events = json.dumps([event.to_dict() for event in self.events], sort_keys=True, separators=(",", ":"))
        material += keccak256(events.encode())
        material += self.receipt_sequence.to_bytes(8, "big") + len(self.outbox).to_bytes(8, "big")
        return "0x" + keccak256(material).hex()
