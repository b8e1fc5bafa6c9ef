"""
Origin Module

The Solana-side program of the bridge: it posts Wormhole messages from a fixed emitter with an explicit
finality flag, and records receipt VAAs coming back from the Portal.

Classes:
    - Finality: Confirmed or Finalized commitment requested for a posted message.
    - PostedMessage: A message queued for guardian observation.
    - PostedVaaAccount: A Wormhole PostedVAA account handed to the receipt recorder.
    - RecordedReceipt: A receipt stored by the program.
    - OriginState: The program state and its two transitions.

The receipt recorder enforces four checks before storing anything:
    (i) the PostedVAA account is owned by Wormhole Core;
    (ii) the receipt's origin pair matches the allowlist;
    (iii) the receipt's origin sequence matches the PDA key it is recorded under;
    (iv) the receipt version is 1.
The `v0_1_0_compat` flag switches these four off to reproduce the older recorder that did not check them.
The guardian quorum and the receipt emitter (the Portal on Ethereum) are checked in either mode.
"""

__all__ = [
    "SOLANA_CHAIN_ID",
    "ETHEREUM_CHAIN_ID",
    "DEFAULT_PORTAL_ADDRESS",
    "WORMHOLE_CORE_OWNER",
    "DEFAULT_EMITTER",
    "Finality",
    "PostedMessage",
    "PostedVaaAccount",
    "RecordedReceipt",
    "OriginState",
    "OriginError",
    "WrongAccountOwner",
    "OriginNotAllowlisted",
    "SequenceKeyMismatch",
    "InvalidVaa",
    "DuplicateReceipt",
]

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Optional, Tuple

from ..codec import MAX_PAYLOAD_LENGTH, RECEIPT_VERSION, ReceiptPayload, Vaa, decode_receipt
from ..crypto import GuardianSet, verify_quorum
from ..errors import BridgeError, PayloadTooLarge, UnsupportedVersion

logger = logging.getLogger(__name__)

SOLANA_CHAIN_ID = 1
ETHEREUM_CHAIN_ID = 2
DEFAULT_PORTAL_ADDRESS = bytes(12) + bytes.fromhex("9e1b0c7a5d2f4e8b6a3c1d0f7e5b9a2c4d6f8e01")
WORMHOLE_CORE_OWNER = "worm2ZoG2kUd4vFXhvjh93UUH596ayRfgQ2MgjNMTth"
DEFAULT_EMITTER = bytes.fromhex(
    "5a4b43422d656d69747465722d706461000000000000000000000000000000a1"
)


class Finality(IntEnum):
    """Commitment level requested from the guardians, stored as the VAA consistency level."""

    CONFIRMED = 1
    FINALIZED = 32

    @classmethod
    def parse(cls, value) -> "Finality":
        if isinstance(value, str):
            return cls[value.upper()]
        return cls(value)


class OriginError(BridgeError):
    pass


class WrongAccountOwner(OriginError):
    pass


class OriginNotAllowlisted(OriginError):
    pass


class SequenceKeyMismatch(OriginError):
    pass


class InvalidVaa(OriginError):
    pass


class DuplicateReceipt(OriginError):
    pass


@dataclass(frozen=True)
class PostedMessage:
    """
    A message posted to Wormhole Core.

    Attributes:
        batch_id (int): Caller-chosen batch id, carried as the VAA nonce.
        payload (bytes): Message payload.
        finality_flag (Finality): Requested commitment level.
        sequence (int): Emitter sequence assigned at posting.
        post_slot (int): Slot the message was posted in.
    """

    batch_id: int
    payload: bytes
    finality_flag: Finality
    sequence: int
    post_slot: int


@dataclass(frozen=True)
class PostedVaaAccount:
    owner: str
    vaa: Vaa


@dataclass(frozen=True)
class RecordedReceipt:
    receipt: ReceiptPayload
    recorded_at: int


@dataclass
class OriginState:
    """
    State of the Solana origin program.

    Attributes:
        guardian_set (GuardianSet): Guardian set receipt VAAs are verified against.
        emitter_address (bytes): Fixed 32-byte emitter PDA.
        emitter_chain (int): Wormhole chain id of this program. Defaults to SOLANA_CHAIN_ID.
        next_sequence (int): Sequence the next posted message receives.
        receipts (Dict[int, RecordedReceipt]): Recorded receipts keyed by origin sequence.
        wormhole_core_owner (str): Account owner id of Wormhole Core.
        allowlist (Optional[Tuple[int, bytes]]): Origin pair receipts must name. Defaults to this program's own
            (emitter_chain, emitter_address).
        receipt_emitter (Tuple[int, bytes]): (chain, address) receipt VAAs must be emitted from. Defaults to the
            Portal on Ethereum.
        v0_1_0_compat (bool): Disable the four recorder checks.
    """

    guardian_set: GuardianSet
    emitter_address: bytes = DEFAULT_EMITTER
    emitter_chain: int = SOLANA_CHAIN_ID
    next_sequence: int = 0
    receipts: Dict[int, RecordedReceipt] = field(default_factory=dict)
    wormhole_core_owner: str = WORMHOLE_CORE_OWNER
    allowlist: Optional[Tuple[int, bytes]] = None
    receipt_emitter: Tuple[int, bytes] = (ETHEREUM_CHAIN_ID, DEFAULT_PORTAL_ADDRESS)
    v0_1_0_compat: bool = False

    def __post_init__(self):
        self.emitter_address = bytes(self.emitter_address)
        if len(self.emitter_address) != 32:
            raise ValueError("Emitter address must be 32 bytes")
        if self.allowlist is None:
            self.allowlist = (self.emitter_chain, self.emitter_address)
        chain, address = self.receipt_emitter
        self.receipt_emitter = (int(chain), bytes(address))

    def post_wormhole_message(
        self,
        batch_id: int,
        payload: bytes,
        finality_flag: Finality,
        current_slot: int,
    ) -> PostedMessage:
        """
        Post a message from the emitter PDA.

        Args:
            batch_id (int): Batch id (u32).
            payload (bytes): Payload, at most MAX_PAYLOAD_LENGTH bytes.
            finality_flag (Finality): Requested finality.
            current_slot (int): Slot of the posting transaction.

        Returns:
            PostedMessage: The message, carrying the sequence assigned to it.

        Raises:
            PayloadTooLarge: If the payload exceeds MAX_PAYLOAD_LENGTH.
        """
        if len(payload) > MAX_PAYLOAD_LENGTH:
            raise PayloadTooLarge(
                f"Payload of {len(payload)} bytes exceeds {MAX_PAYLOAD_LENGTH}"
            )

        message = PostedMessage(
            batch_id=batch_id,
            payload=bytes(payload),
            finality_flag=Finality(finality_flag),
            sequence=self.next_sequence,
            post_slot=current_slot,
        )
        self.next_sequence += 1
        logger.info(
            f"Posted sequence {message.sequence} at slot {current_slot} ({message.finality_flag.name})"
        )
        return message

    def record_receipt_from_vaa(
        self,
        account: PostedVaaAccount,
        pda_sequence_key: int,
        current_slot: int = 0,
    ) -> RecordedReceipt:
        """
        Record a receipt VAA under the PDA key of the origin sequence it refers to.

        Args:
            account (PostedVaaAccount): The PostedVAA account holding the receipt VAA.
            pda_sequence_key (int): Origin sequence encoded in the receipt PDA.
            current_slot (int, optional): Slot of the recording transaction. Defaults to 0.

        Returns:
            RecordedReceipt: The stored receipt.

        Raises:
            WrongAccountOwner: Check (i) failed.
            InvalidVaa: The receipt VAA lacks a guardian quorum or was not emitted by the Portal.
            MalformedReceipt: The VAA payload is not a receipt.
            OriginNotAllowlisted: Check (ii) failed.
            SequenceKeyMismatch: Check (iii) failed.
            UnsupportedVersion: Check (iv) failed.
            DuplicateReceipt: A receipt is already stored under this key.
        """
        checked = not self.v0_1_0_compat

        if checked and account.owner != self.wormhole_core_owner:
            raise WrongAccountOwner(
                f"PostedVAA account owned by {account.owner}, not Wormhole Core"
            )

        vaa = account.vaa
        if vaa.body.guardian_set_index != self.guardian_set.index or not verify_quorum(
            vaa.hash, vaa.signatures, self.guardian_set
        ):
            raise InvalidVaa("Receipt VAA does not carry a guardian quorum")
        if (vaa.body.emitter_chain, vaa.body.emitter_address) != self.receipt_emitter:
            raise InvalidVaa(
                f"Receipt VAA emitted by chain {vaa.body.emitter_chain} "
                f"address 0x{vaa.body.emitter_address.hex()}, not the Portal"
            )

        receipt = decode_receipt(vaa.body.payload)

        if checked:
            if (receipt.orig_emitter_chain, receipt.orig_emitter) != self.allowlist:
                raise OriginNotAllowlisted(
                    f"Receipt names origin chain {receipt.orig_emitter_chain} "
                    f"emitter 0x{receipt.orig_emitter.hex()}"
                )
            if receipt.orig_sequence != pda_sequence_key:
                raise SequenceKeyMismatch(
                    f"Receipt sequence {receipt.orig_sequence} recorded under key {pda_sequence_key}"
                )
            if receipt.version != RECEIPT_VERSION:
                raise UnsupportedVersion(f"Receipt version {receipt.version}")

        if pda_sequence_key in self.receipts:
            raise DuplicateReceipt(f"Receipt for sequence {pda_sequence_key} exists")

        recorded = RecordedReceipt(receipt=receipt, recorded_at=current_slot)
        self.receipts[pda_sequence_key] = recorded
        logger.info(f"Recorded receipt for sequence {pda_sequence_key}")
        return recorded
