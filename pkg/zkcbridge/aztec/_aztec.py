"""
Aztec Module

A simulated Aztec L1->L2 Inbox with explicit rollup inclusion, and the L2 consumer contract that consumes each
message at most once.

Leaves live in an append-only list and are identified by their index; a leaf is consumable only after a
rollup tick has included it. `consume_from_inbox` runs its checks from cheapest to most expensive:
existence, inclusion, not yet consumed, content, sender, and finally the secret hash.
"""

__all__ = [
    "InboxLeaf",
    "ConsumerState",
    "AztecState",
    "AztecError",
    "NoSuchLeaf",
    "NotYetIncluded",
    "AlreadyConsumed",
    "ContentMismatch",
    "SenderMismatch",
    "BadSecret",
    "PortalAlreadySet",
]

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from ..crypto import BN254_R, Digest32, FieldElement, keccak256, secret_hash
from ..errors import BridgeError

logger = logging.getLogger(__name__)


class AztecError(BridgeError):
    pass


class NoSuchLeaf(AztecError):
    pass


class NotYetIncluded(AztecError):
    retryable = True


class AlreadyConsumed(AztecError):
    pass


class ContentMismatch(AztecError):
    pass


class SenderMismatch(AztecError):
    pass


class BadSecret(AztecError):
    pass


class PortalAlreadySet(AztecError):
    pass


@dataclass
class InboxLeaf:
    """
    An L1->L2 message.

    Attributes:
        content (FieldElement): The commitment c.
        secret_hash (Digest32): Hash the consumer's secret must match.
        sender (bytes): Portal address that enqueued it.
        recipient (Tuple[bytes, int]): (l2_instance, rollup_version).
        leaf_index (int): Position in the inbox.
        included_in_block (Optional[int]): Rollup block that included it.
        consumed (bool): Whether it has been consumed.
    """

    content: FieldElement
    secret_hash: Digest32
    sender: bytes
    recipient: Tuple[bytes, int]
    leaf_index: int
    included_in_block: Optional[int] = None
    consumed: bool = False


@dataclass
class ConsumerState:
    """The consumer contract's storage: configured Portal and the last consumption it observed."""

    portal_addr: Optional[bytes] = None
    last_content: FieldElement = FieldElement(0)
    last_leaf: int = 0
    last_secret: FieldElement = FieldElement(0)
    count: int = 0


@dataclass
class AztecState:
    """
    Inbox, rollup frontier and consumer.

    Attributes:
        leaves (List[InboxLeaf]): Enqueued messages by leaf index.
        current_block (int): Latest rollup block.
        pending_frontier (int): Index of the first leaf not yet included.
        consumer (ConsumerState): The L2 consumer contract.
    """

    leaves: List[InboxLeaf] = field(default_factory=list)
    current_block: int = 0
    pending_frontier: int = 0
    consumer: ConsumerState = field(default_factory=ConsumerState)

    def inbox_enqueue(
        self,
        c: FieldElement,
        secret_hash: bytes,
        sender: bytes,
        recipient: Tuple[bytes, int],
    ) -> int:
        """
        Append an un-included, unconsumed message to the inbox.

        Args:
            c (FieldElement): Content commitment.
            secret_hash (bytes): 32-byte secret hash.
            sender (bytes): Enqueuing Portal's address.
            recipient (Tuple[bytes, int]): (l2_instance, rollup_version).

        Returns:
            int: The leaf index assigned.
        """
        leaf_index = len(self.leaves)
        self.leaves.append(
            InboxLeaf(
                content=FieldElement(c),
                secret_hash=Digest32(secret_hash),
                sender=bytes(sender),
                recipient=(bytes(recipient[0]), int(recipient[1])),
                leaf_index=leaf_index,
            )
        )
        logger.info(f"Inbox leaf {leaf_index} enqueued")
        return leaf_index

    def rollup_tick(self) -> List[int]:
        """
        Produce a rollup block including every pending leaf.

        Returns:
            List[int]: Indices of the leaves included by this block.
        """
        self.current_block += 1
        included = list(range(self.pending_frontier, len(self.leaves)))
        for leaf_index in included:
            self.leaves[leaf_index].included_in_block = self.current_block
        self.pending_frontier = len(self.leaves)
        if included:
            logger.info(f"Block {self.current_block} included leaves {included}")
        return included

    def set_portal_once(self, addr: bytes) -> None:
        if self.consumer.portal_addr is not None:
            raise PortalAlreadySet("Consumer portal address is already set")
        self.consumer.portal_addr = bytes(addr)
        logger.info(f"Consumer portal set to 0x{bytes(addr).hex()}")

    def consume_from_inbox(
        self, content_hash: int, leaf_index: int, secret: int
    ) -> ConsumerState:
        """
        Consume an L1->L2 message privately.

        Args:
            content_hash (int): Commitment c the caller claims.
            leaf_index (int): Leaf to consume.
            secret (int): Secret s with secret_hash(s) equal to the leaf's secret hash.

        Returns:
            ConsumerState: The consumer state after the consumption.

        Raises:
            NoSuchLeaf, NotYetIncluded, AlreadyConsumed, ContentMismatch, SenderMismatch, BadSecret: In that
                order of precedence. A raised error leaves the state unchanged.
        """
        if not 0 <= leaf_index < len(self.leaves):
            raise NoSuchLeaf(f"No inbox leaf {leaf_index}")
        leaf = self.leaves[leaf_index]
        if leaf.included_in_block is None:
            raise NotYetIncluded(f"Leaf {leaf_index} is not included in a block yet")
        if leaf.consumed:
            raise AlreadyConsumed(f"Leaf {leaf_index} was already consumed")
        if leaf.content != content_hash:
            raise ContentMismatch(f"Leaf {leaf_index} carries different content")
        if self.consumer.portal_addr is None or leaf.sender != self.consumer.portal_addr:
            raise SenderMismatch(f"Leaf {leaf_index} was not sent by the configured portal")
        if not 0 <= secret < BN254_R or secret_hash(secret) != leaf.secret_hash:
            raise BadSecret(f"Secret does not open leaf {leaf_index}")

        leaf.consumed = True
        consumer = self.consumer
        consumer.last_content = FieldElement(content_hash)
        consumer.last_leaf = leaf_index
        consumer.last_secret = FieldElement(secret)
        consumer.count += 1
        logger.info(f"Consumed leaf {leaf_index}, count {consumer.count}")
        return consumer

    def state_digest(self) -> str:
        """Digest of the leaves' inclusion and consumption flags and the consumer state."""
        material = b"".join(
            leaf.leaf_index.to_bytes(8, "big")
            + bytes([leaf.included_in_block is not None, leaf.consumed])
            for leaf in self.leaves
        )
        consumer = self.consumer
        material += consumer.count.to_bytes(8, "big") + consumer.last_content.to_bytes32()
        material += consumer.last_leaf.to_bytes(8, "big")
        return "0x" + keccak256(material).hex()
