"""
Guardians Module

A simulated Wormhole guardian network. Guardians observe posted messages and sign a VAA for each one only
after the finality the emitter asked for has been reached, which is what aligns Portal acceptance with the
origin chain's finality.

Finality is modelled as a fixed slot delay per flag. A message posted at slot p with flag f is signed at the
first emission call with current_slot >= p + delay(f).

Reorgs:
    A reorg of depth d at slot S reverts the slots after max(S - d, S - finalized_delay); finalized slots are
    never reverted. Pending Confirmed messages in the reverted window are dropped, pending Finalized messages
    are re-stamped to S (re-included on the new fork, so their full delay runs again), and Confirmed VAAs that
    were already signed for reverted slots are reported as orphaned.
"""

__all__ = ["FinalityPolicy", "GuardianNode", "ReorgOutcome"]

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from ..codec import Vaa, VaaBody, vaa_body_hash
from ..crypto import GuardianKeyPair, GuardianSet, sign_digest, signing_digest
from ..origin import Finality, PostedMessage

logger = logging.getLogger(__name__)

VAA_VERSION = 1

MessageId = Tuple[int, bytes, int]  # (emitter_chain, emitter_address, sequence)


@dataclass(frozen=True)
class FinalityPolicy:
    """
    Slot delays guardians wait before signing.

    Attributes:
        confirmed_delay (int): Slots to wait for Confirmed messages. Defaults to 2.
        finalized_delay (int): Slots to wait for Finalized messages. Defaults to 32.
    """

    confirmed_delay: int = 2
    finalized_delay: int = 32

    def __post_init__(self):
        if not 0 <= self.confirmed_delay <= self.finalized_delay:
            raise ValueError(
                f"Need 0 <= confirmed_delay <= finalized_delay, got "
                f"{self.confirmed_delay}, {self.finalized_delay}"
            )

    def delay(self, flag: Finality) -> int:
        if Finality(flag) is Finality.FINALIZED:
            return self.finalized_delay
        return self.confirmed_delay


@dataclass(frozen=True)
class _Observation:
    message: PostedMessage
    emitter_chain: int
    emitter_address: bytes

    @property
    def message_id(self) -> MessageId:
        return (self.emitter_chain, self.emitter_address, self.message.sequence)


def _on_chain(observation: _Observation, emitter_chain: Optional[int]) -> bool:
    return emitter_chain is None or observation.emitter_chain == emitter_chain


@dataclass(frozen=True)
class ReorgOutcome:
    """
    What a reorg did to the guardians' view.

    Attributes:
        reverted_from (int): First reverted slot.
        dropped (Tuple[MessageId, ...]): Pending Confirmed messages that vanished.
        restamped (Tuple[MessageId, ...]): Pending Finalized messages re-included at the reorg slot.
        orphaned (Tuple[MessageId, ...]): Already-signed Confirmed messages whose slot was reverted.
    """

    reverted_from: int
    dropped: Tuple[MessageId, ...] = ()
    restamped: Tuple[MessageId, ...] = ()
    orphaned: Tuple[MessageId, ...] = ()


@dataclass
class GuardianNode:
    """
    The guardian network as a single honest node.

    Attributes:
        keys (Sequence[GuardianKeyPair]): Guardian keys in index order.
        policy (FinalityPolicy): Finality delays.
        set_index (int): Guardian set index. Defaults to 0.
        signers (int): How many guardians sign each VAA. Defaults to all of them.
    """

    keys: Sequence[GuardianKeyPair]
    policy: FinalityPolicy = field(default_factory=FinalityPolicy)
    set_index: int = 0
    signers: int = 0
    observed: List[_Observation] = field(default_factory=list)
    seen: set = field(default_factory=set)
    emitted: Dict[MessageId, _Observation] = field(default_factory=dict)

    def __post_init__(self):
        self.keys = list(self.keys)
        self.set = GuardianSet.from_keypairs(self.keys, index=self.set_index)
        if not self.signers:
            self.signers = len(self.keys)
        if not self.set.quorum <= self.signers <= len(self.keys):
            raise ValueError(
                f"signers={self.signers} must lie between quorum {self.set.quorum} and {len(self.keys)}"
            )

    def observe(
        self, msg: PostedMessage, emitter_chain: int, emitter_address: bytes
    ) -> bool:
        """
        Queue a posted message for signing.

        Args:
            msg (PostedMessage): The posted message.
            emitter_chain (int): Chain the message was posted on.
            emitter_address (bytes): Emitter that posted it.

        Returns:
            bool: False if this (emitter, sequence) was already observed and the observation was ignored.
        """
        observation = _Observation(msg, emitter_chain, bytes(emitter_address))
        if observation.message_id in self.seen:
            logger.debug(f"Ignoring repeated observation of sequence {msg.sequence}")
            return False

        self.seen.add(observation.message_id)
        self.observed.append(observation)
        logger.debug(f"Observed sequence {msg.sequence} posted at slot {msg.post_slot}")
        return True

    def ready_slot(self, msg: PostedMessage) -> int:
        return msg.post_slot + self.policy.delay(msg.finality_flag)

    def emit_ready_vaas(self, current_slot: int) -> List[Vaa]:
        """
        Sign every observed message whose finality delay has elapsed.

        Args:
            current_slot (int): Current origin slot.

        Returns:
            List[Vaa]: Signed VAAs, in observation order. Emitted messages leave the queue.
        """
        ready, waiting = [], []
        for observation in self.observed:
            if self.ready_slot(observation.message) <= current_slot:
                ready.append(observation)
            else:
                waiting.append(observation)
        self.observed = waiting

        vaas = []
        for observation in ready:
            vaas.append(self._sign(observation))
            self.emitted[observation.message_id] = observation
            logger.info(
                f"Signed sequence {observation.message.sequence} at slot {current_slot}"
            )
        return vaas

    def _sign(self, observation: _Observation) -> Vaa:
        msg = observation.message
        body = VaaBody(
            version=VAA_VERSION,
            guardian_set_index=self.set.index,
            timestamp=msg.post_slot,
            nonce=msg.batch_id,
            emitter_chain=observation.emitter_chain,
            emitter_address=observation.emitter_address,
            sequence=msg.sequence,
            consistency_level=int(msg.finality_flag),
            payload=msg.payload,
        )
        digest = signing_digest(vaa_body_hash(body))
        signatures = tuple(
            (index, sign_digest(digest, key))
            for index, key in enumerate(self.keys[: self.signers])
        )
        return Vaa(body=body, signatures=signatures)

    def reorg(
        self, current_slot: int, depth: int, emitter_chain: Optional[int] = None
    ) -> ReorgOutcome:
        """
        Revert recent, not yet finalized slots.

        Args:
            current_slot (int): Slot the reorg happens at.
            depth (int): Number of most recent slots to revert.
            emitter_chain (Optional[int], optional): Chain that reorganises. Defaults to None (every chain).

        Returns:
            ReorgOutcome: Dropped, re-stamped and orphaned messages.
        """
        frontier = current_slot - self.policy.finalized_delay
        reverted_from = max(current_slot - depth, frontier) + 1

        dropped, restamped, kept = [], [], []
        for observation in self.observed:
            msg = observation.message
            if msg.post_slot < reverted_from or not _on_chain(observation, emitter_chain):
                kept.append(observation)
            elif msg.finality_flag is Finality.FINALIZED:
                restamped.append(observation.message_id)
                kept.append(
                    dataclasses.replace(
                        observation,
                        message=dataclasses.replace(msg, post_slot=current_slot),
                    )
                )
            else:
                dropped.append(observation.message_id)
        self.observed = kept

        orphaned = [
            message_id
            for message_id, observation in self.emitted.items()
            if observation.message.post_slot >= reverted_from and _on_chain(observation, emitter_chain)
        ]

        if dropped or orphaned:
            logger.warning(
                f"Reorg from slot {reverted_from}: dropped {len(dropped)}, orphaned {len(orphaned)}"
            )
        return ReorgOutcome(
            reverted_from=reverted_from,
            dropped=tuple(dropped),
            restamped=tuple(restamped),
            orphaned=tuple(orphaned),
        )
