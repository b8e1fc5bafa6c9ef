"""
Relayer Module

Off-chain agents that carry VAAs to the Portal, drive consumption on Aztec and carry receipt VAAs back to
Solana. Relayers are untrusted: on the normative path they can only choose when and in what order to submit,
never what gets enqueued.

A relayer holds a queue of tasks. Each step runs every task whose `next_eligible_tick` has come:
    - success enqueues the follow-up task (SubmitVaa -> ConsumeOnAztec, and, with receipts switched on,
      ConsumeOnAztec -> receipt publication);
    - a retryable failure (an error with `retryable = True`, i.e. NotYetIncluded) reschedules the task at
      tick + min(cap, ceil(base * multiplier ** attempt));
    - any other failure, or running out of attempts, drops the task.

Every execution produces a `TaskOutcome`, which the simulator writes to its log.
"""

__all__ = [
    "TaskKind",
    "RelayerConfig",
    "ConsumeParams",
    "RelayerTask",
    "TaskOutcome",
    "WorldView",
    "Relayer",
    "relayer_step",
    "derive_consume_task",
    "result_hash",
    "MissingEnqueueEvent",
]

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Protocol, Set, Tuple

from ..aztec import AztecState
from ..codec import Vaa, decode_receipt, decode_vaa, parse_bound_payload
from ..crypto import Digest32, FieldElement, keccak256, secret_hash
from ..errors import BridgeError
from ..origin import OriginState, PostedVaaAccount
from ..portal import AlreadyConsumed as VaaAlreadyConsumed
from ..portal import AztecFacts, Portal, PortalEvent

logger = logging.getLogger(__name__)

NORMATIVE = "normative"
LEGACY = "legacy"


class MissingEnqueueEvent(BridgeError):
    pass


class TaskKind(str, Enum):
    SUBMIT_VAA = "SubmitVaa"
    CONSUME_ON_AZTEC = "ConsumeOnAztec"
    RECORD_RECEIPT = "RecordReceipt"


@dataclass(frozen=True)
class RelayerConfig:
    """
    Relayer behaviour.

    Attributes:
        max_retries (int): Maximum executions of one task. Defaults to 10.
        base_backoff (int): First retry delay in ticks. Defaults to 1.
        backoff_multiplier (float): Growth factor of the delay. Defaults to 2.
        backoff_cap (int): Largest delay in ticks. Defaults to 16.
        honest (bool): Honest relayers hold the users' secrets and consume on Aztec. Defaults to True.
        submit_path (str): "normative" (consume) or "legacy" (consume_with_secret). Defaults to "normative".
        publish_receipts (bool): Publish a receipt after each Aztec consumption. Defaults to False.
    """

    max_retries: int = 10
    base_backoff: int = 1
    backoff_multiplier: float = 2
    backoff_cap: int = 16
    honest: bool = True
    submit_path: str = NORMATIVE
    publish_receipts: bool = False

    def __post_init__(self):
        if self.base_backoff < 1 or self.max_retries < 1:
            raise ValueError("base_backoff and max_retries must be at least 1")
        if self.backoff_multiplier < 1 or self.backoff_cap < self.base_backoff:
            raise ValueError("Need backoff_multiplier >= 1 and backoff_cap >= base_backoff")
        if self.submit_path not in (NORMATIVE, LEGACY):
            raise ValueError(f"Unknown submit path {self.submit_path!r}")

    def backoff(self, attempt: int) -> int:
        return min(
            self.backoff_cap,
            math.ceil(self.base_backoff * self.backoff_multiplier**attempt),
        )


@dataclass(frozen=True)
class ConsumeParams:
    """Everything needed to consume one inbox leaf, read from the Portal's InboxEnqueued event."""

    h: Digest32
    c: FieldElement
    leaf_index: int
    secret: FieldElement
    secret_hash: Digest32
    aztec_key: Digest32


@dataclass
class RelayerTask:
    """
    A unit of relayer work.

    Attributes:
        kind (TaskKind): What to do.
        payload (Any): Encoded VAA (SubmitVaa), ConsumeParams (ConsumeOnAztec) or
            (PostedVaaAccount, pda key) (RecordReceipt).
        sequence (int): Sequence the task concerns, for logs.
        attempt (int): Executions so far.
        next_eligible_tick (int): First tick the task may run.
    """

    kind: TaskKind
    payload: Any
    sequence: int
    attempt: int = 0
    next_eligible_tick: int = 0


@dataclass(frozen=True)
class TaskOutcome:
    tick: int
    relayer_id: str
    task_kind: str
    attempt: int
    outcome: str
    sequence: int
    retry_at: Optional[int] = None
    leaf_index: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        record = {
            "tick": self.tick,
            "relayer_id": self.relayer_id,
            "task_kind": self.task_kind,
            "attempt": self.attempt,
            "outcome": self.outcome,
            "sequence": self.sequence,
        }
        if self.retry_at is not None:
            record["retry_at"] = self.retry_at
        if self.leaf_index is not None:
            record["leaf_index"] = self.leaf_index
        return record


class WorldView(Protocol):
    """The chains a relayer can reach."""

    portal: Portal
    aztec: AztecState
    origin: OriginState
    slot: int


def derive_consume_task(
    vaa: Vaa,
    secret: int,
    portal_events: Iterable[PortalEvent],
    tick: int = 0,
) -> RelayerTask:
    """
    Build the Aztec consumption task for a consumed VAA from the Portal's InboxEnqueued event.

    Args:
        vaa (Vaa): The consumed VAA.
        secret (int): The secret the relayer holds for it.
        portal_events (Iterable[PortalEvent]): Portal event log.
        tick (int, optional): First tick the task may run. Defaults to 0.

    Returns:
        RelayerTask: A ConsumeOnAztec task.

    Raises:
        MissingEnqueueEvent: If no InboxEnqueued event exists for the VAA's hash.
    """
    h = vaa.hash
    for event in portal_events:
        if event.kind == "InboxEnqueued" and event.h == h:
            params = ConsumeParams(
                h=h,
                c=event.c,
                leaf_index=event.leaf_index,
                secret=FieldElement(secret),
                secret_hash=event.secret_hash,
                aztec_key=event.aztec_key,
            )
            return RelayerTask(
                kind=TaskKind.CONSUME_ON_AZTEC,
                payload=params,
                sequence=vaa.body.sequence,
                next_eligible_tick=tick,
            )
    raise MissingEnqueueEvent(f"No InboxEnqueued event for 0x{h.hex()}")


def result_hash(aztec: AztecState) -> Digest32:
    """Digest of the consumer's recorded result: last content and last leaf."""
    consumer = aztec.consumer
    return keccak256(
        consumer.last_content.to_bytes32() + consumer.last_leaf.to_bytes(32, "big")
    )


def relayer_step(
    cfg: RelayerConfig,
    tasks: List[RelayerTask],
    world: WorldView,
    tick: int,
    relayer_id: str = "relayer",
    secrets: Optional[Dict[int, int]] = None,
) -> Tuple[List[RelayerTask], List[TaskOutcome]]:
    """
    Run every eligible task once.

    Args:
        cfg (RelayerConfig): Relayer behaviour.
        tasks (List[RelayerTask]): Current task queue.
        world (WorldView): Portal, Aztec and origin states.
        tick (int): Current tick.
        relayer_id (str, optional): Name used in outcomes. Defaults to "relayer".
        secrets (Optional[Dict[int, int]], optional): Secrets held, by origin sequence. Defaults to None.

    Returns:
        Tuple[List[RelayerTask], List[TaskOutcome]]: The new queue and what was done.
    """
    secrets = secrets if cfg.honest and secrets else {}
    queue, outcomes = [], []
    follow_ups: List[RelayerTask] = []
    scheduled: Set[Digest32] = {
        task.payload.h for task in tasks if task.kind is TaskKind.CONSUME_ON_AZTEC
    }

    for task in tasks:
        if task.next_eligible_tick > tick:
            queue.append(task)
            continue

        leaf_index = None
        try:
            if task.kind is TaskKind.SUBMIT_VAA:
                new_tasks, rejection = _submit(cfg, task, world, tick, secrets, scheduled)
                follow_ups.extend(new_tasks)
                if rejection is not None:
                    raise rejection
            elif task.kind is TaskKind.CONSUME_ON_AZTEC:
                leaf_index = task.payload.leaf_index
                _consume(cfg, task, world)
            else:
                account, pda_key = task.payload
                world.origin.record_receipt_from_vaa(account, pda_key, world.slot)
        except BridgeError as exc:
            if exc.retryable and task.attempt + 1 < cfg.max_retries:
                retry_at = tick + cfg.backoff(task.attempt)
                outcomes.append(
                    TaskOutcome(
                        tick, relayer_id, task.kind.value, task.attempt, exc.code,
                        task.sequence, retry_at=retry_at, leaf_index=leaf_index,
                    )
                )
                task.attempt += 1
                task.next_eligible_tick = retry_at
                queue.append(task)
                logger.debug(f"{relayer_id} retries {task.kind.value} at tick {retry_at}")
            else:
                outcome = f"GaveUp:{exc.code}" if exc.retryable else exc.code
                outcomes.append(
                    TaskOutcome(
                        tick, relayer_id, task.kind.value, task.attempt, outcome,
                        task.sequence, leaf_index=leaf_index,
                    )
                )
                logger.info(
                    f"{relayer_id} dropped {task.kind.value} for sequence {task.sequence}: {outcome}"
                )
            continue

        outcomes.append(
            TaskOutcome(
                tick, relayer_id, task.kind.value, task.attempt, "ok",
                task.sequence, leaf_index=leaf_index,
            )
        )

    return queue + follow_ups, outcomes


def _submit(
    cfg: RelayerConfig,
    task: RelayerTask,
    world: WorldView,
    tick: int,
    secrets: Dict[int, int],
    scheduled: Set[Digest32],
) -> Tuple[List[RelayerTask], Optional[BridgeError]]:
    encoded = task.payload
    portal = world.portal
    try:
        if cfg.submit_path == LEGACY:
            vaa = decode_vaa(encoded)
            intended = parse_bound_payload(vaa.body.payload).secret_hash
            portal.consume_with_secret(encoded, intended)
        else:
            portal.consume(encoded)
    except VaaAlreadyConsumed as exc:
        # Someone else submitted first; the secret holder still has to consume on Aztec.
        return _follow_up(encoded, portal, tick, secrets, scheduled), exc
    return _follow_up(encoded, portal, tick, secrets, scheduled), None


def _follow_up(
    encoded: bytes,
    portal: Portal,
    tick: int,
    secrets: Dict[int, int],
    scheduled: Set[Digest32],
) -> List[RelayerTask]:
    vaa = decode_vaa(encoded)
    sequence = vaa.body.sequence
    if sequence not in secrets or vaa.hash in scheduled:
        return []
    if secret_hash(secrets[sequence]) != vaa.body.payload[:32]:
        return []
    task = derive_consume_task(vaa, secrets[sequence], portal.events, tick=tick + 1)
    scheduled.add(vaa.hash)
    return [task]


def _consume(cfg: RelayerConfig, task: RelayerTask, world: WorldView) -> None:
    params: ConsumeParams = task.payload
    world.aztec.consume_from_inbox(params.c, params.leaf_index, params.secret)
    if cfg.publish_receipts:
        facts = AztecFacts(
            aztec_key=params.aztec_key,
            leaf_index=params.leaf_index,
            secret_hash=params.secret_hash,
            result_hash=result_hash(world.aztec),
        )
        receipt = world.portal.publish_receipt(params.h, facts)
        world.portal.post_receipt(receipt, world.slot)


@dataclass
class Relayer:
    """
    A relayer actor with its own task queue.

    Attributes:
        relayer_id (str): Name used in outcomes.
        config (RelayerConfig): Behaviour.
        secrets (Dict[int, int]): Secrets held, by origin sequence. Ignored for dishonest relayers.
        tasks (List[RelayerTask]): Pending tasks.
    """

    relayer_id: str
    config: RelayerConfig = field(default_factory=RelayerConfig)
    secrets: Dict[int, int] = field(default_factory=dict)
    tasks: List[RelayerTask] = field(default_factory=list)
    delivered: Set[Digest32] = field(default_factory=set)

    def deliver_vaa(self, encoded_vaa: bytes, tick: int) -> bool:
        """Queue a VAA for submission to the Portal; repeated deliveries of the same VAA are ignored."""
        vaa = decode_vaa(encoded_vaa)
        if vaa.hash in self.delivered:
            return False
        self.delivered.add(vaa.hash)
        self.tasks.append(
            RelayerTask(
                kind=TaskKind.SUBMIT_VAA,
                payload=bytes(encoded_vaa),
                sequence=vaa.body.sequence,
                next_eligible_tick=tick,
            )
        )
        return True

    def deliver_receipt(self, vaa: Vaa, owner: str, tick: int) -> bool:
        """Queue a receipt VAA for recording on Solana under the PDA of the sequence it names."""
        if vaa.hash in self.delivered or not self.config.honest:
            return False
        self.delivered.add(vaa.hash)
        try:
            pda_key = decode_receipt(vaa.body.payload).orig_sequence
        except BridgeError as exc:
            logger.info(f"{self.relayer_id} ignores undecodable receipt: {exc}")
            return False
        self.tasks.append(
            RelayerTask(
                kind=TaskKind.RECORD_RECEIPT,
                payload=(PostedVaaAccount(owner=owner, vaa=vaa), pda_key),
                sequence=pda_key,
                next_eligible_tick=tick,
            )
        )
        return True

    def step(self, world: WorldView, tick: int) -> List[TaskOutcome]:
        self.tasks, outcomes = relayer_step(
            self.config, self.tasks, world, tick, self.relayer_id, self.secrets
        )
        return outcomes

    @property
    def idle(self) -> bool:
        return not self.tasks
