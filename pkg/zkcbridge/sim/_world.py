"""
Simulation Module

A deterministic, seeded discrete-event harness that composes the origin program, the guardians, the Portal,
Aztec and the relayers, together with a rushing network adversary, and records everything that happens as a
trace the property checkers can read.

Classes:
    - World: All actor states plus the scheduler that advances them tick by tick.
    - AdversaryState: The adversary's pending actions and the VAAs it has seen.

Usage:
    1. Build or load a `ScenarioSpec` (see `catalog_scenario` for named ones).
    2. Run it with `run_scenario(scenario, seed)`, which returns a `TraceReport` carrying its verdicts.
    3. Or build a `World` directly and call `run_simulation` to get the unchecked trace.

One tick is one origin slot. Each tick runs, in order:
    1. the origin posts the messages scheduled for this tick and guardians observe them;
    2. guardians sign every message whose finality delay has elapsed;
    3. the adversary acts (it sees fresh VAAs before any relayer does);
    4. fresh VAAs and receipt VAAs are delivered to every relayer;
    5. relayers step in round-robin order, rotated by one each tick;
    6. every `rollup_every` ticks a rollup block includes the pending inbox leaves;
    7. receipt messages the Portal published are handed to the guardians.
With fairness on, a DropDelivery only delays a delivery by one tick; with fairness off it loses it.

For examples, see files titled "_exampleX.py" in the examples directory.
"""

__all__ = ["World", "AdversaryState", "run_scenario"]

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

import numpy as np

from ..aztec import AztecState
from ..codec import (
    BoundPayload,
    Vaa,
    decode_receipt,
    decode_vaa,
    encode_bound_payload,
    encode_vaa,
)
from ..crypto import BN254_R, generate_guardian_keys, keccak256, secret_hash, to_field
from ..errors import BridgeError, MalformedVaa
from ..guardians import FinalityPolicy, GuardianNode
from ..origin import WORMHOLE_CORE_OWNER, Finality, OriginState, PostedVaaAccount
from ..portal import ETHEREUM_CHAIN_ID, Portal, PortalConfig
from ..relayer import Relayer, RelayerConfig
from ._properties import check_properties
from ._scenario import TARGETED_KINDS, AdversaryActionSpec, ScenarioSpec
from ._trace import TraceReport

logger = logging.getLogger(__name__)

NORMATIVE = "normative"
LEGACY = "legacy"
ADVERSARY = "adversary"


def _hex(b: bytes) -> str:
    return "0x" + bytes(b).hex()


@dataclass
class AdversaryState:
    """
    What the adversary has scheduled and what it has observed.

    Attributes:
        pending (List[AdversaryActionSpec]): Actions not yet performed.
        public_vaas (Dict[int, bytes]): Encoded origin VAAs by sequence, as soon as guardians sign them.
        foreign_origins (Dict[bytes, OriginState]): Programs the adversary deployed, by emitter.
        foreign_vaas (Dict[bytes, List[bytes]]): Signed VAAs of those programs, by emitter.
        withheld (Set[int]): Sequences whose next delivery is intercepted.
    """

    pending: List[AdversaryActionSpec] = field(default_factory=list)
    public_vaas: Dict[int, bytes] = field(default_factory=dict)
    foreign_origins: Dict[bytes, OriginState] = field(default_factory=dict)
    foreign_vaas: Dict[bytes, List[bytes]] = field(default_factory=dict)
    withheld: Set[int] = field(default_factory=set)


class _PortalGateway:
    """The Portal as one caller reaches it; consumption calls are written to the trace."""

    def __init__(self, world: "World", caller: str):
        self._world = world
        self._caller = caller

    def __getattr__(self, name: str) -> Any:
        return getattr(self._world.portal, name)

    def consume(self, encoded_vaa: bytes):
        return self._world.call_portal(self._caller, NORMATIVE, encoded_vaa)

    def consume_with_secret(self, encoded_vaa: bytes, secret_hash: bytes):
        return self._world.call_portal(self._caller, LEGACY, encoded_vaa, secret_hash)


class _AztecGateway:
    def __init__(self, world: "World", caller: str):
        self._world = world
        self._caller = caller

    def __getattr__(self, name: str) -> Any:
        return getattr(self._world.aztec, name)

    def consume_from_inbox(self, content_hash: int, leaf_index: int, secret: int):
        return self._world.call_aztec(self._caller, content_hash, leaf_index, secret)


class _OriginGateway:
    def __init__(self, world: "World", caller: str):
        self._world = world
        self._caller = caller

    def __getattr__(self, name: str) -> Any:
        return getattr(self._world.origin, name)

    def record_receipt_from_vaa(
        self, account: PostedVaaAccount, pda_sequence_key: int, current_slot: int = 0
    ):
        return self._world.call_recorder(self._caller, account, pda_sequence_key, current_slot)


@dataclass
class _ActorView:
    portal: Any
    aztec: Any
    origin: Any
    slot: int


class World:
    def __init__(self, scenario: ScenarioSpec, seed: int = 0):
        """
        Build every actor of a scenario.

        Args:
            scenario (ScenarioSpec): The scenario to run.
            seed (int, optional): 64-bit seed of every random decision. Defaults to 0.

        Raises:
            InvalidScenario: If the scenario references undefined messages or actors.
        """
        self.scenario = scenario.validate()
        self.rng_seed = int(seed) & (2**64 - 1)
        self.rng = np.random.default_rng(self.rng_seed)
        config = self.config = scenario.config

        keys = generate_guardian_keys(config.guardians, seed=config.key_seed)
        policy = FinalityPolicy(config.confirmed_delay, config.finalized_delay)
        self.guardians = GuardianNode(keys, policy, signers=config.signers)
        self.origin = OriginState(guardian_set=self.guardians.set)
        self.aztec = AztecState()
        self.portal = Portal(
            PortalConfig(
                guardian_set=self.guardians.set,
                emitter_chain=self.origin.emitter_chain,
                emitter=self.origin.emitter_address,
                legacy_enabled=config.legacy_enabled,
            ),
            inbox=self.aztec,
        )
        self.origin.receipt_emitter = (ETHEREUM_CHAIN_ID, self.portal.config.portal_address)
        if config.set_portal:
            self.aztec.set_portal_once(self.portal.config.portal_address)

        self.messages = scenario.ordered_messages
        self.secrets = {
            sequence: self._secret(sequence, spec.secret)
            for sequence, spec in enumerate(self.messages)
        }
        self.relayers = [
            Relayer(
                relayer_id=spec.id,
                config=RelayerConfig(
                    max_retries=config.max_retries,
                    base_backoff=config.base_backoff,
                    backoff_multiplier=config.backoff_multiplier,
                    backoff_cap=config.backoff_cap,
                    honest=spec.honest,
                    submit_path=config.submit_path,
                    publish_receipts=config.receipts,
                ),
                secrets=dict(self.secrets) if spec.honest else {},
            )
            for spec in scenario.relayers
        ]
        self.adversary = AdversaryState(pending=list(scenario.adversary))

        self.deliveries: List[Tuple[int, bytes]] = []
        self.receipt_deliveries: List[Vaa] = []
        self.last_scheduled_tick = max(
            [m.tick for m in scenario.messages] + [a.tick for a in scenario.adversary] + [0]
        )
        self.tick = 0
        self.slot = 0
        self.event_log: List[Dict[str, Any]] = []

    def _secret(self, sequence: int, given: Optional[int]) -> int:
        if given is not None:
            return int(given)
        material = b"zkcbridge/secret" + self.rng_seed.to_bytes(8, "big") + sequence.to_bytes(8, "big")
        return int(to_field(keccak256(material)))

    def _log(self, name: str, **fields) -> None:
        record = {"tick": self.tick, "event": name}
        record.update(fields)
        self.event_log.append(record)

    def header(self) -> Dict[str, Any]:
        portal_config = self.portal.config
        return {
            "scenario": self.scenario.name,
            "seed": self.rng_seed,
            "ticks": self.scenario.ticks,
            "origin": {
                "chain": self.origin.emitter_chain,
                "emitter": _hex(self.origin.emitter_address),
            },
            "portal": {
                "chain": ETHEREUM_CHAIN_ID,
                "address": _hex(portal_config.portal_address),
                "l2_instance": _hex(portal_config.l2_instance),
                "rollup_version": portal_config.rollup_version,
                "legacy_enabled": portal_config.legacy_enabled,
            },
            "guardian_set": {
                "index": self.guardians.set.index,
                "keys": [_hex(key) for key in self.guardians.set.keys],
            },
            "policy": {
                "confirmed_delay": self.guardians.policy.confirmed_delay,
                "finalized_delay": self.guardians.policy.finalized_delay,
            },
            "fairness": self.config.fairness,
            "rollup_every": self.config.rollup_every,
            "relayers": [{"id": r.relayer_id, "honest": r.config.honest} for r in self.relayers],
        }

    @property
    def quiescent(self) -> bool:
        """Nothing scheduled, observed, in flight or queued can still change the world."""
        return (
            self.tick >= self.last_scheduled_tick
            and not self.guardians.observed
            and not self.deliveries
            and not self.receipt_deliveries
            and not self.portal.outbox
            and all(relayer.idle for relayer in self.relayers)
        )

    def run_simulation(self) -> TraceReport:
        """
        Run the scenario until the tick budget is spent or, if configured, the world is quiescent.

        Returns:
            TraceReport: Header and event log, without verdicts.
        """
        for tick in range(1, self.scenario.ticks + 1):
            self.tick = self.slot = tick
            logger.debug(f"Tick {tick}")

            self.post_messages()
            self.emit_vaas()
            self.adversary_turn()
            self.deliver()
            self.relayer_turn()
            if tick % self.config.rollup_every == 0:
                self.rollup()
            self.forward_receipts()

            if self.config.stop_when_quiescent and self.quiescent:
                break

        header = self.header()
        header["ticks_run"] = self.tick
        header["quiescent"] = self.quiescent
        logger.info(
            f"Scenario {self.scenario.name} seed {self.rng_seed} ran {self.tick} ticks, "
            f"{len(self.event_log)} events"
        )
        return TraceReport(header=header, events=list(self.event_log))

    def post_messages(self) -> None:
        for sequence, spec in enumerate(self.messages):
            if spec.tick != self.tick:
                continue
            if spec.raw_payload is not None:
                payload = bytes.fromhex(spec.raw_payload.removeprefix("0x"))
            else:
                payload = encode_bound_payload(
                    BoundPayload(secret_hash(self.secrets[sequence]), spec.message)
                )
            message = self.origin.post_wormhole_message(
                spec.batch_id, payload, Finality.parse(spec.finality), self.slot
            )
            self._log(
                "message_posted",
                emitter_chain=self.origin.emitter_chain,
                emitter=_hex(self.origin.emitter_address),
                seq=message.sequence,
                slot=self.slot,
                finality=int(message.finality_flag),
                payload=_hex(payload),
            )
            self.guardians.observe(message, self.origin.emitter_chain, self.origin.emitter_address)

    def emit_vaas(self) -> None:
        origin_pair = (self.origin.emitter_chain, self.origin.emitter_address)
        portal_pair = (ETHEREUM_CHAIN_ID, self.portal.config.portal_address)

        for vaa in self.guardians.emit_ready_vaas(self.slot):
            body = vaa.body
            encoded = encode_vaa(vaa)
            self._log(
                "vaa_emitted",
                h=_hex(vaa.hash),
                emitter_chain=body.emitter_chain,
                emitter=_hex(body.emitter_address),
                seq=body.sequence,
                post_slot=body.timestamp,
                finality=body.consistency_level,
                slot=self.slot,
                payload_length=len(body.payload),
            )
            pair = (body.emitter_chain, body.emitter_address)
            if pair == origin_pair:
                self.adversary.public_vaas[body.sequence] = encoded
                self.deliveries.append((body.sequence, encoded))
            elif pair == portal_pair:
                self.receipt_deliveries.append(vaa)
            else:
                self.adversary.foreign_vaas.setdefault(body.emitter_address, []).append(encoded)

    def adversary_turn(self) -> None:
        self._draw_random_action()
        waiting = []
        for action in self.adversary.pending:
            if action.tick > self.tick or not self._perform(action):
                waiting.append(action)
        self.adversary.pending = waiting

    def _draw_random_action(self) -> None:
        spec = self.scenario.random_adversary
        if not spec.kinds or spec.probability <= 0 or self.rng.random() >= spec.probability:
            return
        kind = spec.kinds[int(self.rng.integers(len(spec.kinds)))]
        if kind in TARGETED_KINDS and not self.messages:
            return
        action = AdversaryActionSpec(
            tick=self.tick,
            kind=kind,
            target=int(self.rng.integers(len(self.messages))) if kind in TARGETED_KINDS else None,
            times=int(self.rng.integers(1, 4)),
            emitter=self.rng.bytes(32).hex(),
            index=int(self.rng.integers(0, 64)),
            value=int(self.rng.integers(0, 256)),
            depth=int(self.rng.integers(1, 6)),
        )
        logger.debug(f"Random adversary draws {kind}")
        self.adversary.pending.append(action)

    def _perform(self, action: AdversaryActionSpec) -> bool:
        """Carry out an action; False if it has to wait for its target."""
        kind = action.kind
        record = action.to_dict()
        del record["tick"]

        if kind == "ReorgSlots":
            outcome = self.guardians.reorg(self.slot, action.depth, self.origin.emitter_chain)
            self._log(
                "reorg",
                depth=action.depth,
                reverted_from=outcome.reverted_from,
                dropped=[seq for _, _, seq in outcome.dropped],
                restamped=[seq for _, _, seq in outcome.restamped],
                orphaned=[seq for _, _, seq in outcome.orphaned],
            )
            for chain, emitter, seq in outcome.restamped:
                self._log(
                    "message_restamped",
                    emitter_chain=chain,
                    emitter=_hex(emitter),
                    seq=seq,
                    slot=self.slot,
                )
            self._log("adversary_action", result=["ok"], **record)
            return True

        if kind == "ReorderQueue":
            order = self.rng.permutation(len(self.deliveries))
            self.deliveries = [self.deliveries[int(i)] for i in order]
            self._log("adversary_action", result=["ok"], **record)
            return True

        if kind == "ForeignEmitter":
            return self._foreign_emitter(action, record)

        encoded = self.adversary.public_vaas.get(action.target)
        if encoded is None:
            return False

        if kind == "DropDelivery":
            in_flight = any(seq == action.target for seq, _ in self.deliveries)
            if in_flight:
                self.adversary.withheld.add(action.target)
            self._log("adversary_action", result=["withheld" if in_flight else "noop"], **record)
            return True

        vaa = decode_vaa(encoded)
        body = vaa.body
        if kind == "DuplicateSubmit":
            results = [self._submit(NORMATIVE, encoded) for _ in range(action.times)]
        elif kind == "FrontRunWithSecret":
            results = [self._submit(LEGACY, encoded, bytes.fromhex(action.secret_hash.removeprefix("0x")))]
        elif kind == "UnsignedVaa":
            results = [self._submit(NORMATIVE, encode_vaa(Vaa(body=body)))]
        elif kind == "ForgeEmitter":
            emitter = bytes.fromhex(action.emitter.removeprefix("0x"))
            if emitter == body.emitter_address:
                emitter = emitter[:-1] + bytes([emitter[-1] ^ 0x01])
            forged = dataclasses.replace(body, emitter_address=emitter)
            results = [self._submit(NORMATIVE, encode_vaa(Vaa(forged, vaa.signatures)))]
        else:
            results = [self._submit(NORMATIVE, encode_vaa(Vaa(self._tamper(body, action), vaa.signatures)))]

        self._log("adversary_action", result=results, **record)
        return True

    @staticmethod
    def _tamper(body, action: AdversaryActionSpec):
        payload = bytearray(body.payload)
        if not payload:
            payload.append(action.value)
        else:
            index = action.index % len(payload)
            payload[index] = action.value if payload[index] != action.value else action.value ^ 0x01
        return dataclasses.replace(body, payload=bytes(payload))

    def _foreign_emitter(self, action: AdversaryActionSpec, record: Dict[str, Any]) -> bool:
        emitter = bytes.fromhex(action.emitter.removeprefix("0x"))
        adversary = self.adversary
        if emitter not in adversary.foreign_origins:
            foreign = OriginState(guardian_set=self.guardians.set, emitter_address=emitter)
            adversary.foreign_origins[emitter] = foreign
            payload = bytes(32) + bytes.fromhex(action.m.removeprefix("0x"))
            message = foreign.post_wormhole_message(0, payload, Finality.CONFIRMED, self.slot)
            self._log(
                "message_posted",
                emitter_chain=foreign.emitter_chain,
                emitter=_hex(emitter),
                seq=message.sequence,
                slot=self.slot,
                finality=int(message.finality_flag),
                payload=_hex(payload),
            )
            self.guardians.observe(message, foreign.emitter_chain, emitter)
            return False

        signed = adversary.foreign_vaas.pop(emitter, [])
        if not signed:
            return False
        results = [self._submit(NORMATIVE, encoded) for encoded in signed]
        self._log("adversary_action", result=results, **record)
        return True

    def _submit(self, path: str, encoded: bytes, secret_hash: Optional[bytes] = None) -> str:
        try:
            self.call_portal(ADVERSARY, path, encoded, secret_hash)
        except BridgeError as exc:
            return exc.code
        return "ok"

    def deliver(self) -> None:
        batch, self.deliveries = self.deliveries, []
        for sequence, encoded in batch:
            if sequence in self.adversary.withheld:
                self.adversary.withheld.discard(sequence)
                if self.config.fairness:
                    self.deliveries.append((sequence, encoded))
                self._log("delivery_withheld", seq=sequence, permanent=not self.config.fairness)
                continue
            delivered = [r.relayer_id for r in self.relayers if r.deliver_vaa(encoded, self.tick)]
            self._log("vaa_delivered", seq=sequence, relayers=delivered)

        for vaa in self.receipt_deliveries:
            delivered = [
                r.relayer_id
                for r in self.relayers
                if r.deliver_receipt(vaa, WORMHOLE_CORE_OWNER, self.tick)
            ]
            self._log("receipt_delivered", h=_hex(vaa.hash), relayers=delivered)
        self.receipt_deliveries = []

    def relayer_turn(self) -> None:
        if not self.relayers:
            return
        start = self.tick % len(self.relayers)
        for relayer in self.relayers[start:] + self.relayers[:start]:
            view = _ActorView(
                portal=_PortalGateway(self, relayer.relayer_id),
                aztec=_AztecGateway(self, relayer.relayer_id),
                origin=_OriginGateway(self, relayer.relayer_id),
                slot=self.slot,
            )
            for outcome in relayer.step(view, self.tick):
                self._log("relayer_outcome", **outcome.to_dict())

    def rollup(self) -> None:
        included = self.aztec.rollup_tick()
        self._log("rollup_tick", block=self.aztec.current_block, included=included)

    def forward_receipts(self) -> None:
        address = self.portal.config.portal_address
        for message in self.portal.outbox:
            receipt = decode_receipt(message.payload)
            self._log(
                "receipt_posted",
                seq=message.sequence,
                orig_sequence=receipt.orig_sequence,
                leaf_index=receipt.leaf_index,
            )
            self.guardians.observe(message, ETHEREUM_CHAIN_ID, address)
        self.portal.outbox.clear()

    def call_portal(
        self,
        caller: str,
        path: str,
        encoded_vaa: bytes,
        secret_hash: Optional[bytes] = None,
    ):
        """
        Call the Portal and record the call, its outcome and the Portal state digest around it.

        Args:
            caller (str): Relayer id or "adversary".
            path (str): "normative" or "legacy".
            encoded_vaa (bytes): Wire-encoded VAA.
            secret_hash (Optional[bytes], optional): Caller-supplied secret hash on the legacy path.

        Returns:
            Whatever the Portal call returns.

        Raises:
            BridgeError: The Portal's rejection, after it has been recorded.
        """
        record: Dict[str, Any] = {"caller": caller, "path": path, "vaa": _hex(encoded_vaa)}
        try:
            vaa = decode_vaa(encoded_vaa)
            record.update(
                h=_hex(vaa.hash),
                seq=vaa.body.sequence,
                emitter_chain=vaa.body.emitter_chain,
                emitter=_hex(vaa.body.emitter_address),
            )
        except MalformedVaa:
            pass
        if secret_hash is not None:
            record["secret_hash"] = _hex(secret_hash)

        before = self.portal.state_digest()
        try:
            if path == LEGACY:
                events, result = self.portal.consume_with_secret(encoded_vaa, secret_hash)
            else:
                events, result = self.portal.consume(encoded_vaa)
        except BridgeError as exc:
            self._log(
                "portal_call",
                outcome=exc.code,
                state_before=before,
                state_after=self.portal.state_digest(),
                **record,
            )
            logger.info(f"Portal rejected {caller}'s {path} call: {exc.code}")
            raise

        self._log(
            "portal_call",
            outcome="ok",
            state_before=before,
            state_after=self.portal.state_digest(),
            **record,
        )
        for event in events:
            self._log("portal_event", **event.to_dict())
        return events, result

    def call_aztec(self, caller: str, content_hash: int, leaf_index: int, secret: int):
        presented = _hex(secret_hash(secret)) if 0 <= secret < BN254_R else None
        record = {
            "caller": caller,
            "leaf_index": leaf_index,
            "content": _hex(int(content_hash).to_bytes(32, "big")),
            "presented_secret_hash": presented,
        }
        before = self.aztec.state_digest()
        try:
            consumer = self.aztec.consume_from_inbox(content_hash, leaf_index, secret)
        except BridgeError as exc:
            self._log(
                "aztec_consume",
                outcome=exc.code,
                count=self.aztec.consumer.count,
                state_before=before,
                state_after=self.aztec.state_digest(),
                **record,
            )
            raise
        self._log(
            "aztec_consume",
            outcome="ok",
            count=consumer.count,
            state_before=before,
            state_after=self.aztec.state_digest(),
            **record,
        )
        return consumer

    def _origin_digest(self) -> str:
        material = b"".join(key.to_bytes(8, "big") for key in sorted(self.origin.receipts))
        return _hex(keccak256(material))

    def call_recorder(
        self, caller: str, account: PostedVaaAccount, pda_sequence_key: int, current_slot: int
    ):
        record = {"caller": caller, "pda_key": pda_sequence_key, "h": _hex(account.vaa.hash)}
        before = self._origin_digest()
        try:
            recorded = self.origin.record_receipt_from_vaa(account, pda_sequence_key, current_slot)
        except BridgeError as exc:
            self._log(
                "receipt_call",
                outcome=exc.code,
                state_before=before,
                state_after=self._origin_digest(),
                **record,
            )
            raise
        self._log(
            "receipt_call",
            outcome="ok",
            state_before=before,
            state_after=self._origin_digest(),
            orig_sequence=recorded.receipt.orig_sequence,
            **record,
        )
        return recorded


def run_scenario(scenario: ScenarioSpec, seed: int = 0) -> TraceReport:
    """
    Run a scenario and check every property on its trace.

    Args:
        scenario (ScenarioSpec): The scenario.
        seed (int, optional): 64-bit seed. Defaults to 0.

    Returns:
        TraceReport: Header, event log and verdicts. Identical inputs give identical reports.

    Raises:
        InvalidScenario: If the scenario is inconsistent.
    """
    report = World(scenario, seed).run_simulation()
    report.verdicts = check_properties(report).to_dict()
    return report
