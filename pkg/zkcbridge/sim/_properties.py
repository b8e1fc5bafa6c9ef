"""
Property checkers.

Every checker reads a finished `TraceReport` and nothing else: it recomputes hashes, commitments and
signatures from the logged bytes rather than trusting the actors that produced them.

Properties:
    - replay_safety: at most one successful Portal consumption per VAA hash.
    - authenticity: every accepted VAA carries a guardian quorum over its body and names the configured origin.
    - finality_alignment: no VAA is signed before post_slot + delay(flag), none is accepted before it was signed.
    - parameter_binding: each enqueued commitment recomputes from the logged payload.
    - no_front_running: each VAA hash maps to one (c, secretHash), and it is the pair the signed body fixes.
    - single_consumption: each inbox leaf is consumed at most once and the consumer count moves in steps of one.
    - idempotence: per origin sequence, at most one enqueue and at most one Aztec consumption.
    - liveness: with fairness on and an honest relayer, every signed message is consumed on the Portal and on Aztec.
    - atomicity: a rejected call leaves the state digest it was made against unchanged.
    - knowledge_gating: every successful Aztec consumption presented a secret hashing to the leaf's secretHash.

Witnesses produced on the legacy path are marked, so that callers can tell the legacy interface's known
weakness apart from a failure of the normative protocol.
"""

__all__ = [
    "Verdict",
    "PropertyVerdict",
    "PropertyVerdicts",
    "PROPERTY_NAMES",
    "check_properties",
]

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple

from ..codec import decode_vaa
from ..crypto import GuardianSet, commitment, domain_tag, keccak256, to_field, verify_quorum
from ..errors import MalformedVaa
from ._trace import TraceReport

logger = logging.getLogger(__name__)

LEGACY = "legacy"
FINALIZED_FLAG = 32

Witness = Dict[str, Any]


class Verdict(str, Enum):
    PASS = "PASS"
    VIOLATED = "VIOLATED"
    NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass(frozen=True)
class PropertyVerdict:
    """
    The outcome of one property on one trace.

    Attributes:
        name (str): Property name.
        status (Verdict): PASS, VIOLATED or NOT_APPLICABLE.
        witnesses (Tuple[Witness, ...]): Evidence of each violation.
        legacy_only (bool): True when every witness arises from the legacy interface.
    """

    name: str
    status: Verdict
    witnesses: Tuple[Witness, ...] = ()
    legacy_only: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status.value,
            "witnesses": list(self.witnesses),
            "legacy_only": self.legacy_only,
        }


@dataclass
class PropertyVerdicts:
    verdicts: Dict[str, PropertyVerdict] = field(default_factory=dict)

    def __getitem__(self, name: str) -> PropertyVerdict:
        return self.verdicts[name]

    def __iter__(self) -> Iterator[PropertyVerdict]:
        return iter(self.verdicts.values())

    def violated(self, include_legacy: bool = True) -> List[str]:
        """Names of violated properties, optionally leaving out those violated only on the legacy path."""
        return [
            v.name
            for v in self
            if v.status is Verdict.VIOLATED and (include_legacy or not v.legacy_only)
        ]

    @property
    def ok(self) -> bool:
        return not self.violated(include_legacy=False)

    def to_dict(self) -> Dict[str, Any]:
        return {name: verdict.to_dict() for name, verdict in self.verdicts.items()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PropertyVerdicts":
        return cls(
            {
                name: PropertyVerdict(
                    name=name,
                    status=Verdict(record["status"]),
                    witnesses=tuple(record.get("witnesses", ())),
                    legacy_only=record.get("legacy_only", False),
                )
                for name, record in data.items()
            }
        )


class _Facts:
    """Indexes over a trace shared by the checkers."""

    def __init__(self, trace: TraceReport):
        header = trace.header
        self.header = header
        self.events = trace.events
        origin = header.get("origin", {})
        self.origin_pair = (origin.get("chain"), origin.get("emitter"))
        keys = header.get("guardian_set", {}).get("keys", [])
        self.guardian_set: Optional[GuardianSet] = None
        if keys:
            self.guardian_set = GuardianSet(
                index=header["guardian_set"]["index"],
                keys=tuple(bytes.fromhex(k.removeprefix("0x")) for k in keys),
            )
        policy = header.get("policy", {})
        self.confirmed_delay = policy.get("confirmed_delay", 0)
        self.finalized_delay = policy.get("finalized_delay", 0)
        self.honest = {r["id"] for r in header.get("relayers", []) if r.get("honest")}

        self.calls = [e for e in self.events if e["event"] == "portal_call"]
        self.accepted = [e for e in self.calls if e["outcome"] == "ok"]
        self.consumed = {
            e["h"]: e for e in self.events if e["event"] == "portal_event" and e["kind"] == "VaaConsumed"
        }
        self.enqueued = [
            e for e in self.events if e["event"] == "portal_event" and e["kind"] == "InboxEnqueued"
        ]
        self.leaves = {e["leaf_index"]: e for e in self.enqueued}
        self.aztec_calls = [e for e in self.events if e["event"] == "aztec_consume"]
        self.emitted = [e for e in self.events if e["event"] == "vaa_emitted"]

    def is_origin(self, event: Dict[str, Any]) -> bool:
        return (event.get("emitter_chain"), event.get("emitter")) == self.origin_pair

    def delay(self, finality: int) -> int:
        return self.finalized_delay if finality == FINALIZED_FLAG else self.confirmed_delay

    def expected_pair(self, enqueue: Dict[str, Any]) -> Optional[Tuple[str, Optional[str]]]:
        """
        (c, secretHash) the signed payload fixes under the path the enqueue took.

        The secret hash is None when the payload is too short to carry one; the whole pair is None when the
        payload was never logged or a normative enqueue could not have parsed it.
        """
        consumed = self.consumed.get(enqueue["h"])
        if consumed is None:
            return None
        payload = bytes.fromhex(consumed["payload"].removeprefix("0x"))
        prefix = "0x" + payload[:32].hex() if len(payload) >= 32 else None
        if enqueue["path"] == LEGACY:
            c = to_field(keccak256(payload))
        elif prefix is None:
            return None
        else:
            emitter = bytes.fromhex(enqueue["emitter"].removeprefix("0x"))
            c = commitment(domain_tag(enqueue["emitter_chain"], emitter, enqueue["seq"]), payload[32:])
        return "0x" + c.to_bytes32().hex(), prefix


_CHECKERS: Dict[str, Callable[[_Facts], Optional[List[Witness]]]] = {}


def _property(name: str):
    """Register a checker. A checker returns its witnesses, or None when the property does not apply."""

    def register(func):
        _CHECKERS[name] = func
        return func

    return register


@_property("replay_safety")
def _replay_safety(facts: _Facts) -> List[Witness]:
    successes = Counter(call["h"] for call in facts.accepted)
    enqueues = Counter(e["h"] for e in facts.enqueued)
    return [
        {"h": h, "successes": successes[h], "enqueues": enqueues[h]}
        for h in sorted(set(successes) | set(enqueues))
        if successes[h] > 1 or enqueues[h] > 1
    ]


@_property("authenticity")
def _authenticity(facts: _Facts) -> List[Witness]:
    witnesses = []
    for call in facts.accepted:
        reason = None
        try:
            vaa = decode_vaa(bytes.fromhex(call["vaa"].removeprefix("0x")))
        except MalformedVaa:
            vaa, reason = None, "undecodable"
        if vaa is not None:
            body = vaa.body
            pair = (body.emitter_chain, "0x" + body.emitter_address.hex())
            if "0x" + vaa.hash.hex() != call.get("h"):
                reason = "hash mismatch"
            elif facts.guardian_set is None or not (
                body.guardian_set_index == facts.guardian_set.index
                and verify_quorum(vaa.hash, vaa.signatures, facts.guardian_set)
            ):
                reason = "no quorum"
            elif pair != facts.origin_pair:
                reason = "wrong origin"
        if reason:
            witnesses.append({"tick": call["tick"], "h": call.get("h"), "caller": call["caller"], "reason": reason})
    return witnesses


@_property("finality_alignment")
def _finality_alignment(facts: _Facts) -> List[Witness]:
    witnesses, signed = [], set()
    # Latest slot each message was (re-)included at, as observed on the origin side.
    posted: Dict[Tuple[Any, Any, Any], int] = {}
    for event in facts.events:
        if event["event"] in ("message_posted", "message_restamped"):
            posted[event["emitter_chain"], event["emitter"], event["seq"]] = event["slot"]
        elif event["event"] == "vaa_emitted":
            key = (event["emitter_chain"], event["emitter"], event["seq"])
            earliest = posted.get(key, event["post_slot"]) + facts.delay(event["finality"])
            if event["slot"] < earliest:
                witnesses.append(
                    {"h": event["h"], "seq": event["seq"], "signed_at": event["slot"], "earliest": earliest}
                )
            signed.add(event["h"])
        elif event["event"] == "portal_call" and event["outcome"] == "ok" and event["h"] not in signed:
            witnesses.append({"h": event["h"], "accepted_at": event["tick"], "reason": "accepted before signed"})
    return witnesses


@_property("parameter_binding")
def _parameter_binding(facts: _Facts) -> List[Witness]:
    witnesses = []
    for enqueue in facts.enqueued:
        expected = facts.expected_pair(enqueue)
        if expected is None:
            witnesses.append({"h": enqueue["h"], "path": enqueue["path"], "reason": "no parsable payload"})
            continue
        c, secret_hash = expected
        bad_c = enqueue["c"] != c
        bad_hash = enqueue["path"] != LEGACY and enqueue["secret_hash"] != secret_hash
        if bad_c or bad_hash:
            witnesses.append(
                {"h": enqueue["h"], "path": enqueue["path"], "enqueued_c": enqueue["c"], "recomputed_c": c}
            )
    return witnesses


@_property("no_front_running")
def _no_front_running(facts: _Facts) -> List[Witness]:
    witnesses = []
    pairs = defaultdict(set)
    for enqueue in facts.enqueued:
        pairs[enqueue["h"]].add((enqueue["c"], enqueue["secret_hash"], enqueue["path"]))
    for h, seen in sorted(pairs.items()):
        if len(seen) > 1:
            witnesses.append(
                {"h": h, "path": "mixed", "pairs": sorted([list(p) for p in seen])}
            )

    callers = {call["h"]: call["caller"] for call in facts.accepted}
    for enqueue in facts.enqueued:
        expected = facts.expected_pair(enqueue)
        enqueued = (enqueue["c"], enqueue["secret_hash"])
        if expected is not None and enqueued != expected:
            witnesses.append(
                {
                    "h": enqueue["h"],
                    "path": enqueue["path"],
                    "caller": callers.get(enqueue["h"]),
                    "enqueued": {"c": enqueued[0], "secret_hash": enqueued[1]},
                    "payload_derived": {"c": expected[0], "secret_hash": expected[1]},
                }
            )
    return witnesses


@_property("single_consumption")
def _single_consumption(facts: _Facts) -> List[Witness]:
    witnesses, consumed, count = [], Counter(), 0
    for call in facts.aztec_calls:
        if call["outcome"] == "ok":
            consumed[call["leaf_index"]] += 1
            count += 1
            if consumed[call["leaf_index"]] > 1:
                witnesses.append({"tick": call["tick"], "leaf_index": call["leaf_index"], "reason": "consumed twice"})
        if call["count"] != count:
            witnesses.append(
                {"tick": call["tick"], "leaf_index": call["leaf_index"], "count": call["count"], "expected": count}
            )
    return witnesses


@_property("idempotence")
def _idempotence(facts: _Facts) -> List[Witness]:
    def triple(event):
        return (event["emitter_chain"], event["emitter"], event["seq"])

    enqueues = Counter(triple(e) for e in facts.enqueued)
    consumptions = Counter(
        triple(facts.leaves[call["leaf_index"]])
        for call in facts.aztec_calls
        if call["outcome"] == "ok" and call["leaf_index"] in facts.leaves
    )
    return [
        {"emitter_chain": k[0], "emitter": k[1], "seq": k[2], "enqueues": enqueues[k], "consumptions": consumptions[k]}
        for k in sorted(set(enqueues) | set(consumptions))
        if enqueues[k] > 1 or consumptions[k] > 1
    ]


@_property("liveness")
def _liveness(facts: _Facts) -> Optional[List[Witness]]:
    emitted = [e for e in facts.emitted if facts.is_origin(e)]
    if not facts.header.get("fairness") or not facts.honest or not emitted:
        return None

    witnesses = []
    accepted = {call["h"] for call in facts.accepted}
    for event in emitted:
        if event["payload_length"] >= 32 and event["h"] not in accepted:
            witnesses.append({"h": event["h"], "seq": event["seq"], "missing": "portal", "path": "normative"})

    consumed = {call["leaf_index"] for call in facts.aztec_calls if call["outcome"] == "ok"}
    for enqueue in facts.enqueued:
        if facts.is_origin(enqueue) and enqueue["leaf_index"] not in consumed:
            witnesses.append(
                {"h": enqueue["h"], "seq": enqueue["seq"], "missing": "aztec", "path": enqueue["path"]}
            )
    return witnesses


@_property("atomicity")
def _atomicity(facts: _Facts) -> List[Witness]:
    return [
        {"tick": e["tick"], "event": e["event"], "caller": e["caller"], "outcome": e["outcome"]}
        for e in facts.events
        if e["event"] in ("portal_call", "aztec_consume", "receipt_call")
        and (e["outcome"] == "ok") == (e["state_before"] == e["state_after"])
    ]


@_property("knowledge_gating")
def _knowledge_gating(facts: _Facts) -> List[Witness]:
    witnesses = []
    for call in facts.aztec_calls:
        if call["outcome"] != "ok":
            continue
        leaf = facts.leaves.get(call["leaf_index"])
        if leaf is None or call["presented_secret_hash"] != leaf["secret_hash"] or call["content"] != leaf["c"]:
            witnesses.append({"tick": call["tick"], "leaf_index": call["leaf_index"], "caller": call["caller"]})
    return witnesses


PROPERTY_NAMES = tuple(_CHECKERS)


def check_properties(trace: TraceReport) -> PropertyVerdicts:
    """
    Evaluate every registered property on a trace.

    Args:
        trace (TraceReport): A complete trace. An empty one passes every universally quantified property.

    Returns:
        PropertyVerdicts: One verdict per property, in registration order.
    """
    facts = _Facts(trace)
    verdicts = PropertyVerdicts()
    for name, checker in _CHECKERS.items():
        witnesses = checker(facts)
        if witnesses is None:
            verdict = PropertyVerdict(name, Verdict.NOT_APPLICABLE)
        elif not witnesses:
            verdict = PropertyVerdict(name, Verdict.PASS)
        else:
            legacy_only = all(w.get("path") == LEGACY for w in witnesses)
            verdict = PropertyVerdict(name, Verdict.VIOLATED, tuple(witnesses), legacy_only)
            logger.warning(f"{name} violated with {len(witnesses)} witness(es)")
        verdicts.verdicts[name] = verdict
    return verdicts
