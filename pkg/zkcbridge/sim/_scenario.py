"""
Scenario definitions for the simulator.

A scenario names the actors, the messages the origin posts, the adversary's actions and a tick budget. It is
plain data and round-trips through JSON:

    {
      "name": "replay",
      "ticks": 64,
      "config": {"guardians": 19, "rollup_every": 4},
      "relayers": [{"id": "r0", "honest": true}],
      "messages": [{"tick": 1, "m": "68656c6c6f", "finality": "confirmed", "secret": 7}],
      "adversary": [{"tick": 1, "kind": "DuplicateSubmit", "target": 0, "times": 5}],
      "random_adversary": {"probability": 0.1, "kinds": ["ReorderQueue"]}
    }

Message `n` in posting order (by tick, then listing order) receives origin sequence `n`; adversary targets
refer to those sequences.
"""

__all__ = [
    "ADVERSARY_KINDS",
    "TARGETED_KINDS",
    "InvalidScenario",
    "SimConfig",
    "MessageSpec",
    "RelayerSpec",
    "AdversaryActionSpec",
    "RandomAdversarySpec",
    "ScenarioSpec",
]

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..crypto import BN254_R
from ..errors import BridgeError
from ..origin import Finality

logger = logging.getLogger(__name__)

ADVERSARY_KINDS = (
    "DuplicateSubmit",
    "ReorderQueue",
    "FrontRunWithSecret",
    "ForgeEmitter",
    "UnsignedVaa",
    "TamperPayload",
    "DropDelivery",
    "ReorgSlots",
    "ForeignEmitter",
)
TARGETED_KINDS = (
    "DuplicateSubmit",
    "FrontRunWithSecret",
    "ForgeEmitter",
    "UnsignedVaa",
    "TamperPayload",
    "DropDelivery",
)


class InvalidScenario(BridgeError):
    pass


def _unhex(name: str, text: str, length: Optional[int] = None) -> bytes:
    try:
        value = bytes.fromhex(text.removeprefix("0x"))
    except (AttributeError, ValueError) as exc:
        raise InvalidScenario(f"{name} is not hex: {text!r}") from exc
    if length is not None and len(value) != length:
        raise InvalidScenario(f"{name} must be {length} bytes, got {len(value)}")
    return value


def _build(cls, data: Dict[str, Any], where: str):
    if not isinstance(data, dict):
        raise InvalidScenario(f"{where} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise InvalidScenario(f"Unknown keys in {where}: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError, KeyError) as exc:
        raise InvalidScenario(f"Bad {where}: {exc}") from exc


@dataclass(frozen=True)
class SimConfig:
    """
    World parameters.

    Attributes:
        guardians (int): Guardian set size. Defaults to 19.
        signers (int): Guardians signing each VAA, 0 for all. Defaults to 0.
        key_seed (int): Seed of guardian key derivation. Defaults to 0.
        confirmed_delay (int): Guardian delay for Confirmed messages, in slots. Defaults to 2.
        finalized_delay (int): Guardian delay for Finalized messages, in slots. Defaults to 32.
        rollup_every (int): Ticks between rollup blocks. Defaults to 4.
        fairness (bool): Whether the adversary is prevented from starving relayers. Defaults to True.
        legacy_enabled (bool): Whether the Portal's legacy path is on. Defaults to False.
        submit_path (str): How honest relayers submit, "normative" or "legacy". Defaults to "normative".
        receipts (bool): Whether honest relayers publish and record receipts. Defaults to False.
        set_portal (bool): Whether the consumer is configured with the Portal address. Defaults to True.
        max_retries (int): Relayer attempts per task. Defaults to 10.
        base_backoff (int): First relayer retry delay. Defaults to 1.
        backoff_multiplier (float): Relayer backoff growth. Defaults to 2.
        backoff_cap (int): Largest relayer retry delay. Defaults to 16.
        stop_when_quiescent (bool): End the run early once nothing is pending. Defaults to True.
    """

    guardians: int = 19
    signers: int = 0
    key_seed: int = 0
    confirmed_delay: int = 2
    finalized_delay: int = 32
    rollup_every: int = 4
    fairness: bool = True
    legacy_enabled: bool = False
    submit_path: str = "normative"
    receipts: bool = False
    set_portal: bool = True
    max_retries: int = 10
    base_backoff: int = 1
    backoff_multiplier: float = 2
    backoff_cap: int = 16
    stop_when_quiescent: bool = True

    def __post_init__(self):
        if self.guardians < 1 or self.rollup_every < 1:
            raise ValueError("guardians and rollup_every must be positive")
        if self.submit_path not in ("normative", "legacy"):
            raise ValueError(f"Unknown submit_path {self.submit_path!r}")


@dataclass(frozen=True)
class MessageSpec:
    """
    A message the origin program posts.

    Attributes:
        tick (int): Tick of posting.
        m (str): Hex of the user message. Defaults to "".
        finality (str): "confirmed" or "finalized". Defaults to "confirmed".
        secret (Optional[int]): Consumer secret; derived from the seed when omitted.
        batch_id (int): Batch id. Defaults to 0.
        raw_payload (Optional[str]): Hex payload posted verbatim instead of secretHash || m.
    """

    tick: int
    m: str = ""
    finality: str = "confirmed"
    secret: Optional[int] = None
    batch_id: int = 0
    raw_payload: Optional[str] = None

    def __post_init__(self):
        _unhex("m", self.m)
        if self.raw_payload is not None:
            _unhex("raw_payload", self.raw_payload)
        if self.secret is not None and not 0 <= self.secret < BN254_R:
            raise ValueError("secret must be a field element")
        try:
            Finality.parse(self.finality)
        except KeyError as exc:
            raise ValueError(f"Unknown finality {self.finality!r}") from exc

    @property
    def message(self) -> bytes:
        return bytes.fromhex(self.m.removeprefix("0x"))


@dataclass(frozen=True)
class RelayerSpec:
    id: str
    honest: bool = True


@dataclass(frozen=True)
class AdversaryActionSpec:
    """
    One adversary action.

    Attributes:
        tick (int): First tick the action may fire. Targeted actions wait until their VAA is public.
        kind (str): One of ADVERSARY_KINDS.
        target (Optional[int]): Origin sequence, for targeted kinds.
        times (int): Submissions, for DuplicateSubmit. Defaults to 1.
        secret_hash (Optional[str]): Hex secret hash, for FrontRunWithSecret.
        emitter (Optional[str]): Hex 32-byte emitter, for ForgeEmitter and ForeignEmitter.
        index (int): Payload byte index, for TamperPayload. Defaults to 0.
        value (int): Byte value, for TamperPayload. Defaults to 0xFF.
        depth (int): Slots to revert, for ReorgSlots. Defaults to 1.
        m (str): Hex message, for ForeignEmitter. Defaults to "".
    """

    tick: int
    kind: str
    target: Optional[int] = None
    times: int = 1
    secret_hash: Optional[str] = None
    emitter: Optional[str] = None
    index: int = 0
    value: int = 0xFF
    depth: int = 1
    m: str = ""

    def __post_init__(self):
        if self.kind not in ADVERSARY_KINDS:
            raise ValueError(f"Unknown adversary action {self.kind!r}")
        if self.kind in TARGETED_KINDS and self.target is None:
            raise ValueError(f"{self.kind} needs a target sequence")
        if self.kind == "FrontRunWithSecret":
            _unhex("secret_hash", self.secret_hash or "", 32)
        if self.kind in ("ForgeEmitter", "ForeignEmitter"):
            _unhex("emitter", self.emitter or "", 32)
        if not 0 <= self.value <= 0xFF or self.index < 0:
            raise ValueError("TamperPayload needs index >= 0 and a byte value")
        if self.times < 1 or self.depth < 1:
            raise ValueError("times and depth must be positive")
        _unhex("m", self.m)

    def to_dict(self) -> Dict[str, Any]:
        defaults = AdversaryActionSpec(tick=0, kind="ReorderQueue")
        record = {"tick": self.tick, "kind": self.kind}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.name not in record and value != getattr(defaults, f.name):
                record[f.name] = value
        return record


@dataclass(frozen=True)
class RandomAdversarySpec:
    """Each tick, with `probability`, fire one action of a kind drawn from `kinds` at a random target."""

    probability: float = 0.0
    kinds: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError("probability must lie in [0, 1]")
        for kind in self.kinds:
            if kind not in ADVERSARY_KINDS or kind in ("FrontRunWithSecret", "ForeignEmitter"):
                raise ValueError(f"{kind!r} cannot be drawn at random")


@dataclass(frozen=True)
class ScenarioSpec:
    """
    A complete scenario.

    Attributes:
        name (str): Scenario name.
        ticks (int): Tick budget.
        config (SimConfig): World parameters.
        relayers (Tuple[RelayerSpec, ...]): Relayer actors.
        messages (Tuple[MessageSpec, ...]): Origin messages.
        adversary (Tuple[AdversaryActionSpec, ...]): Scheduled adversary actions.
        random_adversary (RandomAdversarySpec): Probabilistic adversary.
    """

    name: str
    ticks: int = 64
    config: SimConfig = field(default_factory=SimConfig)
    relayers: Tuple[RelayerSpec, ...] = (RelayerSpec("r0"),)
    messages: Tuple[MessageSpec, ...] = ()
    adversary: Tuple[AdversaryActionSpec, ...] = ()
    random_adversary: RandomAdversarySpec = field(default_factory=RandomAdversarySpec)

    def validate(self) -> "ScenarioSpec":
        """
        Check cross-references between the parts of the scenario.

        Returns:
            ScenarioSpec: self, for chaining.

        Raises:
            InvalidScenario: If a tick, target or relayer reference is out of range.
        """
        if self.ticks < 1:
            raise InvalidScenario("Tick budget must be positive")
        ids = [r.id for r in self.relayers]
        if len(set(ids)) != len(ids):
            raise InvalidScenario(f"Relayer ids are not unique: {ids}")
        for message in self.messages:
            if not 1 <= message.tick <= self.ticks:
                raise InvalidScenario(f"Message tick {message.tick} outside 1..{self.ticks}")
        for action in self.adversary:
            if not 1 <= action.tick <= self.ticks:
                raise InvalidScenario(f"Action tick {action.tick} outside 1..{self.ticks}")
            if action.target is not None and not 0 <= action.target < len(self.messages):
                raise InvalidScenario(
                    f"{action.kind} targets sequence {action.target}, only {len(self.messages)} messages"
                )
        return self

    @property
    def ordered_messages(self) -> List[MessageSpec]:
        return sorted(self.messages, key=lambda message: message.tick)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScenarioSpec":
        if not isinstance(data, dict):
            raise InvalidScenario("Scenario must be a JSON object")
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise InvalidScenario(f"Unknown scenario keys: {sorted(unknown)}")
        if "name" not in data:
            raise InvalidScenario("Scenario needs a name")
        try:
            ticks = int(data.get("ticks", 64))
        except (TypeError, ValueError) as exc:
            raise InvalidScenario(f"Scenario ticks {data.get('ticks')!r} is not an integer") from exc

        spec = cls(
            name=str(data["name"]),
            ticks=ticks,
            config=_build(SimConfig, data.get("config", {}), "config"),
            relayers=tuple(
                _build(RelayerSpec, r, "relayer") for r in data.get("relayers", [{"id": "r0"}])
            ),
            messages=tuple(_build(MessageSpec, m, "message") for m in data.get("messages", [])),
            adversary=tuple(
                _build(AdversaryActionSpec, a, "adversary action")
                for a in data.get("adversary", [])
            ),
            random_adversary=_build(
                RandomAdversarySpec, data.get("random_adversary", {}), "random_adversary"
            ),
        )
        return spec.validate()

    @classmethod
    def from_json(cls, source: Union[str, Path]) -> "ScenarioSpec":
        """
        Load a scenario from a JSON file path or a JSON string.

        Args:
            source (Union[str, Path]): Path to a file, or the JSON text itself.

        Returns:
            ScenarioSpec: The validated scenario.
        """
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidScenario(f"Scenario is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        defaults = SimConfig()
        return {
            "name": self.name,
            "ticks": self.ticks,
            "config": {
                f.name: getattr(self.config, f.name)
                for f in dataclasses.fields(SimConfig)
                if getattr(self.config, f.name) != getattr(defaults, f.name)
            },
            "relayers": [dataclasses.asdict(r) for r in self.relayers],
            "messages": [
                {k: v for k, v in dataclasses.asdict(m).items() if v is not None}
                for m in self.messages
            ],
            "adversary": [a.to_dict() for a in self.adversary],
            "random_adversary": {
                "probability": self.random_adversary.probability,
                "kinds": list(self.random_adversary.kinds),
            },
        }
