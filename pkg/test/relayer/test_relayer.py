from dataclasses import dataclass

import pytest

from zkcbridge.aztec import AztecState
from zkcbridge.codec import BoundPayload, Vaa, decode_vaa, encode_bound_payload, encode_vaa
from zkcbridge.crypto import generate_guardian_keys, secret_hash
from zkcbridge.guardians import FinalityPolicy, GuardianNode
from zkcbridge.origin import WORMHOLE_CORE_OWNER, Finality, OriginState
from zkcbridge.portal import ETHEREUM_CHAIN_ID, Portal, PortalConfig
from zkcbridge.relayer import (
    MissingEnqueueEvent,
    Relayer,
    RelayerConfig,
    TaskKind,
    derive_consume_task,
)


@dataclass
class MockWorld:
    guardians: GuardianNode
    origin: OriginState
    aztec: AztecState
    portal: Portal
    slot: int = 0


@pytest.fixture
def world() -> MockWorld:
    """
    Fixture with every chain a relayer talks to, wired together.

    Returns:
        MockWorld: Guardians signing immediately, an origin program, Aztec and a Portal.
    """
    guardians = GuardianNode(generate_guardian_keys(4, seed=9), FinalityPolicy(0, 0))
    origin = OriginState(guardian_set=guardians.set)
    aztec = AztecState()
    portal = Portal(
        PortalConfig(
            guardian_set=guardians.set,
            emitter_chain=origin.emitter_chain,
            emitter=origin.emitter_address,
        ),
        inbox=aztec,
    )
    aztec.set_portal_once(portal.config.portal_address)
    return MockWorld(guardians, origin, aztec, portal)


def _post(world: MockWorld, secret: int, m: bytes = b"hello") -> bytes:
    payload = encode_bound_payload(BoundPayload(secret_hash(secret), m))
    message = world.origin.post_wormhole_message(0, payload, Finality.CONFIRMED, world.slot)
    world.guardians.observe(message, world.origin.emitter_chain, world.origin.emitter_address)
    (vaa,) = world.guardians.emit_ready_vaas(world.slot)
    return encode_vaa(vaa)


def test_backoff_schedule() -> None:
    cfg = RelayerConfig()
    assert [cfg.backoff(a) for a in range(6)] == [1, 2, 4, 8, 16, 16]
    assert RelayerConfig(base_backoff=3, backoff_multiplier=1.5, backoff_cap=5).backoff(1) == 5


def test_config_validation() -> None:
    with pytest.raises(ValueError):
        RelayerConfig(max_retries=0)
    with pytest.raises(ValueError):
        RelayerConfig(backoff_cap=0)
    with pytest.raises(ValueError):
        RelayerConfig(submit_path="sideways")


def test_submit_then_consume(world: MockWorld) -> None:
    """
    Test the whole relayer flow: submit, wait for inclusion, consume.

    Args:
        world (MockWorld): Wired chains.
    """
    relayer = Relayer("r0", secrets={0: 7})
    encoded = _post(world, 7)
    assert relayer.deliver_vaa(encoded, tick=1)
    assert not relayer.deliver_vaa(encoded, tick=1)

    (outcome,) = relayer.step(world, 1)
    assert (outcome.task_kind, outcome.outcome) == ("SubmitVaa", "ok")
    assert [t.kind for t in relayer.tasks] == [TaskKind.CONSUME_ON_AZTEC]
    assert relayer.tasks[0].next_eligible_tick == 2

    (outcome,) = relayer.step(world, 2)
    assert (outcome.outcome, outcome.retry_at, outcome.leaf_index) == ("NotYetIncluded", 3, 0)

    world.aztec.rollup_tick()
    (outcome,) = relayer.step(world, 3)
    assert (outcome.task_kind, outcome.outcome, outcome.attempt) == ("ConsumeOnAztec", "ok", 1)
    assert world.aztec.consumer.count == 1
    assert relayer.idle


def test_waits_until_eligible(world: MockWorld) -> None:
    relayer = Relayer("r0", secrets={0: 7})
    relayer.deliver_vaa(_post(world, 7), tick=5)
    assert relayer.step(world, 4) == []
    assert len(relayer.tasks) == 1


def test_honest_relayer_consumes_after_losing_the_race(world: MockWorld) -> None:
    encoded = _post(world, 7)
    world.portal.consume(encoded)
    relayer = Relayer("r0", secrets={0: 7})
    relayer.deliver_vaa(encoded, tick=1)

    (outcome,) = relayer.step(world, 1)
    assert outcome.outcome == "AlreadyConsumed"
    assert [t.kind for t in relayer.tasks] == [TaskKind.CONSUME_ON_AZTEC]

    world.aztec.rollup_tick()
    relayer.step(world, 2)
    assert world.aztec.consumer.count == 1


def test_dishonest_relayer_never_consumes(world: MockWorld) -> None:
    relayer = Relayer("mallory", config=RelayerConfig(honest=False), secrets={0: 7})
    relayer.deliver_vaa(_post(world, 7), tick=1)
    (outcome,) = relayer.step(world, 1)
    assert outcome.outcome == "ok"
    assert relayer.idle
    assert world.aztec.consumer.count == 0


def test_wrong_secret_is_not_used(world: MockWorld) -> None:
    relayer = Relayer("r0", secrets={0: 8})
    relayer.deliver_vaa(_post(world, 7), tick=1)
    relayer.step(world, 1)
    assert relayer.idle


def test_gives_up_after_max_retries(world: MockWorld) -> None:
    relayer = Relayer("r0", config=RelayerConfig(max_retries=2), secrets={0: 7})
    relayer.deliver_vaa(_post(world, 7), tick=1)
    relayer.step(world, 1)
    (first,) = relayer.step(world, 2)
    (second,) = relayer.step(world, first.retry_at)
    assert first.outcome == "NotYetIncluded"
    assert second.outcome == "GaveUp:NotYetIncluded"
    assert relayer.idle


def test_permanent_failure_is_dropped(world: MockWorld) -> None:
    vaa = decode_vaa(_post(world, 7, m=b""))
    relayer = Relayer("r0", secrets={0: 7})
    relayer.deliver_vaa(encode_vaa(Vaa(body=vaa.body)), tick=1)
    (outcome,) = relayer.step(world, 1)
    assert outcome.outcome == "InvalidVaa"
    assert relayer.idle


def test_derive_consume_task_needs_enqueue(world: MockWorld) -> None:
    vaa = decode_vaa(_post(world, 7))
    with pytest.raises(MissingEnqueueEvent):
        derive_consume_task(vaa, 7, world.portal.events)

    events, result = world.portal.consume(encode_vaa(vaa))
    task = derive_consume_task(vaa, 7, events, tick=4)
    assert task.payload.leaf_index == result.leaf_index
    assert task.payload.secret_hash == secret_hash(7)
    assert task.next_eligible_tick == 4


def test_receipt_round_trip(world: MockWorld) -> None:
    """
    Test that a relayer publishing receipts gets one recorded on the origin program.

    Args:
        world (MockWorld): Wired chains.
    """
    relayer = Relayer("r0", config=RelayerConfig(publish_receipts=True), secrets={0: 7})
    relayer.deliver_vaa(_post(world, 7), tick=1)
    relayer.step(world, 1)
    world.aztec.rollup_tick()
    relayer.step(world, 2)

    (message,) = world.portal.outbox
    world.guardians.observe(message, ETHEREUM_CHAIN_ID, world.portal.config.portal_address)
    (receipt_vaa,) = world.guardians.emit_ready_vaas(world.slot)
    assert relayer.deliver_receipt(receipt_vaa, WORMHOLE_CORE_OWNER, tick=3)
    assert not relayer.deliver_receipt(receipt_vaa, WORMHOLE_CORE_OWNER, tick=3)

    (outcome,) = relayer.step(world, 3)
    assert (outcome.task_kind, outcome.outcome) == ("RecordReceipt", "ok")
    assert world.origin.receipts[0].receipt.leaf_index == 0
