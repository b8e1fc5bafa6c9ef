import pytest

from zkcbridge.crypto import generate_guardian_keys, verify_quorum
from zkcbridge.guardians import FinalityPolicy, GuardianNode
from zkcbridge.origin import Finality, PostedMessage

EMITTER = b"\x0a" * 32


def _message(sequence: int, post_slot: int, finality: Finality = Finality.CONFIRMED) -> PostedMessage:
    return PostedMessage(
        batch_id=sequence + 100,
        payload=bytes(32) + bytes([sequence]),
        finality_flag=finality,
        sequence=sequence,
        post_slot=post_slot,
    )


@pytest.fixture
def node() -> GuardianNode:
    """
    Fixture with a seven-guardian network using the default finality delays.

    Returns:
        GuardianNode: Guardians with confirmed delay 2 and finalized delay 32.
    """
    return GuardianNode(generate_guardian_keys(7), FinalityPolicy())


def test_observe_is_idempotent(node: GuardianNode) -> None:
    assert node.observe(_message(0, 1), 1, EMITTER)
    assert not node.observe(_message(0, 1), 1, EMITTER)
    assert node.observe(_message(0, 1), 1, b"\x0b" * 32)
    assert len(node.observed) == 2


def test_confirmed_waits_for_delay(node: GuardianNode) -> None:
    """
    Test that a Confirmed message is signed exactly when its delay has elapsed.

    Args:
        node (GuardianNode): Guardian network.
    """
    node.observe(_message(0, 5), 1, EMITTER)
    assert node.emit_ready_vaas(6) == []
    (vaa,) = node.emit_ready_vaas(7)
    body = vaa.body
    assert (body.timestamp, body.nonce, body.sequence) == (5, 100, 0)
    assert body.consistency_level == 1
    assert (body.emitter_chain, body.emitter_address) == (1, EMITTER)
    assert verify_quorum(vaa.hash, vaa.signatures, node.set)
    assert node.emit_ready_vaas(8) == []


def test_finalized_waits_longer(node: GuardianNode) -> None:
    node.observe(_message(0, 1, Finality.FINALIZED), 1, EMITTER)
    assert node.emit_ready_vaas(32) == []
    (vaa,) = node.emit_ready_vaas(33)
    assert vaa.body.consistency_level == 32


def test_emission_keeps_observation_order(node: GuardianNode) -> None:
    node.observe(_message(0, 1), 1, EMITTER)
    node.observe(_message(1, 1), 1, EMITTER)
    node.observe(_message(2, 2), 1, EMITTER)
    assert [v.body.sequence for v in node.emit_ready_vaas(10)] == [0, 1, 2]


def test_signer_count() -> None:
    keys = generate_guardian_keys(7)
    node = GuardianNode(keys, signers=5)
    node.observe(_message(0, 0), 1, EMITTER)
    (vaa,) = node.emit_ready_vaas(2)
    assert [i for i, _ in vaa.signatures] == [0, 1, 2, 3, 4]
    assert verify_quorum(vaa.hash, vaa.signatures, node.set)
    with pytest.raises(ValueError):
        GuardianNode(keys, signers=4)


def test_policy_validation() -> None:
    with pytest.raises(ValueError):
        FinalityPolicy(confirmed_delay=5, finalized_delay=3)
    assert FinalityPolicy(1, 8).delay(Finality.FINALIZED) == 8


def test_reorg(node: GuardianNode) -> None:
    """
    Test that a reorg drops, re-stamps and orphans according to the reverted window.

    Args:
        node (GuardianNode): Guardian network.
    """
    node.observe(_message(0, 7), 1, EMITTER)
    node.observe(_message(1, 8), 1, EMITTER)
    node.observe(_message(2, 9), 1, EMITTER)
    node.observe(_message(3, 8, Finality.FINALIZED), 1, EMITTER)
    assert [v.body.sequence for v in node.emit_ready_vaas(9)] == [0]
    assert [v.body.sequence for v in node.emit_ready_vaas(10)] == [1]

    outcome = node.reorg(10, 3)
    assert outcome.reverted_from == 8
    assert outcome.dropped == ((1, EMITTER, 2),)
    assert outcome.restamped == ((1, EMITTER, 3),)
    assert outcome.orphaned == ((1, EMITTER, 1),)

    assert node.emit_ready_vaas(41) == []
    (vaa,) = node.emit_ready_vaas(42)
    assert (vaa.body.sequence, vaa.body.timestamp) == (3, 10)


def test_reorg_never_reverts_finalized_slots(node: GuardianNode) -> None:
    node.observe(_message(0, 8), 1, EMITTER)
    node.observe(_message(1, 9), 1, EMITTER)
    outcome = node.reorg(40, 100)
    assert outcome.reverted_from == 9
    assert outcome.dropped == ((1, EMITTER, 1),)
    assert [o.message.sequence for o in node.observed] == [0]


def test_reorg_of_one_chain_leaves_the_other(node: GuardianNode) -> None:
    node.observe(_message(0, 9), 1, EMITTER)
    node.observe(_message(0, 9), 2, EMITTER)
    outcome = node.reorg(10, 2, emitter_chain=1)
    assert outcome.dropped == ((1, EMITTER, 0),)
    assert [o.emitter_chain for o in node.observed] == [2]
