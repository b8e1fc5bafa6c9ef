from collections import Counter
from typing import Dict, List

import pytest

import zkcbridge
from zkcbridge.crypto import secret_hash
from zkcbridge.sim import (
    PROPERTY_NAMES,
    AdversaryActionSpec,
    MessageSpec,
    PropertyVerdicts,
    ScenarioSpec,
    SimConfig,
    TraceReport,
    World,
    catalog_scenario,
    run_scenario,
)

HELLO = b"hello aztec".hex()


def _run(name: str, seed: int = 0) -> World:
    world = World(catalog_scenario(name), seed)
    world.report = world.run_simulation()
    return world


def _statuses(report: TraceReport) -> Dict[str, str]:
    return {name: verdict["status"] for name, verdict in report.verdicts.items()}


def _outcomes(report: TraceReport, event: str, caller: str = None) -> Counter:
    return Counter(
        e["outcome"] for e in report.of_kind(event) if caller is None or e["caller"] == caller
    )


@pytest.fixture(scope="module")
def happy_path() -> TraceReport:
    """
    Fixture with the checked trace of the happy path.

    Returns:
        TraceReport: One message, one honest relayer, no adversary.
    """
    return run_scenario(catalog_scenario("happy_path"))


def test_happy_path_consumes_once(happy_path: TraceReport) -> None:
    """
    Test the happy path end to end: one Portal acceptance, one Aztec consumption.

    Args:
        happy_path (TraceReport): Checked happy path trace.
    """
    assert _outcomes(happy_path, "portal_call") == Counter({"ok": 1})
    consumes = list(happy_path.of_kind("aztec_consume"))
    assert [c["outcome"] for c in consumes] == ["NotYetIncluded", "ok"]
    assert consumes[-1]["count"] == 1
    assert consumes[-1]["presented_secret_hash"] == "0x" + secret_hash(7).hex()
    assert happy_path.header["quiescent"]
    assert happy_path.header["ticks_run"] == 5


def test_happy_path_passes_every_property(happy_path: TraceReport) -> None:
    assert set(happy_path.verdicts) == set(PROPERTY_NAMES)
    assert set(_statuses(happy_path).values()) == {"PASS"}


def test_happy_path_event_order(happy_path: TraceReport) -> None:
    names = [e["event"] for e in happy_path.events]
    assert names.index("message_posted") < names.index("vaa_emitted") < names.index("vaa_delivered")
    assert names.index("vaa_delivered") < names.index("portal_call") < names.index("portal_event")
    emitted = next(happy_path.of_kind("vaa_emitted"))
    assert (emitted["post_slot"], emitted["slot"], emitted["finality"]) == (1, 3, 1)


def test_replay_accepts_exactly_once() -> None:
    """
    Test that of six submissions of one VAA exactly one is accepted.
    """
    world = _run("replay")
    report = world.report
    assert _outcomes(report, "portal_call") == Counter({"ok": 1, "AlreadyConsumed": 5})
    assert _outcomes(report, "portal_call", "adversary") == Counter({"ok": 1, "AlreadyConsumed": 4})
    assert len(world.portal.consumed) == 1
    assert len(world.aztec.leaves) == 1
    assert world.aztec.consumer.count == 1


@pytest.mark.parametrize(
    "name, rejection",
    [
        ("forge", "InvalidVaa"),
        ("tamper", "InvalidVaa"),
        ("unsigned", "InvalidVaa"),
        ("foreign_emitter", "WrongOrigin"),
    ],
)
def test_adversary_submissions_are_rejected(name: str, rejection: str) -> None:
    """
    Test that VAAs the guardians never signed for the configured origin are refused.

    Args:
        name (str): Catalog scenario.
        rejection (str): Expected Portal error.
    """
    world = _run(name)
    report = world.report
    assert _outcomes(report, "portal_call", "adversary") == Counter({rejection: 1})
    assert _outcomes(report, "portal_call", "r0") == Counter({"ok": 1})
    assert world.aztec.consumer.count == 1
    assert PropertyVerdicts.from_dict(report.verdicts).ok


def test_forged_emitter_never_succeeds() -> None:
    report = _run("forge").report
    forged = "0x" + "66" * 32
    calls = [c for c in report.of_kind("portal_call") if c.get("emitter") == forged]
    assert len(calls) == 1
    assert all(c["outcome"] != "ok" for c in calls)


def test_race_between_relayers() -> None:
    world = _run("race")
    report = world.report
    assert _outcomes(report, "portal_call") == Counter({"ok": 1, "AlreadyConsumed": 2})
    aztec = _outcomes(report, "aztec_consume")
    assert (aztec["ok"], aztec["AlreadyConsumed"]) == (1, 2)
    for call in report.of_kind("aztec_consume"):
        if call["outcome"] == "AlreadyConsumed":
            assert call["count"] == 1
            assert call["state_before"] == call["state_after"]
    assert world.aztec.consumer.count == 1


def test_reorg_drops_confirmed_and_keeps_finalized() -> None:
    """
    Test that a reorg before signing drops the Confirmed message and re-stamps the Finalized one.
    """
    world = _run("reorg")
    report = world.report
    (reorg,) = report.of_kind("reorg")
    assert (reorg["reverted_from"], reorg["dropped"], reorg["restamped"]) == (1, [0], [1])
    assert reorg["orphaned"] == []
    (restamped,) = report.of_kind("message_restamped")
    assert (restamped["seq"], restamped["slot"]) == (1, 2)

    emitted = list(report.of_kind("vaa_emitted"))
    assert [e["seq"] for e in emitted] == [1]
    assert emitted[0]["post_slot"] == 2
    assert emitted[0]["slot"] == 34
    assert _statuses(run_scenario(catalog_scenario("reorg")))["finality_alignment"] == "PASS"
    assert world.aztec.consumer.count == 1


def test_legacy_front_run_is_witnessed() -> None:
    report = run_scenario(catalog_scenario("legacy_front_run"))
    verdict = report.verdicts["no_front_running"]
    assert verdict["status"] == "VIOLATED"
    assert verdict["legacy_only"]
    (witness,) = verdict["witnesses"]
    assert witness["path"] == "legacy"
    assert witness["caller"] == "adversary"
    assert witness["enqueued"]["secret_hash"] == "0x" + "ba" * 32
    assert witness["payload_derived"]["secret_hash"] == "0x" + secret_hash(7).hex()

    verdicts = PropertyVerdicts.from_dict(report.verdicts)
    assert verdicts.ok
    assert "no_front_running" in verdicts.violated()
    assert verdicts["parameter_binding"].status.value == "PASS"
    assert _outcomes(report, "aztec_consume")["BadSecret"] == 1


def test_receipts_are_recorded() -> None:
    world = _run("receipts")
    report = world.report
    (posted,) = report.of_kind("receipt_posted")
    assert posted["orig_sequence"] == 0
    assert _outcomes(report, "receipt_call") == Counter({"ok": 1})
    assert list(world.origin.receipts) == [0]
    assert world.origin.receipts[0].receipt.leaf_index == 0


def test_fair_drop_only_delays() -> None:
    world = _run("drop_delivery")
    report = world.report
    (withheld,) = report.of_kind("delivery_withheld")
    assert (withheld["tick"], withheld["permanent"]) == (3, False)
    (delivered,) = report.of_kind("vaa_delivered")
    assert delivered["tick"] == 4
    assert world.aztec.consumer.count == 1
    assert report.verdicts is None


def test_unfair_drop_loses_the_message() -> None:
    scenario = ScenarioSpec(
        name="unfair_drop",
        config=SimConfig(fairness=False),
        messages=(MessageSpec(tick=1, m=HELLO, secret=7),),
        adversary=(AdversaryActionSpec(tick=1, kind="DropDelivery", target=0),),
    )
    report = run_scenario(scenario)
    assert list(report.of_kind("vaa_delivered")) == []
    assert list(report.of_kind("portal_call")) == []
    assert report.verdicts["liveness"]["status"] == "NOT_APPLICABLE"


def test_unconfigured_consumer_breaks_liveness() -> None:
    scenario = ScenarioSpec(
        name="no_portal",
        config=SimConfig(set_portal=False),
        messages=(MessageSpec(tick=1, m=HELLO, secret=7),),
    )
    report = run_scenario(scenario)
    assert _outcomes(report, "aztec_consume")["SenderMismatch"] == 1
    liveness = report.verdicts["liveness"]
    assert liveness["status"] == "VIOLATED"
    assert liveness["witnesses"][0]["missing"] == "aztec"
    assert not liveness["legacy_only"]


def test_empty_scenario() -> None:
    report = run_scenario(ScenarioSpec(name="empty"))
    statuses = _statuses(report)
    assert statuses.pop("liveness") == "NOT_APPLICABLE"
    assert set(statuses.values()) == {"PASS"}
    assert report.header["ticks_run"] == 1


def test_runs_are_deterministic() -> None:
    first = run_scenario(catalog_scenario("race"), seed=42)
    second = run_scenario(catalog_scenario("race"), seed=42)
    assert first.to_jsonl() == second.to_jsonl()


def test_seed_drives_derived_secrets() -> None:
    scenario = ScenarioSpec(name="derived", messages=(MessageSpec(tick=1, m=HELLO),))
    payloads: List[str] = [
        next(run_scenario(scenario, seed).of_kind("message_posted"))["payload"] for seed in (1, 1, 2)
    ]
    assert payloads[0] == payloads[1] != payloads[2]


def test_header_describes_the_world(happy_path: TraceReport) -> None:
    header = happy_path.header
    assert header["scenario"] == "happy_path"
    assert header["origin"]["chain"] == 1
    assert header["portal"]["chain"] == 2
    assert len(header["guardian_set"]["keys"]) == 19
    assert header["relayers"] == [{"id": "r0", "honest": True}]


def test_package_level_access() -> None:
    assert zkcbridge.sim.run_scenario is run_scenario
