from pathlib import Path

import pytest

from zkcbridge.sim import (
    CATALOG,
    InvalidScenario,
    PropertyVerdicts,
    ScenarioSpec,
    adversarial_scenario,
    catalog_scenario,
    run_campaign,
    run_scenario,
)

SCENARIOS = Path(__file__).parents[2] / "scenarios"

SAFETY = (
    "replay_safety",
    "authenticity",
    "finality_alignment",
    "parameter_binding",
    "no_front_running",
    "single_consumption",
    "idempotence",
    "atomicity",
    "knowledge_gating",
)


@pytest.mark.parametrize("name", ["happy_path", "replay", "legacy_front_run", "reorg"])
def test_shipped_files_match_catalog(name: str) -> None:
    """
    Test that the scenario files shipped with the repo describe the catalog scenarios.

    Args:
        name (str): Scenario name, also the file stem.
    """
    assert ScenarioSpec.from_json(SCENARIOS / f"{name}.json") == catalog_scenario(name)


@pytest.mark.parametrize("name", sorted(CATALOG) + ["adversarial:3"])
def test_dict_round_trip(name: str) -> None:
    scenario = catalog_scenario(name)
    assert ScenarioSpec.from_dict(scenario.to_dict()) == scenario


def test_defaults_from_minimal_json() -> None:
    scenario = ScenarioSpec.from_json('{"name": "minimal"}')
    assert scenario.ticks == 64
    assert [r.id for r in scenario.relayers] == ["r0"]
    assert scenario.messages == ()


def test_messages_are_ordered_by_tick() -> None:
    scenario = ScenarioSpec.from_dict(
        {"name": "order", "messages": [{"tick": 5, "m": "02"}, {"tick": 2, "m": "01"}, {"tick": 5, "m": "03"}]}
    )
    assert [m.m for m in scenario.ordered_messages] == ["01", "02", "03"]


@pytest.mark.parametrize(
    "data",
    [
        [],
        {"ticks": 5},
        {"name": "x", "colour": "red"},
        {"name": "x", "ticks": 0},
        {"name": "x", "ticks": "many"},
        {"name": "x", "ticks": None},
        {"name": "x", "config": {"guardians": 0}},
        {"name": "x", "config": {"nonsense": 1}},
        {"name": "x", "config": {"submit_path": "sideways"}},
        {"name": "x", "messages": [{"tick": 0}]},
        {"name": "x", "messages": [{"tick": 65}]},
        {"name": "x", "messages": [{"m": "00"}]},
        {"name": "x", "messages": [{"tick": 1, "m": "zz"}]},
        {"name": "x", "messages": [{"tick": 1, "finality": "eventually"}]},
        {"name": "x", "relayers": [{"id": "a"}, {"id": "a"}]},
        {"name": "x", "adversary": [{"tick": 1, "kind": "Bribe"}]},
        {"name": "x", "adversary": [{"tick": 1, "kind": "DuplicateSubmit"}]},
        {"name": "x", "messages": [{"tick": 1}], "adversary": [{"tick": 1, "kind": "UnsignedVaa", "target": 1}]},
        {
            "name": "x",
            "messages": [{"tick": 1}],
            "adversary": [{"tick": 1, "kind": "FrontRunWithSecret", "target": 0, "secret_hash": "ab"}],
        },
        {"name": "x", "random_adversary": {"probability": 1.5}},
        {"name": "x", "random_adversary": {"probability": 0.5, "kinds": ["ForeignEmitter"]}},
    ],
)
def test_invalid_scenarios(data) -> None:
    """
    Test that inconsistent or malformed scenarios are refused with InvalidScenario.

    Args:
        data: Scenario description.
    """
    with pytest.raises(InvalidScenario):
        ScenarioSpec.from_dict(data)


def test_invalid_json() -> None:
    with pytest.raises(InvalidScenario):
        ScenarioSpec.from_json("{not json")


def test_catalog_lookup() -> None:
    assert catalog_scenario("adversarial:3") == adversarial_scenario(3)
    assert catalog_scenario("adversarial") == adversarial_scenario(0)
    with pytest.raises(InvalidScenario):
        catalog_scenario("nope")
    with pytest.raises(InvalidScenario):
        catalog_scenario("adversarial:x")


def test_adversarial_family_is_deterministic() -> None:
    assert adversarial_scenario(11) == adversarial_scenario(11)
    assert adversarial_scenario(11) != adversarial_scenario(12)
    scenario = adversarial_scenario(11)
    assert scenario.relayers[0].honest
    assert 1 <= len(scenario.messages) <= 3


def test_noisy_network_keeps_safety() -> None:
    """
    Test that the shipped noisy network scenario, with a dishonest relayer and a random adversary, keeps every
    safety property.
    """
    report = run_scenario(ScenarioSpec.from_json(SCENARIOS / "noisy_network.json"), seed=3)
    verdicts = PropertyVerdicts.from_dict(report.verdicts)
    for name in SAFETY:
        assert verdicts[name].status.value == "PASS", name
    accepted = [c for c in report.of_kind("portal_call") if c["outcome"] == "ok"]
    assert all(c["emitter"] == report.header["origin"]["emitter"] for c in accepted)


def test_campaign_has_no_safety_violations() -> None:
    """
    Test the randomized campaign: a thousand seeded adversarial schedules and not one safety violation.
    """
    report = run_campaign(range(1000))
    assert report.runs == 1000
    assert not set(report.violations) & set(SAFETY), report.violations
