"""
Scenario catalog and campaigns.

Named scenarios exercise each property positively, and the legacy front-running scenario produces the one
constructible negative witness. `adversarial_scenario(seed)` draws a member of the randomized adversarial
family; `run_campaign` runs that family over many seeds.
"""

__all__ = [
    "CATALOG",
    "ADVERSARIAL_KINDS",
    "CampaignReport",
    "catalog_scenario",
    "adversarial_scenario",
    "run_campaign",
]

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Tuple

import numpy as np

from ._properties import PropertyVerdicts
from ._scenario import (
    TARGETED_KINDS,
    AdversaryActionSpec,
    InvalidScenario,
    MessageSpec,
    RandomAdversarySpec,
    RelayerSpec,
    ScenarioSpec,
    SimConfig,
)
from ._world import run_scenario

logger = logging.getLogger(__name__)

HELLO = b"hello aztec".hex()
ATTACKER_HASH = "ba" * 32
FORGED_EMITTER = "66" * 32
FOREIGN_EMITTER = "77" * 32

ADVERSARIAL_KINDS = (
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


def _happy_path() -> ScenarioSpec:
    return ScenarioSpec(
        name="happy_path",
        messages=(MessageSpec(tick=1, m=HELLO, secret=7),),
    )


def _single_attack(name: str, action: AdversaryActionSpec, **kwargs) -> ScenarioSpec:
    return ScenarioSpec(
        name=name,
        messages=(MessageSpec(tick=1, m=HELLO, secret=7),),
        adversary=(action,),
        **kwargs,
    )


CATALOG: Dict[str, Callable[[], ScenarioSpec]] = {
    "happy_path": _happy_path,
    "replay": lambda: _single_attack(
        "replay", AdversaryActionSpec(tick=1, kind="DuplicateSubmit", target=0, times=5)
    ),
    "forge": lambda: _single_attack(
        "forge", AdversaryActionSpec(tick=1, kind="ForgeEmitter", target=0, emitter=FORGED_EMITTER)
    ),
    "foreign_emitter": lambda: _single_attack(
        "foreign_emitter",
        AdversaryActionSpec(tick=1, kind="ForeignEmitter", emitter=FOREIGN_EMITTER, m=HELLO),
    ),
    "tamper": lambda: _single_attack(
        "tamper", AdversaryActionSpec(tick=1, kind="TamperPayload", target=0, index=40, value=0x00)
    ),
    "unsigned": lambda: _single_attack(
        "unsigned", AdversaryActionSpec(tick=1, kind="UnsignedVaa", target=0)
    ),
    "legacy_front_run": lambda: _single_attack(
        "legacy_front_run",
        AdversaryActionSpec(tick=1, kind="FrontRunWithSecret", target=0, secret_hash=ATTACKER_HASH),
        config=SimConfig(legacy_enabled=True, submit_path="legacy"),
    ),
    "reorg": lambda: ScenarioSpec(
        name="reorg",
        ticks=96,
        messages=(
            MessageSpec(tick=1, m=HELLO, finality="confirmed", secret=7),
            MessageSpec(tick=1, m=HELLO, finality="finalized", secret=8),
        ),
        adversary=(AdversaryActionSpec(tick=2, kind="ReorgSlots", depth=2),),
    ),
    "race": lambda: ScenarioSpec(
        name="race",
        relayers=(RelayerSpec("r0"), RelayerSpec("r1"), RelayerSpec("r2")),
        messages=(MessageSpec(tick=1, m=HELLO, secret=7),),
    ),
    "receipts": lambda: ScenarioSpec(
        name="receipts",
        ticks=96,
        config=SimConfig(receipts=True),
        messages=(MessageSpec(tick=1, m=HELLO, secret=7),),
    ),
    "drop_delivery": lambda: _single_attack(
        "drop_delivery", AdversaryActionSpec(tick=1, kind="DropDelivery", target=0)
    ),
}


def catalog_scenario(name: str) -> ScenarioSpec:
    """
    Look up a named scenario.

    Args:
        name (str): A CATALOG key, or "adversarial" / "adversarial:<seed>" for a member of the random family.

    Returns:
        ScenarioSpec: The scenario.

    Raises:
        InvalidScenario: If the name is unknown.
    """
    if name.startswith("adversarial"):
        _, _, seed = name.partition(":")
        try:
            return adversarial_scenario(int(seed or 0))
        except ValueError as exc:
            raise InvalidScenario(f"Bad adversarial seed in {name!r}") from exc
    try:
        return CATALOG[name]()
    except KeyError:
        raise InvalidScenario(
            f"Unknown scenario {name!r}; known: {', '.join(sorted(CATALOG))}, adversarial[:seed]"
        ) from None


def adversarial_scenario(seed: int) -> ScenarioSpec:
    """
    Draw a scenario from the adversarial family: a few messages, a few relayers (the first honest) and a
    handful of scheduled and random adversary actions, on a small guardian set with short finality delays.

    Args:
        seed (int): Seed of the draw.

    Returns:
        ScenarioSpec: The scenario.
    """
    rng = np.random.default_rng(seed)
    n_messages = int(rng.integers(1, 4))
    messages = tuple(
        MessageSpec(
            tick=int(rng.integers(1, 9)),
            m=rng.bytes(int(rng.integers(0, 24))).hex(),
            finality=str(rng.choice(["confirmed", "finalized"])),
            batch_id=int(rng.integers(0, 2**32)),
        )
        for _ in range(n_messages)
    )
    relayers = (RelayerSpec("r0"),) + tuple(
        RelayerSpec(f"r{i}", honest=bool(rng.random() < 0.5)) for i in range(1, int(rng.integers(1, 4)))
    )

    actions = []
    for _ in range(int(rng.integers(1, 6))):
        kind = ADVERSARIAL_KINDS[int(rng.integers(len(ADVERSARIAL_KINDS)))]
        actions.append(
            AdversaryActionSpec(
                tick=int(rng.integers(1, 16)),
                kind=kind,
                target=int(rng.integers(n_messages)) if kind in TARGETED_KINDS else None,
                times=int(rng.integers(1, 6)),
                secret_hash=rng.bytes(32).hex(),
                emitter=rng.bytes(32).hex(),
                index=int(rng.integers(0, 96)),
                value=int(rng.integers(0, 256)),
                depth=int(rng.integers(1, 6)),
                m=rng.bytes(4).hex(),
            )
        )

    return ScenarioSpec(
        name=f"adversarial:{seed}",
        ticks=96,
        config=SimConfig(guardians=7, finalized_delay=8, key_seed=int(rng.integers(0, 4))),
        relayers=relayers,
        messages=messages,
        adversary=tuple(actions),
        random_adversary=RandomAdversarySpec(
            probability=0.1,
            kinds=("DuplicateSubmit", "ReorderQueue", "UnsignedVaa", "TamperPayload", "ReorgSlots"),
        ),
    ).validate()


@dataclass
class CampaignReport:
    """
    Aggregate of a campaign.

    Attributes:
        runs (int): Number of seeds run.
        violations (Dict[str, List[int]]): For each property, the seeds whose trace violated it outside the
            legacy path.
    """

    runs: int = 0
    violations: Dict[str, List[int]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def to_dict(self) -> Dict[str, Any]:
        return {"runs": self.runs, "violations": self.violations}


def _campaign_run(seed: int) -> Tuple[int, List[str]]:
    report = run_scenario(adversarial_scenario(seed), seed)
    return seed, PropertyVerdicts.from_dict(report.verdicts).violated(include_legacy=False)


def run_campaign(seeds: Iterable[int], workers: int = 1) -> CampaignReport:
    """
    Run the adversarial family over many seeds.

    Args:
        seeds (Iterable[int]): Seeds to run.
        workers (int, optional): Worker processes; runs share nothing. Defaults to 1.

    Returns:
        CampaignReport: Violations per property.
    """
    seeds = list(seeds)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_campaign_run, seeds, chunksize=16))
    else:
        results = [_campaign_run(seed) for seed in seeds]

    report = CampaignReport(runs=len(seeds))
    for seed, violated in results:
        for name in violated:
            report.violations.setdefault(name, []).append(seed)
    if not report.ok:
        logger.warning(f"Campaign over {len(seeds)} seeds found violations: {report.violations}")
    return report
