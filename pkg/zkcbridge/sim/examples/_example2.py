"""
Simulation Example 2

This example shows why the legacy `consume_with_secret` interface is switched off by default. The adversary
sees the signed VAA first and submits it on the legacy path with a secret hash of its own choosing. The Portal
accepts it, the honest relayer's submission is rejected as a replay, and the leaf on Aztec can never be
consumed with the user's secret.

To run this example, use the following command in the terminal:
    python -m zkcbridge.sim.examples._example2

The checker flags no_front_running as VIOLATED, with a witness pairing the caller-chosen secret hash and the
one derived from the signed payload. Both violations are marked legacy_only.
"""

import json

import zkcbridge


def main(seed: int = 0) -> zkcbridge.sim.TraceReport:
    scenario = zkcbridge.sim.catalog_scenario("legacy_front_run")
    report = zkcbridge.sim.run_scenario(scenario, seed)

    verdict = report.verdicts["no_front_running"]
    print(f"no_front_running: {verdict['status']} (legacy only: {verdict['legacy_only']})")
    for witness in verdict["witnesses"]:
        print(json.dumps(witness, indent=2))
    return report


if __name__ == "__main__":
    main()
