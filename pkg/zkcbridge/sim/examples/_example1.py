"""
Simulation Example 1

This example runs a single message through the whole bridge: the Solana program posts it, the guardians sign
it once it is confirmed, one honest relayer submits it to the Portal and, after the next rollup block,
consumes it privately on Aztec.

To run this example, use the following command in the terminal:
    python -m zkcbridge.sim.examples._example1

Dependencies:
    - numpy
    - coincurve
    - eth-utils

Every property checker should report PASS, and the consumer contract should have counted exactly one
consumption.
"""

import zkcbridge


# The secret is fixed here so the run is easy to follow; leave it out to derive one from the seed.
scenario = zkcbridge.sim.ScenarioSpec(
    name="example_happy_path",
    messages=(zkcbridge.sim.MessageSpec(tick=1, m=b"hello aztec".hex(), secret=1234),),
    relayers=(zkcbridge.sim.RelayerSpec("relayer-0"),),
)


def main(seed: int = 0) -> zkcbridge.sim.TraceReport:
    report = zkcbridge.sim.run_scenario(scenario, seed)

    for event in report.of_kind("portal_call", "aztec_consume", "rollup_tick"):
        print(event["tick"], event["event"], event.get("outcome", ""))

    for name, verdict in report.verdicts.items():
        print(f"{name}: {verdict['status']}")
    return report


if __name__ == "__main__":
    main()
