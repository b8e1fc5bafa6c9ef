from zkcbridge.sim.examples import _example1, _example2


def test_example1(capsys) -> None:
    """
    Test that the happy path example passes every property and prints the flow.

    Args:
        capsys: Pytest fixture capturing stdout.
    """
    report = _example1.main()
    assert {v["status"] for v in report.verdicts.values()} == {"PASS"}
    out = capsys.readouterr().out
    assert "portal_call ok" in out
    assert "liveness: PASS" in out


def test_example2(capsys) -> None:
    report = _example2.main()
    assert report.verdicts["no_front_running"]["status"] == "VIOLATED"
    assert "legacy only: True" in capsys.readouterr().out
