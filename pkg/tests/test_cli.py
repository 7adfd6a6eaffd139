import json

import pytest

from ermakov.cli import EXIT_ASSERT, EXIT_OK, EXIT_USAGE, build_parser, main

IC = "1,1,0.1,-0.1"


@pytest.fixture
def toy_file(tmp_path):
    p = tmp_path / "toy.json"
    p.write_text('{"class": "toy"}')
    return str(p)


def test_audit_writes_report(toy_file, tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["audit", "--system", toy_file, "--ic", IC, "--tspan", "0,1", "--out", str(out)]) == EXIT_OK
    d = json.loads(out.read_text())
    assert len(d["claims"]) == 40
    assert "PASS" in capsys.readouterr().out


def test_simulate_pole_exit(toy_file, capsys):
    assert main(["simulate", "--system", toy_file, "--ic", "1,0,0,0", "--tspan", "0,1"]) == EXIT_USAGE
    assert "pole" in capsys.readouterr().err


def test_simulate_outputs(toy_file, tmp_path):
    out = tmp_path / "sim.json"
    rc = main(["simulate", "--system", toy_file, "--ic", IC, "--tspan", "0,1", "--out", str(out), "--csv", str(tmp_path / "csv")])
    assert rc == EXIT_OK
    assert json.loads(out.read_text())["final_state"]["t"] == 1.0
    assert (tmp_path / "csv" / "trajectory.csv").exists()


def test_claims_list(capsys):
    assert main(["claims", "--list"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split()[:2] == ["eq2.3", "assert"]
    assert len(lines) == 40


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["audit", "--bogus"],
        ["audit", "--ic", IC, "--tspan", "0,1"],
        ["claims"],
        ["frobnicate"],
    ],
)
def test_usage_errors(argv):
    assert main(argv) == EXIT_USAGE


def test_bad_numbers(toy_file):
    assert main(["simulate", "--system", toy_file, "--ic", "1,1,0.1", "--tspan", "0,1"]) == EXIT_USAGE
    assert main(["simulate", "--system", toy_file, "--ic", "1,1,0.1,2x", "--tspan", "0,1"]) == EXIT_USAGE


def test_unknown_claim_refused(toy_file, capsys):
    assert main(["audit", "--system", toy_file, "--ic", IC, "--tspan", "0,1", "--claims", "eq2.3,bogus"]) == EXIT_USAGE
    assert "bogus" in capsys.readouterr().err


def test_assert_failure_exit_code(tmp_path):
    p = tmp_path / "w.json"
    p.write_text('{"class": "toy", "w": "1"}')
    assert main(["audit", "--system", str(p), "--ic", IC, "--tspan", "0,1", "--claims", "eq2.3"]) == EXIT_ASSERT


def test_report_failure_does_not_set_exit_code(toy_file):
    assert main(["audit", "--system", toy_file, "--ic", IC, "--tspan", "0,1", "--claims", "reduced_paper"]) == EXIT_OK


def test_config_file_and_override(toy_file, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"system": toy_file, "ic": [1, 1, 0.1, -0.1], "tspan": "0,1", "claims": "polar_identity", "seed": 3}))
    out = tmp_path / "r.json"
    assert main(["audit", "--config", str(cfg), "--seed", "5", "--out", str(out)]) == EXIT_OK
    d = json.loads(out.read_text())
    assert d["config"]["seed"] == 5
    assert [c["claim"] for c in d["claims"]] == ["polar_identity"]


def test_pinney_flag_forms(toy_file, tmp_path):
    trip = tmp_path / "t.json"
    trip.write_text('{"A": 2, "B": 0, "C": 0.5}')
    for value in ("auto", "2,0,0.5", str(trip)):
        out = tmp_path / "p.json"
        rc = main(["pinney", "--system", toy_file, "--ic", IC, "--tspan", "0,1", "--pinney", value, "--out", str(out)])
        assert rc in (EXIT_OK, EXIT_ASSERT)
        assert json.loads(out.read_text())["claims"][0]["claim"] == "pinney_constraint"


@pytest.mark.parametrize("sub", ["simulate", "reduce", "pinney", "symmetries", "audit", "claims"])
def test_help_lists_flags(sub, capsys):
    assert main([sub, "--help"]) == EXIT_OK
    text = capsys.readouterr().out
    parser = build_parser()
    subparser = parser._subparsers._group_actions[0].choices[sub]
    for action in subparser._actions:
        for opt in action.option_strings:
            assert opt in text
    if sub == "audit":
        for flag in ("--system", "--ic", "--tspan", "--tol", "--theta0", "--pinney", "--claims", "--seed", "--out", "--csv"):
            assert flag in text
