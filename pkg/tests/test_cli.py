import csv
import io
import json

import numpy as np
import pytest

from qdiscord import cli
from qdiscord.discord import OptimizerConfig
from qdiscord.states import bell, ghz, save_state, werner

from conftest import two_qubit_state


@pytest.fixture
def state_file(tmp_path):
    def write(state, name="state.json"):
        path = tmp_path / name
        save_state(state, path)
        return str(path)

    return write


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_discord_bell(capsys, state_file):
    code, out, _ = run(capsys, "discord", state_file(bell()), "--starts", "4")
    assert code == 0
    assert "discord D(A:B) = 1.000000000" in out


def test_discord_grid_check_passes(capsys, state_file):
    code, out, _ = run(capsys, "discord", state_file(werner(0.7)), "--starts", "4", "--grid-check", "100x200")
    assert code == 0
    assert "ok" in out


def test_discord_grid_check_mismatch_exits_1(capsys, state_file):
    # a 1x1 grid only holds the Z and X axes
    code, out, _ = run(capsys, "discord", state_file(two_qubit_state(0)), "--starts", "4", "--grid-check", "1x1")
    assert code == 1
    assert "MISMATCH" in out


def test_discord_nonconvergence_exits_3(capsys, state_file, monkeypatch):
    monkeypatch.setattr(cli, "_cfg", lambda args: OptimizerConfig(starts=2, max_iter=3))
    code, _, err = run(capsys, "discord", state_file(two_qubit_state(1)))
    assert code == 3
    assert "converge" in err


def test_discord_input_errors(capsys, state_file, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"labels": ["A", "B"], "dims": [2, 2], "matrix": [[[1, 0]] * 4] * 4}))
    assert run(capsys, "discord", str(bad))[0] == 2
    assert run(capsys, "discord", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "discord", state_file(ghz(3)))[0] == 2
    assert run(capsys, "discord", state_file(bell()), "--measured", "Z")[0] == 2
    assert run(capsys, "discord", state_file(bell()), "--grid-check", "ten")[0] == 2
    assert run(capsys, "discord", state_file(bell()), "--starts", "0")[0] == 2


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as err:
        cli.main(["verify", "nonsense"])
    assert err.value.code == 2


@pytest.mark.parametrize("suite,trials", [("ssa", 50), ("theorem1", 20), ("losses", 2)])
def test_verify_suites_pass(capsys, suite, trials):
    code, out, _ = run(capsys, "verify", suite, "--trials", str(trials), "--starts", "4")
    assert code == 0
    assert f"{trials} passed, 0 failed" in out


def test_verify_violation_exits_1(capsys):
    code, out, _ = run(capsys, "verify", "theorem1", "--trials", "3", "--tol", "-1")
    assert code == 1
    assert "offending seeds: 0 1 2" in out


def test_verify_seeded_is_reproducible(capsys):
    a = run(capsys, "verify", "ssa", "--trials", "20", "--seed", "7")[1]
    b = run(capsys, "verify", "ssa", "--trials", "20", "--seed", "7")[1]
    assert a == b


@pytest.mark.parametrize("protocol", ["fqswd", "qsm", "sdc", "ed"])
def test_budget_protocols(capsys, state_file, protocol):
    code, out, _ = run(capsys, "budget", protocol, state_file(bell()))
    assert code == 0
    assert out.startswith("#")


def test_budget_mother_needs_pure_abr(capsys, state_file):
    assert run(capsys, "budget", "mother", state_file(ghz(3, ("A", "B", "R"))))[0] == 0
    assert run(capsys, "budget", "mother", state_file(ghz(3)))[0] == 2


def test_budget_csv_values(capsys, state_file, tmp_path):
    out_csv = tmp_path / "b.csv"
    code, _, _ = run(capsys, "budget", "fqswd", state_file(bell()), "--csv", str(out_csv), "--optimize", "--starts", "4")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    assert [(r["stage"], r["basis"]) for r in rows] == [
        ("before", "computational"),
        ("after", "computational"),
        ("before", "optimized"),
        ("after", "optimized"),
    ]
    assert float(rows[1]["ebit_rate"]) == pytest.approx(0.5)
    losses = [float(r["loss"]) for r in rows if r["loss"]]
    assert losses
    assert all(abs(x - 1) < 1e-6 for x in losses)


def test_budget_basis_file(capsys, state_file, tmp_path):
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    path = tmp_path / "basis.json"
    path.write_text(json.dumps({"matrix": [[[x, 0] for x in row] for row in h]}))
    code, out, _ = run(capsys, "budget", "qsm", state_file(bell()), "--basis", f"file:{path}")
    assert code == 0
    assert run(capsys, "budget", "qsm", state_file(bell()), "--basis", "file:/nope")[0] == 2
    assert run(capsys, "budget", "qsm", state_file(bell()), "--basis", "wobbly")[0] == 2


def test_sweep_werner_grid(capsys, tmp_path):
    out_csv = tmp_path / "w.csv"
    code, _, _ = run(capsys, "sweep", "werner", "--grid", "0:1:11", "--starts", "4", "--out", str(out_csv))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out_csv.read_text())))
    assert len(rows) == 11
    assert list(rows[0]) == cli.SWEEP_FIELDS
    assert all(float(r["residual_max"]) < 1e-6 for r in rows)
    assert all(float(r["ssa_min_slack"]) >= -1e-9 for r in rows)


def test_sweep_csv_is_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "sweep", "random", "--trials", "3", "--seed", "4", "--starts", "4", "--csv", str(a))
    run(capsys, "sweep", "random", "--trials", "3", "--seed", "4", "--starts", "4", "--csv", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_sweep_bad_grid(capsys):
    assert run(capsys, "sweep", "werner", "--grid", "1:2")[0] == 2
    assert run(capsys, "sweep", "werner", "--grid", "0:2:3")[0] == 2
    assert run(capsys, "sweep", "nosuchfamily")[0] == 2
