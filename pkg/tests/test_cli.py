"""End-to-end CLI runs: schema-valid outputs, determinism, error contract."""

import json

import numpy as np
import pytest

import evofactor as ef
from evofactor.cli import main, _load_schema


@pytest.fixture(scope="module")
def panel_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "x.csv"
    truth = ef.gen_design(
        ef.SimulationSpec(design="null-model2", n=240, p=6, seed=1), 0
    )
    ef.save_csv(truth.X, path)
    return str(path)


def run_cli(*args):
    return main(list(args))


def validate(name, payload):
    import jsonschema

    jsonschema.validate(payload, _load_schema(name))


def test_estimate_command(panel_csv, tmp_path):
    out = tmp_path / "est.json"
    plot = tmp_path / "est.csv"
    rc = run_cli(
        "estimate", "--input", panel_csv, "--jn", "2", "--k0", "2",
        "--output", str(out), "--emit-plot-data", str(plot),
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    validate("estimate", payload)
    assert payload["jn"] == 2 and len(payload["records"]) == 240
    header = plot.read_text().splitlines()[0]
    assert header == "t,d_hat,explained,lambda1,lambda2"


def test_estimate_with_cv_and_transforms(panel_csv, tmp_path):
    out = tmp_path / "est2.json"
    rc = run_cli(
        "estimate", "--input", panel_csv, "--jn", "cv", "--j-grid", "1,2,3",
        "--k0", "2", "--center", "--difference", "--output", str(out),
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    assert payload["cv"]["candidates"] == [1, 2, 3]
    assert payload["n"] == 239  # differencing consumed one row


def test_test_command_deterministic(panel_csv, tmp_path):
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        rc = run_cli(
            "test", "--input", panel_csv, "--nn", "mv", "--wn", "mv",
            "--block-grid", "2,3,4,5", "--B", "300", "--alpha", "0.05",
            "--seed", "7", "--output", str(out),
        )
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    payload = json.loads(outs[0])
    validate("test", payload)
    assert payload["B"] == 300


def test_test_command_draw_dump(panel_csv, tmp_path):
    out = tmp_path / "t.json"
    draws = tmp_path / "k.csv"
    rc = run_cli(
        "test", "--input", panel_csv, "--nn", "3", "--wn", "5", "--B", "120",
        "--seed", "3", "--output", str(out), "--dump-draws", str(draws),
    )
    assert rc == 0
    lines = draws.read_text().splitlines()
    assert lines[0] == "k_order_stat" and len(lines) == 121
    vals = np.array([float(x) for x in lines[1:]])
    assert np.all(np.diff(vals) >= 0)


def test_tune_command(panel_csv, tmp_path):
    out = tmp_path / "tune.json"
    rc = run_cli(
        "tune", "--input", panel_csv, "--what", "all", "--k0", "2",
        "--j-grid", "1,2,3", "--block-grid", "2,3,4,5", "--output", str(out),
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    validate("tune", payload)
    assert payload["jn"]["selected"] in (1, 2, 3)
    assert payload["nn"]["selected"] in (3, 4)
    assert payload["wn"]["selected"] >= 2


def test_simulate_command(tmp_path):
    out = tmp_path / "sim.json"
    table = tmp_path / "sim.csv"
    rc = run_cli(
        "simulate", "--design", "power", "--n", "300", "--p", "8", "--reps", "2",
        "--deviation", "0.5", "--B", "150", "--seed", "5",
        "--block-grid", "2,3,4", "--output", str(out), "--table", str(table),
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    validate("simulate", payload)
    assert payload["completed"] == 2
    assert table.read_text().count("\n") == 2


def test_predict_command(panel_csv, tmp_path):
    out = tmp_path / "pred.json"
    rc = run_cli(
        "predict", "--input", panel_csv, "--jn", "2", "--k0", "2",
        "--eval-start", "160", "--output", str(out),
    )
    assert rc == 0
    payload = json.loads(out.read_text())
    validate("predict", payload)
    assert payload["eval_points"] == 80


def test_error_contract_missing_file(tmp_path, capsys):
    rc = run_cli(
        "estimate", "--input", str(tmp_path / "nope.csv"), "--jn", "2",
        "--output", str(tmp_path / "o.json"),
    )
    assert rc == 1
    err = json.loads(capsys.readouterr().out)
    validate("error", err)
    assert err["error"]["operation"] == "estimate"


def test_error_contract_bad_flag_combo(tmp_path, capsys):
    rc = run_cli(
        "simulate", "--design", "power", "--n", "100", "--p", "5",
        "--reps", "1", "--output", str(tmp_path / "o.json"),
    )
    assert rc == 1  # power without --deviation
    err = json.loads(capsys.readouterr().out)
    assert "deviation" in err["error"]["message"]
