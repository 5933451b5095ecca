import csv
import io
import json

import numpy as np
import pytest

from beaconpursuit import effective_shape
from beaconpursuit.cli import main
from beaconpursuit.runner import SWEEP_COLUMNS, SweepSettings, parameter_grid, run, sweep
from beaconpursuit.config import preset_config, parse_config
from beaconpursuit.state import WorldState

HEAD_ON = "0 0 0 1 0 0 0 1 0 0 0 1 1 0 0 -1 0 0 0 -1 0 0 0 1 100 0 0"


def stderr_error(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


# ----------------------------------------------------------- run


def test_run_writes_files_and_summary(tmp_path, capsys):
    code = main(["run", "--preset", "prop2b", "--t-max", "0.5", "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == "beaconpursuit.run_summary/1"
    assert doc["termination"]["reason"] == "completed"
    assert doc["invariants"]["passed"]
    # the analysis window is clamped to the run length
    assert doc["circling"]["converged"] and doc["circling"]["window"] == 0.5
    assert {p.name for p in tmp_path.iterdir()} == {"trajectory.csv", "shape.csv", "summary.json"}
    assert json.loads((tmp_path / "summary.json").read_text())["terminal_shape"] == doc["terminal_shape"]
    matches = {m["kind"]: m for m in doc["equilibria"]}
    assert set(matches) == {"prop2a", "prop2b"}  # both exist for these parameters
    assert matches["prop2b"]["approaches"] and matches["prop2b"]["max_abs_distance"] < 1e-6
    assert not matches["prop2a"]["approaches"]


def test_run_csv_format(capsys):
    assert main(["run", "--preset", "prop2b", "--t-max", "0.1", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows[0]["termination"] == "completed"
    assert float(rows[0]["rho"]) == pytest.approx(80 / 21, rel=1e-9)


def test_same_seed_gives_identical_bytes(tmp_path):
    outs = []
    for name in ("a", "b", "c"):
        seed = "3" if name != "c" else "4"
        assert main(["run", "--preset", "prop1", "--t-max", "0.2", "--seed", seed, "--out", str(tmp_path / name)]) == 0
        outs.append((tmp_path / name / "trajectory.csv").read_bytes())
    assert outs[0] == outs[1]
    assert outs[0] != outs[2]


def test_verify_round_trip(tmp_path, capsys):
    main(["run", "--preset", "prop1", "--t-max", "0.2", "--out", str(tmp_path)])
    capsys.readouterr()
    assert main(["verify", str(tmp_path / "trajectory.csv")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["passed"] and rep["rows"] == 201


def test_verify_detects_tampering(tmp_path, capsys):
    main(["run", "--preset", "prop1", "--t-max", "0.01", "--out", str(tmp_path)])
    path = tmp_path / "trajectory.csv"
    lines = path.read_text().splitlines()
    cells = lines[3].split(",")
    cells[5] = "0.5"
    lines[3] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert main(["verify", str(path), "--format", "csv"]) == 1
    assert stderr_error(capsys)["error"] == "INVARIANT_VIOLATION"


def test_verify_missing_file_is_io_error(tmp_path, capsys):
    assert main(["verify", str(tmp_path / "nope.csv")]) == 3
    assert stderr_error(capsys)["error"] == "IO_FAILURE"


def test_verify_wrong_header(tmp_path, capsys):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    assert main(["verify", str(path)]) == 1
    assert stderr_error(capsys)["error"] == "MALFORMED_CSV"


def test_singular_run_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(f"[params]\nmu = 1\nlambda = 0.5\na = -0.3\na0 = 0.1\n[initial]\nstate = {HEAD_ON}\n[run]\nt_max = 2\n")
    assert main(["run", "--config", str(cfg)]) == 1
    out = json.loads(capsys.readouterr().out)
    assert out["termination"]["reason"] == "singular"
    assert 0.4 < out["termination"]["t_end"] < 0.6


def test_config_errors_exit_2(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("lambda = 1.0\n")
    assert main(["run", "--config", str(cfg)]) == 2
    err = stderr_error(capsys)
    assert err["error"] == "VALIDATION_ERROR" and "lambda must lie strictly in (0,1)" in err["message"]
    cfg.write_text("preset = prop1\nspeed = 3\n")
    assert main(["run", "--config", str(cfg)]) == 2
    err = stderr_error(capsys)
    assert err["error"] == "PARSE_ERROR" and err["message"].startswith("line 2:")


def test_missing_config_is_io_error(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "absent.ini")]) == 3


def test_unwritable_output_is_io_error(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--preset", "prop2b", "--t-max", "0.01", "--out", str(blocker / "sub")]) == 3
    assert stderr_error(capsys)["error"] == "IO_FAILURE"


def test_usage_error_from_argparse():
    with pytest.raises(SystemExit) as info:
        main(["run", "--format", "xml"])
    assert info.value.code == 2


# ----------------------------------------------------------- equilibrium / embed


def test_equilibrium_subcommand(capsys):
    assert main(["equilibrium", "--mu", "1", "--lambda", "0.5", "--a=-0.4", "--a0", "0.2"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["existence"] == {"prop1": False, "prop2a": True, "prop2b": False}
    (spec,) = doc["equilibria"]
    assert spec["shape"]["rho"] == pytest.approx(10.0) and spec["shape"]["rho_1b"] == pytest.approx(5.0)


def test_equilibrium_preset_csv(capsys):
    assert main(["equilibrium", "--preset", "prop1", "--format", "csv"]) == 0
    (row,) = csv.DictReader(io.StringIO(capsys.readouterr().out))
    assert row["kind"] == "prop1" and float(row["rho"]) == 2.0 and float(row["rho1b"]) == 3.0


def test_equilibrium_needs_parameters(capsys):
    assert main(["equilibrium", "--mu", "1"]) == 2
    assert stderr_error(capsys)["error"] == "USAGE"


def test_embed_subcommand(capsys):
    assert main(["embed", "--shape", "10,5,5,0,0,0,0,-1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    s = WorldState(np.array(doc["positions"]), np.array(doc["frames"]), np.array(doc["beacon"]))
    np.testing.assert_allclose(effective_shape(s).as_array(), [10, 5, 5, 0, 0, 0, 0, -1], atol=1e-12)


def test_embed_unrealizable(capsys):
    assert main(["embed", "--shape", "3,1,1,0,0,0,0,-1"]) == 2
    assert stderr_error(capsys)["error"] == "UNREALIZABLE_SHAPE"


def test_embed_preset_to_file(tmp_path):
    assert main(["embed", "--preset", "prop2b", "--format", "csv", "--out", str(tmp_path)]) == 0
    rows = list(csv.reader((tmp_path / "embed.csv").open()))
    assert len(rows) == 2 and len(rows[0]) == 27


# ----------------------------------------------------------- sweep


def test_sweep_prop1_only_for_negative_offset(capsys):
    assert main(["sweep", "--mu", "2", "--lambda", "0.5", "--a=-0.5,0.5", "--a0", "0", "--jobs", "1"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["prop1"] for r in rows] == ["true", "false"]
    assert float(rows[0]["prop1_rho"]) == 2.0 and rows[1]["prop1_rho"] == ""


def test_sweep_quadrants():
    rows = sweep(parameter_grid(lam=(0.5,), a=(-0.2, 0.2), a0=(-0.5, 0.5)))
    hits = [(r["a"], r["a0"]) for r in rows if r["prop2b"]]
    assert hits == [(0.2, -0.5)]
    # on the boundary (1-lam) a + lam a0 = 0 nothing exists
    (edge,) = sweep(parameter_grid(lam=(0.5,), a=(0.5,), a0=(-0.5,)))
    assert not edge["prop2a"] and not edge["prop2b"]
    assert all(set(r) == set(SWEEP_COLUMNS) for r in rows)


def test_empty_grid():
    assert sweep([]) == []


def test_sweep_records_cell_errors():
    (row,) = sweep([{"mu": 1.0, "lambda": 1.5, "a": 0.0, "a0": 0.0}])
    assert row["error"].startswith("PARAMETER_VIOLATION")


def test_sweep_parallel_matches_serial():
    grid = parameter_grid()
    assert sweep(grid, jobs=2) == sweep(grid, jobs=1)


def test_sweep_simulated_verdict():
    (row,) = sweep(
        [{"mu": 2.0, "lambda": 0.5, "a": -0.5, "a0": 0.0}],
        SweepSettings(simulate=True, t_max=60.0, perturb=0.01),
    )
    assert row["error"] is None
    assert row["prop1_converged"] is True and row["prop1_distance"] < 1e-2


def test_sweep_json_to_file(tmp_path):
    assert main(["sweep", "--format", "json", "--out", str(tmp_path), "--jobs", "1"]) == 0
    rows = json.loads((tmp_path / "sweep.json").read_text())
    assert len(rows) == 1 * 3 * 2 * 3


# ----------------------------------------------------------- library run()


def test_run_respects_outputs(tmp_path):
    cfg = preset_config("prop2b", t_max=0.1, outputs=frozenset({"report"}))
    summary, record = run(cfg, tmp_path)
    assert [p.name for p in tmp_path.iterdir()] == ["summary.json"]
    assert summary.exit_code == 0 and record.completed


def test_summary_well_formed_for_singular_runs():
    cfg = parse_config(f"mu = 1\nlambda = 0.5\na = -0.3\na0 = 0.1\nstate = {HEAD_ON}\nt_max = 2\n")
    summary, _ = run(cfg)
    doc = json.loads(json.dumps(summary.as_dict()))
    assert doc["termination"]["reason"] == "singular" and summary.exit_code == 1


# ----------------------------------------------------------- preset scenarios


def test_prop1_preset_circles_at_predicted_separation():
    summary, _ = run(preset_config("prop1", sample_every=100))
    assert summary.termination == "completed" and summary.invariants["passed"]
    assert summary.terminal_shape.rho == pytest.approx(2.0, rel=1e-2)
    assert summary.circling.converged
    (match,) = summary.equilibria
    assert match["kind"] == "prop1" and match["approaches"]


def test_prop2b_preset_is_invariant():
    summary, rec = run(preset_config("prop2b", sample_every=100))
    assert summary.exit_code == 0
    assert np.max(np.abs(rec.shapes - rec.shapes[0])) < 1e-6
