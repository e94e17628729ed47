"""Command line: run and sweep subcommands, files written, exit codes."""

import csv
import json

import numpy as np
import pytest

from pcca import load_scenario_file, save_scenario
from pcca.cli import main, read_trace_csv
from helpers import head_on, pursuit

EX1 = "scenarios/example1.ini"
EX1P = "scenarios/example1_perturbed.ini"
EX2 = "scenarios/example2.ini"


def test_run_example_writes_outputs(tmp_path, capsys):
    code = main(["run", EX1, "--out", str(tmp_path), "--assert-no-collision"])
    out = capsys.readouterr().out
    assert code == 0
    assert (tmp_path / "trace.csv").exists()
    assert (tmp_path / "metrics.json").exists()
    assert "assert no_collision: PASS" in out

    doc = json.loads((tmp_path / "metrics.json").read_text())
    assert set(doc) == {"digest", "metrics", "assertions"}
    assert doc["metrics"]["pairs"]["0-1"]["min_h_r0"] >= 0.0


def test_trace_csv_columns_recompute(tmp_path):
    main(["run", EX1P, "--out", str(tmp_path)])
    cols = read_trace_csv(tmp_path / "trace.csv")
    s = load_scenario_file(EX1P)
    dx = cols["x0"] - cols["x1"]
    dy = cols["y0"] - cols["y1"]
    h = dx * dx + dy * dy - s.barrier.r**2
    assert float(np.abs(h - cols["h_0_1"]).max()) <= 1e-9
    # contact metric differs from h by the constant threshold gap
    gap = s.barrier.r**2 - (2.0 * s.agents[0].config.radius) ** 2
    assert float(np.abs((cols["h_0_1"] + gap) - cols["hr0_0_1"]).max()) <= 1e-9


def test_trace_csv_reruns_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    main(["run", EX2, "--out", str(a)])
    main(["run", EX2, "--out", str(b)])
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


def test_assertion_failure_exits_1(tmp_path):
    # same pursuit but with the margin stripped: physical contact occurs
    bare = pursuit(r=4.0)
    path = tmp_path / "bare.ini"
    path.write_text(save_scenario(bare))
    assert main(["run", str(path), "--assert-no-collision"]) == 1


def test_estimate_identity_assertion_passes(tmp_path, capsys):
    code = main(["run", EX1, "--assert-theorem2"])
    assert code == 0
    assert "assert theorem2: PASS" in capsys.readouterr().out


def test_missing_file_exits_2(capsys):
    assert main(["run", "no/such/file.ini"]) == 2
    assert "file" in capsys.readouterr().err.lower()


def test_malformed_file_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.ini"
    path.write_text("not an ini at all {{{\n")
    assert main(["run", str(path)]) == 2
    capsys.readouterr()


def test_validation_failure_exits_2(tmp_path, capsys):
    s = head_on()
    text = save_scenario(s).replace("position = -10.0, 0.0", "position = 9.0, 0.0")
    path = tmp_path / "overlap.ini"
    path.write_text(text)
    assert main(["run", str(path)]) == 2
    assert "initial distance" in capsys.readouterr().err


def test_usage_errors_exit_2(capsys):
    assert main(["frobnicate"]) == 2
    assert main(["sweep", EX1, "--dts", "abc"]) == 2
    assert main(["sweep", EX1, "--dts", "0.05,-0.01"]) == 2
    capsys.readouterr()


def test_help_exits_0(capsys):
    assert main(["--help"]) == 0
    assert "run" in capsys.readouterr().out


def test_sweep_writes_csv(tmp_path, capsys):
    code = main(["sweep", EX1, "--dts", "0.05,0.025", "--out", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "sweep.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["dt_s", "margin_m", "min_h_m2", "min_hr0_m2"]
    assert len(rows) == 3
    # cooperating pair needs no margin at either sample time
    assert float(rows[1][1]) == 0.0
    assert float(rows[2][1]) == 0.0
    assert "wrote" in capsys.readouterr().out


def test_sweep_abort_exits_3(tmp_path, capsys):
    from pcca import Controller

    blind = head_on(horizon=10.0, controller=Controller.NON_INTERACTING)
    path = tmp_path / "blind.ini"
    path.write_text(save_scenario(blind))
    assert main(["sweep", str(path), "--dts", "0.05"]) == 3
    assert "margin" in capsys.readouterr().err.lower()


def test_svg_outputs(tmp_path):
    code = main(["run", EX1, "--out", str(tmp_path), "--svg"])
    assert code == 0
    assert (tmp_path / "trajectory.svg").stat().st_size > 0
    assert (tmp_path / "barrier.svg").stat().st_size > 0
