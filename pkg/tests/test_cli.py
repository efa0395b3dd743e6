"""Command-line interface: exit codes, file outputs and determinism."""

from __future__ import annotations

import json

import numpy as np
import pytest

from sbpkit.cli import main

TRIG1_D = np.array(
    [
        [-3.00, 3.63, -3.63, 3.00],
        [-1.81, 0.00, 3.63, -1.81],
        [1.81, -3.63, 0.00, 1.81],
        [-3.00, 3.63, -3.63, 3.00],
    ]
)


def _read_csv(path):
    lines = path.read_text(encoding="utf-8").strip().split("\n")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_build_writes_known_operator(tmp_path):
    out = tmp_path / "trig.json"
    rc = main(
        ["build", "--space", "trig:d=1", "--domain", "0", "1", "--nodes", "4",
         "--out", str(out)]
    )
    assert rc == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    np.testing.assert_allclose(np.array(data["D"]), TRIG1_D, atol=0.01)
    assert data["space"] == "trig:d=1"
    assert data["domain"] == [0.0, 1.0]


def test_build_prints_weights(tmp_path, capsys):
    rc = main(
        ["build", "--space", "exp:d=2", "--nodes", "5",
         "--out", str(tmp_path / "exp.json")]
    )
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    weight_line = next(line for line in lines if line.startswith("weights"))
    values = [float(v) for v in weight_line.split()[1:]]
    np.testing.assert_allclose(values, [0.08, 0.36, 0.12, 0.36, 0.08], atol=5e-3)


def test_build_malformed_space_is_usage_error(tmp_path, capsys):
    rc = main(
        ["build", "--space", "spline:d=2", "--nodes", "4",
         "--out", str(tmp_path / "x.json")]
    )
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_missing_options_are_usage_errors(capsys):
    rc = main(["build", "--space", "trig:d=1"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "--nodes" in err and "--out" in err


def test_unknown_flag_exits_one():
    with pytest.raises(SystemExit) as exc:
        main(["build", "--bogus", "1"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_build_then_verify_round_trip(tmp_path):
    for text in ("poly:d=3", "rbf-cubic:centers=0,0.5,1"):
        out = tmp_path / "op.json"
        nodes = "4"
        rc = main(["build", "--space", text, "--nodes", nodes, "--out", str(out)])
        assert rc == 0, text
        assert main(["verify", str(out)]) == 0, text


def test_verify_detects_zeroed_entry(tmp_path, capsys):
    out = tmp_path / "op.json"
    main(["build", "--space", "trig:d=1", "--nodes", "4", "--out", str(out)])
    data = json.loads(out.read_text(encoding="utf-8"))
    data["D"][0][0] = 0.0
    out.write_text(json.dumps(data), encoding="utf-8")
    assert main(["verify", str(out)]) == 2
    assert "FAIL" in capsys.readouterr().err


def test_verify_names_positivity_for_negative_weight(tmp_path, capsys):
    out = tmp_path / "op.json"
    main(["build", "--space", "trig:d=1", "--nodes", "4", "--out", str(out)])
    data = json.loads(out.read_text(encoding="utf-8"))
    data["weights"][1] = -abs(data["weights"][1])
    out.write_text(json.dumps(data), encoding="utf-8")
    capsys.readouterr()
    assert main(["verify", str(out)]) == 2
    assert "positive" in capsys.readouterr().err


def test_run_writes_expected_csv_columns(tmp_path):
    rc = main(
        ["run", "--problem", "advection", "--space", "trig:d=1", "--blocks", "2",
         "--tfinal", "0.25", "--cfl", "0.4", "--out", str(tmp_path)]
    )
    assert rc == 0
    header, rows = _read_csv(tmp_path / "diagnostics.csv")
    assert header == ["t", "mass", "energy"]
    assert float(rows[0][0]) == 0.0
    header, rows = _read_csv(tmp_path / "solution.csv")
    assert header == ["x", "u", "u_ref", "abs_err"]
    header, rows = _read_csv(tmp_path / "summary.csv")
    assert header == ["err_P", "err_2", "err_max", "steps", "wallclock_s"]
    assert len(rows) == 1
    assert float(rows[0][3]) >= 1


def test_run_zero_final_time_reproduces_initial_data(tmp_path):
    rc = main(
        ["run", "--problem", "advection", "--space", "trig:d=1",
         "--tfinal", "0", "--out", str(tmp_path)]
    )
    assert rc == 0
    _, rows = _read_csv(tmp_path / "solution.csv")
    for row in rows:
        x, u = float(row[0]), float(row[1])
        expected = np.cos(4 * np.pi * x) + 0.5 * np.sin(40 * np.pi * x)
        assert u == expected
        assert float(row[3]) < 1e-12


def test_run_rejects_negative_burgers_inflow(tmp_path, capsys):
    rc = main(
        ["run", "--problem", "burgers", "--space", "poly:d=2",
         "--inflow", "-1.0", "--out", str(tmp_path)]
    )
    assert rc == 1
    assert "nonneg" in capsys.readouterr().err


def test_run_outputs_are_deterministic(tmp_path):
    argv = ["run", "--problem", "advection", "--space", "exp:d=2",
            "--blocks", "2", "--tfinal", "0.2", "--cfl", "0.4"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    for name in ("diagnostics.csv", "solution.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    row_a = _read_csv(a / "summary.csv")[1][0]
    row_b = _read_csv(b / "summary.csv")[1][0]
    assert row_a[:4] == row_b[:4]  # everything except the wallclock column


def test_config_file_supplies_defaults_and_flags_win(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "problem": "advection",
                "space": "trig:d=1",
                "tfinal": 0.5,
                "cfl": 0.25,
                "out": str(tmp_path / "from_config"),
            }
        ),
        encoding="utf-8",
    )
    rc = main(["run", "--config", str(cfg), "--tfinal", "0"])
    assert rc == 0
    header, rows = _read_csv(tmp_path / "from_config" / "diagnostics.csv")
    # the explicit flag overrode tfinal, the file supplied everything else
    assert len(rows) == 1
    assert float(rows[0][0]) == 0.0


def test_config_file_rejects_unknown_keys(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nodess": 4}), encoding="utf-8")
    rc = main(
        ["build", "--config", str(cfg), "--space", "trig:d=1", "--nodes", "4",
         "--out", str(tmp_path / "op.json")]
    )
    assert rc == 1
    assert "unknown option" in capsys.readouterr().err


def test_convergence_table_output(tmp_path):
    rc = main(
        ["convergence", "--problem", "advection-source",
         "--space", "exp:d=2", "--space", "poly:d=2",
         "--blocks", "3", "6", "--out", str(tmp_path)]
    )
    assert rc == 0
    header, rows = _read_csv(tmp_path / "convergence.csv")
    assert header == ["space", "I", "err_P", "err_2", "err_max", "order"]
    assert len(rows) == 4
    assert [r[0] for r in rows] == ["exp:d=2", "exp:d=2", "poly:d=2", "poly:d=2"]
    errs = {(r[0], int(float(r[1]))): float(r[2]) for r in rows}
    # refinement shrinks the error for each space
    assert errs[("exp:d=2", 6)] < errs[("exp:d=2", 3)]
    assert errs[("poly:d=2", 6)] < errs[("poly:d=2", 3)]
    # the adapted space wins at every level
    assert errs[("exp:d=2", 3)] < errs[("poly:d=2", 3)]
    assert errs[("exp:d=2", 6)] < errs[("poly:d=2", 6)]
