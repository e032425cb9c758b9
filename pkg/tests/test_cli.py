import subprocess
import sys

import pytest

from subdiff.cli import main
from subdiff.studies import read_csv


def test_converge_to_stdout(capsys):
    assert main(["converge", "--problem", "ode_ml", "--beta", "0.5", "--n-list", "10,20"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert [r["N"] for r in rows] == [10.0, 20.0]
    assert rows[1]["E2_eoc"] > 0.5


def test_converge_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("problem = ode_heaviside\nbeta = 0.3\nn-list = 8 16 32\nscheme = cq\ngrading = 2\n")
    out = tmp_path / "table.csv"
    assert main(["converge", "--config", str(cfg), "--n-list", "8,16", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    rows = read_csv(out)
    assert [r["N"] for r in rows] == [8.0, 16.0]


def test_unknown_config_key_is_an_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("betta = 0.3\n")
    assert main(["converge", "--config", str(cfg)]) == 1
    assert "unknown config keys: betta" in capsys.readouterr().err


def test_invalid_value_exits_nonzero(capsys):
    assert main(["converge", "--beta", "1.5", "--n-list", "10"]) == 1
    assert "subdiff converge: error:" in capsys.readouterr().err


def test_bad_choice_is_rejected_by_the_parser():
    with pytest.raises(SystemExit) as info:
        main(["converge", "--scheme", "euler"])
    assert info.value.code == 2


def test_adaptive_writes_directory(tmp_path, capsys):
    out = tmp_path / "adapt"
    code = main(["adaptive", "--problem", "ode_heaviside", "--beta", "0.6", "--max-intervals", "24",
                 "--m-sub", "2", "--out", str(out)])
    assert code == 0
    captured = capsys.readouterr()
    assert "# stopped: budget" in captured.err
    assert (out / "adaptive.csv").exists() and (out / "final_mesh.txt").exists()
    rows = read_csv(out / "adaptive.csv")
    assert rows[0]["N"] == 8.0 and rows[-1]["N"] >= 24


def test_adaptive_to_stdout(capsys):
    assert main(["adaptive", "--beta", "0.5", "--target", "0.5", "--initial-n", "4"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("iteration,N,e_max")
    assert "# stopped: target" in captured.err


def test_weights_lists_every_route(capsys):
    assert main(["weights", "--beta", "0.5", "-N", "4"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert len(rows) == 10
    for row in rows:
        assert row["quadrature"] == pytest.approx(row["divdiff"], rel=1e-9)
        assert row["quadrature"] == pytest.approx(row["uniform"], rel=1e-9)


def test_weights_graded_mesh_has_no_uniform_column(capsys):
    assert main(["weights", "--beta", "0.3", "-N", "3", "--grading", "2"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert all(r["uniform"] is None for r in rows)


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 5 and all(line.startswith("PASS") for line in lines)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "subdiff", "weights", "-N", "2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "n,j,quadrature,divdiff,uniform"
