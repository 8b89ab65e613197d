import csv
import io
import os
import subprocess
import sys

import numpy as np
import pytest

from pohozaev import cli
from pohozaev.errors import SolverError
from pohozaev.gridfn import GridSpec, gaussian, read_table, write_table

SOLITON = ["pohozaev", "--norm", "hq:2", "--n", "1", "--p", "2", "--alpha", "1", "--beta", "0",
           "--f", "pmm:4,1", "--preset", "sech", "--L", "20", "--N", "4096"]


def rows(text):
    """CSV part of the captured stdout (it follows the summary lines)."""
    lines = text.splitlines()
    start = next(i for i, ln in enumerate(lines) if ln.startswith("command,"))
    return list(csv.DictReader(io.StringIO("\n".join(lines[start:]))))


def test_soliton_report(capsys):
    assert cli.main(SOLITON) == 0
    (row,) = rows(capsys.readouterr().out)
    assert list(row) == cli.POHOZAEV_COLUMNS
    local, pot = float(row["local_term"]), float(row["potential_term"])
    rel = abs(float(row["pohozaev_residual"])) / max(local, abs(pot), 1.0)
    assert rel <= 1e-3
    assert row["verdict"] == "not_applicable"


def test_nonexistence_command(capsys):
    assert cli.main(["nonexistence", "--n", "3", "--p", "2", "--s", "0.5", "--alpha", "1",
                     "--beta", "1", "--q", "7"]) == 0
    out = capsys.readouterr().out
    assert rows(out)[0]["conclusion"] == "only_trivial"
    assert "only_trivial" in out.splitlines()[0]


def test_norm_check_warns_for_l1(capsys):
    assert cli.main(["norm-check", "--norm", "hq:1", "--n", "2"]) == 0
    out = capsys.readouterr().out
    assert "warning: strict convexity probe failed" in out
    assert "convexity" in rows(out)[0]["warnings"]


def test_energy_with_dilations(capsys, tmp_path):
    out = tmp_path / "e.csv"
    assert cli.main(["energy", "--alpha", "1", "--beta", "1", "--f", "sp:4,1,1", "--L", "10",
                     "--N", "256", "--dilate", "0.5,2", "--output", str(out)]) == 0
    r = list(csv.DictReader(out.open()))
    assert [float(x["lambda"]) for x in r] == [1.0, 0.5, 2.0]
    assert float(r[2]["local_term"]) / float(r[0]["local_term"]) == pytest.approx(2.0, rel=1e-12)
    assert float(r[1]["potential_term"]) / float(r[0]["potential_term"]) == pytest.approx(2.0, rel=1e-12)
    assert "report written" in capsys.readouterr().out


def test_dilation_check_command(capsys):
    assert cli.main(["dilation-check", "--alpha", "1", "--beta", "1", "--f", "sp:4,1,0",
                     "--L", "12", "--N", "512"]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert float(row["mismatch"]) <= 1e-6
    assert float(row["analytic"]) == -float(row["pohozaev_residual"])


def test_system_pohozaev_command(capsys):
    assert cli.main(["system-pohozaev", "--g", "dp:4,1,1", "--alpha", "1", "--beta", "1",
                     "--preset", "gaussian:1", "--preset-v", "gaussian:0.7", "--N", "256"]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert row["command"] == "system-pohozaev" and row["verdict"] == "not_applicable"


def test_input_table_and_solve_save(tmp_path, capsys):
    spec = GridSpec(1, 20.0, 256)
    init = tmp_path / "init.txt"
    write_table(gaussian(spec), init)
    saved = tmp_path / "u.txt"
    assert cli.main(["solve", "--f", "pmm:4,1", "--input", str(init), "--save", str(saved),
                     "--tol", "1e-3"]) == 0
    (row,) = rows(capsys.readouterr().out)
    assert row["converged"] == "True"
    u = read_table(saved)
    assert u.spec == spec and np.argmax(u.values) in (127, 128)


def test_solve_non_convergence_exit_3(capsys):
    assert cli.main(["solve", "--f", "pmm:4,1", "--L", "20", "--N", "256",
                     "--max-iters", "2"]) == cli.EXIT_NOT_CONVERGED
    assert rows(capsys.readouterr().out)[0]["converged"] == "False"


@pytest.mark.parametrize("argv", [
    ["pohozaev", "--norm", "hq:x", "--f", "pmm:4,1"],
    ["pohozaev", "--f", "pmm:4"],
    ["pohozaev"],
    ["pohozaev", "--f", "pmm:4,1", "--input", "/nonexistent/table.txt"],
    ["pohozaev", "--f", "pmm:4,1", "--preset", "lorentz"],
    ["pohozaev", "--f", "pmm:4,1", "--alpha", "0.5"],
    ["nonexistence", "--n", "3", "--p", "2"],
    ["nonexistence", "--n", "2", "--p", "2", "--q", "3"],
    ["energy", "--f", "sp:3,1,1", "--dilate", "-1"],
    ["solve", "--f", "sp:4,1,1"],
    ["system-pohozaev", "--g", "xx:4"],
    ["pohozaev", "--f", "pmm:4,1", "--n", "2", "--diagonal", "corrected", "--beta", "1"],
])
def test_validation_errors_exit_2(argv, capsys):
    assert cli.main(argv) == cli.EXIT_INPUT
    assert "error" in capsys.readouterr().err


def test_unknown_command_prints_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["integrate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_numerical_failure_exit_4(monkeypatch, capsys):
    def boom(spec):
        raise SolverError("fibering maximizer hit the bracket")
    monkeypatch.setitem(cli.HANDLERS, "pohozaev", boom)
    assert cli.main(["pohozaev", "--f", "pmm:4,1"]) == cli.EXIT_NUMERICAL
    monkeypatch.setitem(cli.HANDLERS, "pohozaev",
                        lambda spec: ([{"local_term": float("nan")}], [], 0))
    assert cli.main(["pohozaev", "--f", "pmm:4,1"]) == cli.EXIT_NUMERICAL


def test_run_with_runspec_object(tmp_path):
    out = tmp_path / "n.csv"
    spec = cli.RunSpec("nonexistence", n=3, p=2.0, s=0.5, alpha=1.0, beta=1.0, q=5.0,
                       output=str(out))
    assert cli.run(spec, out=io.StringIO()) == 0
    assert list(csv.DictReader(out.open()))[0]["conclusion"] == "no_conclusion"


def test_module_entry_point_and_thread_invariance(tmp_path):
    outputs = []
    for threads in ("1", "3"):
        path = tmp_path / f"t{threads}.csv"
        env = dict(os.environ, POHOZAEV_THREADS=threads)
        proc = subprocess.run([sys.executable, "-m", "pohozaev", "energy", "--alpha", "0",
                               "--beta", "1", "--s", "0.4", "--f", "sp:4,1,1", "--N", "700",
                               "--dilate", "2", "--output", str(path)],
                              env=env, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
