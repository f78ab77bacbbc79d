import csv
import filecmp
import io
import json
import subprocess
import sys

import pytest

from radialsob.cli import main
from radialsob.embedding import SWEEP_COLUMNS


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize(
    "argv,code",
    [
        (["check", "-n", "3", "-p", "4", "-q", "4", "-a", "0.5", "-b", "0.5"], 0),
        (["check", "-n", "3", "-p", "4", "-q", "4", "-a", "0", "-b", "0"], 1),
        (["check", "-n", "6", "-p", "3", "-q", "3", "-a", "0.1", "-b", "0.1"], 0),
        (["embed", "check", "-n", "3", "-s", "1", "-q", "4", "-c", "1"], 0),
        (["embed", "check", "-n", "3", "-s", "1", "-q", "4", "-c", "2"], 1),
    ],
)
def test_check_exit_codes(capsys, argv, code):
    got, out, _ = run(capsys, *argv)
    assert got == code
    assert out.strip().splitlines()[-1] == ("admissible" if code == 0 else "inadmissible")


def test_check_prints_split(capsys):
    _, out, _ = run(capsys, "check", "-n", "3", "-p", "4", "-q", "4", "-a", "0.5", "-b", "0.5")
    assert "s interval: (0.625, 1.375)" in out
    assert "s=1 t=1" in out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["check", "-n", "3"],
        ["check", "-n", "x", "-p", "4", "-q", "4", "-a", "0.5", "-b", "0.5"],
        ["embed", "constant", "-n", "3", "-s", "1", "-q", "4"],
        ["embed", "sweep", "-n", "3", "-s", "1", "--q-values", "3,a", "--c-values", "0"],
        ["solve", "-n", "3", "--D", "0"],
    ],
)
def test_parse_errors_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_solve_missing_parameters(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "-n", "3", "--out", str(tmp_path))
    assert code == 2 and "missing parameters" in err


def test_bad_config_is_parse_error(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n=3 p=4 q=4 a=0.5 colour=blue\n")
    code, _, err = run(capsys, "solve", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 2 and "colour" in err


def test_empty_split_interval(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "-n", "3", "-p", "20", "-q", "20", "-a", "0.1", "-b", "0.1", "--out", str(tmp_path))
    assert code == 1 and "inadmissible" in err


def test_solve_inadmissible(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "-n", "3", "-p", "4", "-q", "4", "-a", "0", "-b", "0", "--out", str(tmp_path))
    assert code == 1 and "inadmissible" in out


SOLVE = ["solve", "-n", "3", "-p", "4", "-q", "4", "-a", "0.5", "-b", "0.5", "--k", "8", "--starts", "8"]


def test_solve_outputs_are_byte_identical(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, *SOLVE, "--out", str(a))[0] == 0
    assert run(capsys, *SOLVE, "--out", str(b), "--threads", "2")[0] == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["solution_01.csv", "solution_01.json", "summary.csv"]
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert match == names and not mismatch and not errors
    meta = json.loads((a / "solution_01.json").read_text())
    assert meta["config"] == "n=3 p=4 q=4 a=0.5 b=0.5 s=1" and meta["seed"] == 0xC0FFEE


def test_solve_summary_sorted_by_phi(capsys, tmp_path):
    code, out, _ = run(capsys, *SOLVE, "--out", str(tmp_path), "--seed", "0x1234", "--D", "2")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["index", "phi", "residual", "iterations"]
    phis = [float(r[1]) for r in rows[1:] if not r[0].startswith("#")]
    assert phis == sorted(phis) and all(p > 0 for p in phis)


def test_solve_outdir_from_environment(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("RADIALSOB_OUTDIR", str(tmp_path / "env"))
    assert run(capsys, *SOLVE)[0] == 0
    assert (tmp_path / "env" / "summary.csv").exists()


def test_solve_from_config(capsys, tmp_path):
    cfg = tmp_path / "default.cfg"
    cfg.write_text("# default instance\nn=3\np=4\nq=4\na=0.5\nb=0.5\n")
    code, _, _ = run(capsys, "solve", "--config", str(cfg), "--k", "8", "--starts", "8", "--out", str(tmp_path / "c"))
    assert code == 0
    assert run(capsys, *SOLVE, "--out", str(tmp_path / "d"))[0] == 0
    assert (tmp_path / "c" / "solution_01.csv").read_bytes() == (tmp_path / "d" / "solution_01.csv").read_bytes()


def test_solve_reports_shortfall_and_empty(capsys, tmp_path):
    code, out, _ = run(capsys, *SOLVE[:-2], "--starts", "1", "--D", "5", "--out", str(tmp_path))
    assert code in (0, 4)
    if code == 0:
        assert "# shortfall" in out
    else:
        assert "no nontrivial solution" in out


def test_embed_sweep_csv_schema(capsys, tmp_path):
    path = tmp_path / "sweep.csv"
    argv = ["embed", "sweep", "-n", "3", "-s", "1", "--q-values", "3,4", "--c-values", "0,1,2", "--no-estimate"]
    code, out, _ = run(capsys, *argv, "--csv", str(path))
    assert code == 0 and "wrote 6 rows" in out
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == SWEEP_COLUMNS and len(rows) == 7
    code, out, _ = run(capsys, *argv)
    assert code == 0 and out == path.read_text()


def test_embed_constant(capsys):
    code, out, _ = run(capsys, "embed", "constant", "-n", "3", "-s", "1", "-q", "4", "-c", "1", "--k", "4", "--N", "256")
    assert code == 0
    assert out.startswith("C_est=") and "refinement:" in out
    code, _, _ = run(capsys, "embed", "constant", "-n", "3", "-s", "1", "-q", "4", "-c", "2")
    assert code == 1


def test_geometry(capsys, tmp_path):
    argv = ["geometry", "-n", "3", "-p", "4", "-q", "4", "-a", "0.5", "-b", "0.5", "--k", "8", "--samples", "5"]
    code, out, _ = run(capsys, *argv, "--out", str(tmp_path))
    assert code == 0
    assert "ladder top negative for all samples: True" in out
    small = [ln for ln in out.splitlines() if ln.startswith("small-sphere")][0]
    assert float(small.rsplit(" ", 1)[1]) > 0
    rows = list(csv.reader((tmp_path / "ladder.csv").open()))
    assert rows[0] == ["series", "lambda", "phi"] and len(rows) == 1 + 6 * 41
    assert run(capsys, *argv, "--m", "3")[0] == 2


def test_console_entry_points():
    for cmd in (["radialsob"], [sys.executable, "-m", "radialsob"]):
        proc = subprocess.run(
            cmd + ["check", "-n", "3", "-p", "4", "-q", "4", "-a", "0.5", "-b", "0.5"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0 and proc.stdout.strip().endswith("admissible")
