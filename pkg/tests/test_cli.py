import json
import subprocess
import sys

import pytest

from qosc.cli import main, parse_complex


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_complex():
    assert parse_complex("i") == 1j
    assert parse_complex("-i") == -1j
    assert parse_complex("0.7i") == 0.7j
    assert parse_complex("0.3") == 0.3
    assert parse_complex("1+2j") == 1 + 2j


def test_eval_poly(capsys):
    code, out, _ = run(capsys, "eval", "poly", "--n", "3", "--s", "4", "--format", "json")
    assert code == 0
    assert json.loads(out) == [{"n": 3, "s": 4, "value": pytest.approx(-990.6666666666668, rel=1e-13)}]


def test_eval_kernel_csv(capsys):
    code, out, _ = run(capsys, "eval", "kernel", "--s", "4", "--p", "1", "--t", "0.3", "--format", "csv")
    assert code == 0 and "\r" not in out
    header, row = out.strip().split("\n")
    assert header == "s,p,re,im"
    assert float(row.split(",")[2]) == pytest.approx(-0.000648401698542906, rel=1e-12)


def test_eval_kernel_split_flags(capsys):
    a = run(capsys, "eval", "kernel", "--s", "2", "--p", "2", "--t", "i")[1]
    b = run(capsys, "eval", "kernel", "--s", "2", "--p", "2", "--t-im", "1")[1]
    assert a == b
    code, _, err = run(capsys, "eval", "kernel", "--s", "2", "--p", "2", "--t", "i", "--t-re", "1")
    assert code == 2 and "not both" in err


def test_eval_coherent_fallback(capsys):
    code, out, err = run(capsys, "eval", "coherent", "--alpha-re", "1", "--mu", "0.1", "--s", "2", "--format", "csv")
    assert code == 0
    assert "warning" in err and "series" in err
    assert out.startswith("s,re,im\n2,")


def test_eval_missing_argument(capsys):
    code, _, err = run(capsys, "eval", "poly", "--n", "3")
    assert code == 2 and "--s" in err


@pytest.mark.parametrize("flag,value", [("--q", "1.5"), ("--mu", "0"), ("--s-max", "-1"), ("--tol", "-1")])
def test_invalid_config(capsys, flag, value):
    code, _, err = run(capsys, "verify", "pearson", flag, value)
    assert code == 2 and err.startswith("qosc:")


def test_numerical_error_exit(capsys):
    code, _, err = run(capsys, "eval", "poly", "--n", "25", "--s", "60")
    assert code == 1 and "OverflowError" in err


def test_verify_json_deterministic(capsys):
    first = run(capsys, "verify", "pearson", "--format", "json")[1]
    second = run(capsys, "verify", "pearson", "--format", "json")[1]
    assert first == second
    reports = json.loads(first)
    assert [r["check_name"] for r in reports] == sorted(r["check_name"] for r in reports)
    assert list(reports[0]) == ["check_name", "parameters", "max_residual", "tolerance", "pass", "runtime_ms"]
    assert all(r["pass"] and r["runtime_ms"] == 0 for r in reports)


def test_verify_timing(capsys):
    reports = json.loads(run(capsys, "verify", "hamiltonian", "--format", "json", "--timing")[1])
    assert all(r["runtime_ms"] >= 0 for r in reports)


def test_verify_list(capsys):
    code, out, _ = run(capsys, "verify", "--list")
    assert code == 0
    names = [line.split(":")[0] for line in out.strip().split("\n")]
    assert "biortho" in names and "unitarity" in names and len(names) == 13


def test_table_spectrum(capsys):
    code, out, _ = run(capsys, "table", "spectrum", "--n-max", "3")
    assert code == 0
    assert out == "n,e_n\n0,0\n1,1\n2,1.5\n3,1.75\n"


def test_table_kernel_to_file(tmp_path, capsys):
    path = tmp_path / "k.csv"
    code, out, _ = run(capsys, "table", "kernel", "--s-max", "50", "--out", str(path))
    assert code == 0 and out == ""
    text = path.read_text()
    assert text.startswith("# t = 1j")
    assert "unitarity_residual" in text
    data = [line for line in text.split("\n") if line and not line.startswith("#")]
    assert len(data) == 52 and data[0].split(",")[:3] == ["s", "re_0", "im_0"]


def test_table_small_lattice_note(capsys):
    out = run(capsys, "table", "kernel", "--s-max", "8")[1]
    assert "whole lattice" in out


def test_table_unwritable(tmp_path, capsys):
    code, _, err = run(capsys, "table", "spectrum", "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == 1 and "cannot write" in err


def test_wavefunction_table(capsys):
    out = run(capsys, "table", "wavefunctions", "--n-max", "2", "--s-max", "5", "--format", "json")[1]
    rows = json.loads(out)
    assert len(rows) == 6 and set(rows[0]) == {"s", "psi_0", "psi_1", "psi_2"}


def test_console_script():
    proc = subprocess.run(
        [sys.executable, "-m", "qosc.cli", "verify", "limit"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout.strip().endswith("1/1 checks passed")


def test_eval_kernel_pole_fallback(capsys):
    code, out, err = run(capsys, "eval", "kernel", "--s", "2", "--p", "2", "--t", "0.5", "--format", "csv")
    assert code == 0 and "warning" in err
    assert out.startswith("s,p,re,im\n2,2,")
