import json
import subprocess
import sys

import pytest

from freeubm.cli import main, to_json

import reference_values as ref


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_moments_two_methods_agree(capsys):
    code, out, _ = run(capsys, "moments", "--n", "5", "--alpha", "0.5", "--t", "1", "--method", "closed,cumulant")
    assert code == 0
    report = json.loads(out)
    assert report["command"] == "moments"
    assert report["params"]["alpha"] == 0.5
    assert {r["method"] for r in report["results"]} == {"closed", "cumulant"}
    assert report["agreement"]["pass"]
    assert report["elapsed_s"] >= 0


def test_csv_headers(capsys):
    _, out, _ = run(capsys, "moments", "--n", "2", "--format", "csv")
    assert out.splitlines()[0] == "index,method,value"
    _, out, _ = run(capsys, "verify", "--suite", "stationary", "--format", "csv")
    assert out.splitlines()[0] == "check,residual,tolerance,pass"


def test_verify_w_square(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "w-square", "--t", "1", "--degree", "12")
    assert code == 0
    (row,) = json.loads(out)["results"]
    assert row["residual"] <= 1e-8
    assert row["tolerance"] == 1e-8


def test_failing_check_exits_3(capsys):
    code, _, err = run(capsys, "verify", "--suite", "w-square", "--t", "1", "--tol", "1e-30")
    assert code == 3
    assert "w-square(t=1)" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["nosuch"],
        ["moments", "--alpha", "1.5"],
        ["moments", "--method", "magic"],
        ["odd", "--alpha", "0.3", "--method", "closed"],
        ["verify", "--suite", "nosuch"],
        ["simulate", "--dim", "1"],
        ["simulate", "--word", "AX"],
    ],
)
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "usage error" in err


def test_mixed_even_odd_coeffs(capsys):
    code, out, _ = run(capsys, "mixed", "--m", "2", "--n", "2", "--method", "closed,ode,cumulant")
    assert code == 0
    values = {(r["index"], r["method"]): r["value"] for r in json.loads(out)["results"]}
    assert values[("1,1", "closed")] == pytest.approx(ref.R11(0.5, 1.0))
    code, out, _ = run(capsys, "even", "--n", "4", "--method", "ode,closed,cumulant")
    assert code == 0
    code, out, _ = run(capsys, "odd", "--n", "4", "--method", "ode,closed,convolution,cumulant")
    assert code == 0
    code, out, _ = run(capsys, "coeffs", "--degree", "3", "--alpha", "0.25")
    rows = json.loads(out)["results"]
    assert len(rows) == 16 and rows[0]["value"] == pytest.approx(0.25)


def test_seventeen_digit_floats():
    text = to_json({"x": 0.1, "y": 1.0, "z": [1e-300]})
    assert '"x": 0.10000000000000001' in text
    assert '"y": 1.0' in text
    assert json.loads(text)["x"] == 0.1


def test_simulate_is_byte_identical(capsys, tmp_path):
    argv = ["simulate", "--word", "AA*", "--word", "AA", "--dim", "16", "--samples", "20", "--steps", "5", "--seed", "7"]
    assert main(argv + ["--out", str(tmp_path / "a.json")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b.json"), "--workers", "2"]) == 0
    a = (tmp_path / "a.json").read_bytes()
    assert a == (tmp_path / "b.json").read_bytes()
    report = json.loads(a)
    assert report["seed"] == 7
    assert [r["index"] for r in report["results"]] == ["AA*", "AA"]
    assert all("stderr" in r for r in report["results"])


def test_simulate_brackets_r1(capsys):
    # reduced size of the documented N=256 run; the full size lives in the acceptance suite
    code, out, _ = run(capsys, "simulate", "--word", "AA*", "--dim", "64", "--samples", "60", "--steps", "10", "--seed", "7")
    row = json.loads(out)["results"][0]
    assert abs(row["value"] - ref.r1(0.5, 1.0)) <= 3 * row["stderr"] + 0.02


def test_verify_all_is_conjunction(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "all", "--t", "0.5,1")
    report = json.loads(out)
    assert {r["suite"] for r in report["results"]} >= {
        "binom", "kreweras", "w-square", "oddeven", "stationary", "constancy", "cross-method",
    }
    assert code == (0 if all(r["pass"] for r in report["results"]) else 3)
    assert code == 0


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "freeubm", "moments", "--n", "1", "--format", "csv"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("index,method,value")
