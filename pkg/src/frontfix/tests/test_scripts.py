"""
test console scripts
"""

import pytest
import subprocess
from pathlib import Path
import shutil
import sys

R = Path(__file__).parent / "data"


@pytest.fixture
def small(tmp_path):
    fn = tmp_path / "small.ini"
    shutil.copy(R / "small.ini", fn)
    return fn


def run(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", *args], capture_output=True, text=True)


def test_solve(small, tmp_path):
    subprocess.check_call([sys.executable, "-m", "frontfix.solve", "--config", str(small)])

    assert (tmp_path / "boundary.csv").is_file()
    assert (tmp_path / "diagnostics.json").is_file()
    assert (tmp_path / "pi_snapshot_0.5.csv").is_file()


def test_solve_out(small, tmp_path):
    out = tmp_path / "out"
    subprocess.check_call(
        [sys.executable, "-m", "frontfix.solve", "--config", str(small), "--out", str(out)]
    )
    assert (out / "boundary.csv").is_file()


def test_solve_bad_config():
    ret = run("frontfix.solve", "--config", str(R / "bad_key.ini"))
    assert ret.returncode == 2
    assert "sigma" in ret.stderr


@pytest.mark.parametrize("cmd", ["frontfix.solve", "frontfix.validate"])
def test_missing_config(cmd, tmp_path):
    ret = run(cmd, "--config", str(tmp_path / "nothere.ini"))
    assert ret.returncode == 2
    assert "nothere.ini" in ret.stderr


def test_solve_abort(tmp_path):
    fn = tmp_path / "abort.ini"
    fn.write_text(
        "[grid]\nn = 20\nm = 2\n[iteration]\ntol = 1e-30\np_max = 1\non_nonconvergence = abort\n"
    )
    assert run("frontfix.solve", "--config", str(fn)).returncode == 3


def test_solve_unwritable(small, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("frontfix.solve", "--config", str(small), "--out", str(blocker)).returncode == 4


def test_validate_nonlinear():
    ret = run("frontfix.validate", "--config", str(R / "barles.ini"), "--lattice-steps", "500")
    assert ret.returncode == 2
    assert "a=0.15" in ret.stderr


def test_validate_tolerance(small, tmp_path):
    args = ["frontfix.validate", "--config", str(small), "--lattice-steps", "200"]

    assert run(*args, "--tol", "0.5").returncode == 0
    assert (tmp_path / "validation.csv").is_file()
    assert run(*args, "--tol", "1e-12").returncode == 5


def test_plot(tmp_path):
    out = tmp_path / "fig.svg"
    subprocess.check_call(
        [sys.executable, "-m", "frontfix.plot", "--out", str(out), str(R / "boundary.csv")]
    )
    assert out.read_text().count("<polyline") == 1


def test_plot_empty(tmp_path):
    assert run("frontfix.plot", "--out", str(tmp_path / "fig.svg")).returncode == 2


def test_psi_table(tmp_path):
    out = tmp_path / "psi.csv"
    subprocess.check_call(
        [sys.executable, "-m", "frontfix.psi_table", "--xmax", "100", "--out", str(out)]
    )
    lines = out.read_text().splitlines()
    assert lines[0] == "x,psi"
    assert lines[1] == "0,0"
    assert len(lines) == 4002
