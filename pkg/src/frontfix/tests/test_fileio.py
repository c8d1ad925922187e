import pytest
from pytest import approx
from pathlib import Path
import json

import numpy as np
import pandas
import xarray

import frontfix.fileio as fio
from frontfix.common import fmt

R = Path(__file__).parent / "data"


@pytest.mark.parametrize(
    "x, s", [(20.0, "20"), (0.0, "0"), (0.1, "0.1"), (1 / 3, "0.3333333333333333")]
)
def test_fmt(x, s):
    assert fmt(x) == s


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    tab = pandas.DataFrame({"tau": np.linspace(0, 1, 11), "rho": 20 + rng.random(11)})
    fn = fio.write_csv(tmp_path / "boundary.csv", tab)

    lines = fn.read_text().splitlines()
    assert lines[0] == "tau,rho"
    assert lines[1] == "0,20" or lines[1].startswith("0,20.")

    back = fio.read_boundary(fn)
    assert (back.rho.values == tab.rho.values).all()


def test_atomic_failure(tmp_path):
    fn = tmp_path / "x.txt"
    fn.write_text("old")

    with pytest.raises(RuntimeError):
        with fio.atomic(fn) as tmp:
            tmp.write_text("new")
            raise RuntimeError

    assert fn.read_text() == "old"
    assert list(tmp_path.iterdir()) == [fn]


def test_json(tmp_path):
    fn = fio.write_json(tmp_path / "sub" / "d.json", {"a": [1, 2], "b": 0.5})
    assert json.loads(fn.read_text()) == {"a": [1, 2], "b": 0.5}


def test_boundary_table():
    dat = xarray.Dataset({"rho": ("tau", np.arange(11.0))}, coords={"tau": np.linspace(0, 1, 11)})

    assert fio.boundary_table(dat).shape == (11, 2)
    tab = fio.boundary_table(dat, stride=4)
    assert tab.rho.tolist() == [0, 4, 8, 10]


def test_snapshot_name():
    assert fio.snapshot_name(0.5) == "pi_snapshot_0.5.csv"
    assert fio.snapshot_name(1.0) == "pi_snapshot_1.csv"


def test_read_boundary():
    tab = fio.read_boundary(R / "boundary.csv")
    assert tab.shape == (5, 2)
    assert tab.rho.iloc[0] == 20


@pytest.mark.parametrize(
    "txt", ["tau,rho\n", "t,rho\n0,20\n", "tau,rho\n0,abc\n", "tau,rho\n0,inf\n", ""],
    ids=["no rows", "header", "text", "inf", "empty"],
)
def test_read_boundary_bad(tmp_path, txt):
    fn = tmp_path / "bad.csv"
    fn.write_text(txt)
    with pytest.raises(ValueError):
        fio.read_boundary(fn)


def test_read_boundary_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        fio.read_boundary(tmp_path / "nothing.csv")


def test_psi_table(tmp_path):
    fn = fio.write_psi_table(tmp_path / "psi.csv", np.array([0, 1.0]), np.array([0, 1.2]))
    tab = pandas.read_csv(fn)
    assert list(tab.columns) == ["x", "psi"]
    assert tab.psi.values == approx([0, 1.2])


def test_netcdf(tmp_path):
    pytest.importorskip("netCDF4")

    dat = xarray.Dataset({"rho": ("tau", np.arange(3.0))}, coords={"tau": [0, 0.5, 1.0]})
    fn = fio.write_netcdf(tmp_path / "solve.nc", dat)

    with xarray.open_dataset(fn) as back:
        assert back.rho.values == approx(dat.rho.values)
