from __future__ import annotations
import typing as T
from pathlib import Path
from contextlib import contextmanager
import tempfile
import json
import os
import logging

import numpy as np
import pandas
import xarray

from .common import fmt

# for NetCDF compression. too high slows down with little space savings.
ENC = {"zlib": True, "complevel": 1, "fletcher32": True}

BOUNDARY_COLUMNS = ["tau", "rho"]
SNAPSHOT_COLUMNS = ["x", "S", "pi", "V"]
VALIDATION_COLUMNS = ["tau", "rho_pde", "rho_binomial", "rel_error"]


@contextmanager
def atomic(fn: Path) -> T.Iterator[Path]:
    """yields a temporary path next to fn that replaces fn once the block succeeds"""
    fn = Path(fn).expanduser()
    fn.parent.mkdir(parents=True, exist_ok=True)

    fd, tmp = tempfile.mkstemp(dir=fn.parent, prefix=f".{fn.name}.", suffix=".tmp")
    os.close(fd)
    tmp = Path(tmp)
    try:
        yield tmp
        os.replace(tmp, fn)
    finally:
        if tmp.exists():
            tmp.unlink()


def write_csv(fn: Path, table: pandas.DataFrame) -> Path:
    """decimal text with round-trip precision, no index column"""
    with atomic(fn) as tmp:
        table.to_csv(tmp, index=False, float_format=fmt, lineterminator="\n")
    logging.info(f"wrote {fn}")

    return Path(fn)


def write_text(fn: Path, text: str) -> Path:
    with atomic(fn) as tmp:
        tmp.write_text(text)
    logging.info(f"wrote {fn}")

    return Path(fn)


def write_json(fn: Path, obj: dict[str, T.Any]) -> Path:
    return write_text(fn, json.dumps(obj, indent=1, sort_keys=False) + "\n")


def write_netcdf(fn: Path, dat: xarray.Dataset) -> Path:
    enc = {k: ENC for k in dat.data_vars if dat[k].dtype.kind == "f"}
    with atomic(fn) as tmp:
        dat.to_netcdf(tmp, mode="w", encoding=enc)
    logging.info(f"wrote {fn}")

    return Path(fn)


def boundary_table(dat: xarray.Dataset, stride: int = 1) -> pandas.DataFrame:
    """rows j = 0, stride, 2 stride, ... plus the final level"""
    m = dat.tau.size - 1
    j = np.arange(0, m + 1, stride)
    if j[-1] != m:
        j = np.append(j, m)

    return pandas.DataFrame({"tau": dat.tau.values[j], "rho": dat.rho.values[j]})


def snapshot_name(tau: float) -> str:
    return f"pi_snapshot_{fmt(tau)}.csv"


def read_boundary(fn: Path) -> pandas.DataFrame:
    """
    read a boundary.csv file

    Raises
    ------
    ValueError
        header is not tau,rho, values are not numeric, or there are no rows
    """
    fn = Path(fn).expanduser()
    if not fn.is_file():
        raise FileNotFoundError(fn)

    try:
        table = pandas.read_csv(fn, dtype=float, float_precision="round_trip")
    except (pandas.errors.ParserError, pandas.errors.EmptyDataError, ValueError) as e:
        raise ValueError(f"{fn} is not a valid boundary file: {e}")

    if list(table.columns) != BOUNDARY_COLUMNS:
        raise ValueError(f"{fn}: expected header {','.join(BOUNDARY_COLUMNS)}")
    if table.empty:
        raise ValueError(f"{fn}: no data rows")
    if not np.isfinite(table.values).all():
        raise ValueError(f"{fn}: non-finite values")

    return table


def write_psi_table(fn: Path, nodes: np.ndarray, values: np.ndarray) -> Path:
    return write_csv(fn, pandas.DataFrame({"x": nodes, "psi": values}))
