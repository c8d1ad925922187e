from __future__ import annotations
import typing as T
from pathlib import Path
from concurrent.futures import ProcessPoolExecutor
import time
import logging

import numpy as np
import pandas
import xarray

from .common import ConfigError
from .config import RunConfig, load_config
from .fileio import (
    boundary_table,
    snapshot_name,
    write_csv,
    write_json,
    write_netcdf,
)
from .model import TransformedState, price_profile
from .oracle import BinomialSpec, binomial_boundary
from .scheme import StepDiagnostics, solve_boundary, constraint_defect


def snap_levels(taus: T.Sequence[float], T_: float, m: int) -> dict[int, float]:
    """nearest time level j for each requested tau"""
    k = T_ / m
    levels = {}
    for tau in taus:
        j = int(np.clip(np.rint(tau / k), 0, m))
        if not np.isclose(j * k, tau, rtol=0, atol=1e-12 * max(1.0, T_)):
            logging.info(f"snapshot tau={tau} snapped to level {j}, tau={j * T_ / m}")
        levels[j] = j * T_ / m

    return levels


def snapshot_table(state: TransformedState, params) -> pandas.DataFrame:
    x = state.x
    S = state.rho * np.exp(-x)

    return pandas.DataFrame(
        {"x": x, "S": S, "pi": state.pi, "V": price_profile(state, params, S)}
    )


def solve(
    cfg: RunConfig | str | Path, verbose: bool = False
) -> tuple[xarray.Dataset, dict[float, TransformedState]]:
    """
    solve the free boundary problem of a run configuration

    Parameters
    ----------

    cfg: RunConfig or path to configuration file
    verbose: bool
        log progress at INFO level

    Returns
    -------

    dat: xarray.Dataset
        rho and per-level diagnostics indexed by tau; final-level pi, S, V indexed by x
    snapshots: dict
        requested tau (snapped to the grid) -> TransformedState
    """
    if verbose:
        logging.basicConfig(level=logging.INFO)

    if not isinstance(cfg, RunConfig):
        cfg = load_config(cfg)

    P, G = cfg.market, cfg.grid
    model = cfg.model.build(P)
    wanted = snap_levels(cfg.outputs.snapshots, P.T, G.m)

    defect = np.zeros(G.m + 1)
    snaps: dict[float, TransformedState] = {}

    def record(j: int, state: TransformedState, d: StepDiagnostics | None):
        defect[j] = constraint_defect(state, model, P)
        if j in wanted:
            snaps[wanted[j]] = state

    logging.info(f"solving {cfg.model.kind} a={cfg.model.a} on n={G.n} m={G.m} L={G.L}")
    tic = time.monotonic()
    curve, final, diags = solve_boundary(P, G, model, cfg.iteration, callback=record)
    wall = time.monotonic() - tic
    logging.info(f"rho(T) = {final.rho}  {wall:.1f} s")

    def per_level(name: str, dtype: type) -> np.ndarray:
        return np.concatenate(([0], [getattr(d, name) for d in diags])).astype(dtype)

    x = final.x
    S = final.rho * np.exp(-x)
    dat = xarray.Dataset(
        {
            "rho": ("tau", curve.rhos),
            "iterations_used": ("tau", per_level("iterations_used", int)),
            "final_residual": ("tau", per_level("final_residual", float)),
            "gamma_clamp_count": ("tau", per_level("gamma_clamp_count", int)),
            "rho_change": ("tau", per_level("rho_change", float)),
            "contraction_violations": ("tau", per_level("contraction_violations", int)),
            "converged": ("tau", np.concatenate(([True], [d.converged for d in diags]))),
            "constraint_defect": ("tau", defect),
            "pi": ("x", final.pi),
            "S": ("x", S),
            "V": ("x", price_profile(final, P, S)),
        },
        coords={"tau": curve.taus, "x": x},
        attrs={
            "E": P.E,
            "T": P.T,
            "r": P.r,
            "q": P.q,
            "L": G.L,
            "n": G.n,
            "m": G.m,
            "model": cfg.model.kind,
            "sigma_hat": cfg.model.sigma_hat,
            "a": cfg.model.a,
            "tol": cfg.iteration.tol,
            "p_max": cfg.iteration.p_max,
            "wall_seconds": wall,
        },
    )

    return dat, snaps


def diagnostics(dat: xarray.Dataset, cfg: RunConfig) -> dict[str, T.Any]:
    return {
        "iterations_used": dat.iterations_used.values[1:].tolist(),
        "final_residual": dat.final_residual.values[1:].tolist(),
        "gamma_clamp_count": dat.gamma_clamp_count.values[1:].tolist(),
        "nonconverged_levels": int((~dat.converged.values).sum()),
        "contraction_violations": int(dat.contraction_violations.sum()),
        "max_constraint_defect": float(dat.constraint_defect.max()),
        "wall_seconds": dat.attrs["wall_seconds"],
        "config_echo": cfg.echo(),
    }


def run_solve(
    cfg: RunConfig | str | Path, out: Path = None, verbose: bool = False
) -> xarray.Dataset:
    """
    solve and write boundary.csv, diagnostics.json and the requested pi_snapshot_<tau>.csv

    Parameters
    ----------

    cfg: RunConfig or path to configuration file
    out: pathlib.Path
        output directory, overrides the configured one
    """
    if not isinstance(cfg, RunConfig):
        cfg = load_config(cfg)

    outdir = Path(out).expanduser() if out else cfg.outputs.directory

    dat, snaps = solve(cfg, verbose)

    write_csv(outdir / "boundary.csv", boundary_table(dat, cfg.outputs.stride))
    for tau, state in sorted(snaps.items()):
        write_csv(outdir / snapshot_name(tau), snapshot_table(state, cfg.market))
    write_json(outdir / "diagnostics.json", diagnostics(dat, cfg))
    if cfg.outputs.netcdf:
        write_netcdf(outdir / "solve.nc", dat)

    return dat


def sweep(configs: T.Sequence[Path], jobs: int = 1, verbose: bool = False) -> list[Path]:
    """
    independent solves, concurrently when jobs > 1

    Each configuration writes to its own output directory.
    """
    cfgs = [load_config(fn) for fn in configs]
    dirs = [c.outputs.directory.resolve() for c in cfgs]
    if len(set(dirs)) != len(dirs):
        raise ConfigError("configurations in a sweep need distinct output directories")

    if jobs <= 1 or len(cfgs) == 1:
        for c in cfgs:
            run_solve(c, verbose=verbose)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for _ in pool.map(run_solve, cfgs):
                pass

    return [c.outputs.directory for c in cfgs]


def validation_levels(m: int, T_: float, samples: int, tmin: float = 0.05) -> np.ndarray:
    """time level indices spread evenly over tau in [tmin T, T]"""
    k = T_ / m
    j0 = int(np.ceil(tmin * T_ / k - 1e-9))
    j = np.unique(np.rint(np.linspace(j0, m, samples)).astype(int))

    return j


def run_validate(
    cfg: RunConfig | str | Path,
    lattice_steps: int = 5000,
    tol: float = None,
    out: Path = None,
    verbose: bool = False,
) -> tuple[pandas.DataFrame, float, bool]:
    """
    compare the PDE boundary with the binomial lattice boundary on sampled time levels

    Returns
    -------

    table: pandas.DataFrame
        tau, rho_pde, rho_binomial, rel_error
    max_error: float
        largest relative error over tau in [0.05 T, T]
    ok: bool
        max_error within tolerance
    """
    if not isinstance(cfg, RunConfig):
        cfg = load_config(cfg)

    if not cfg.model.linear:
        raise ConfigError(
            f"no lattice oracle for the nonlinear model with a={cfg.model.a}, "
            "validate needs the constant model or a = 0"
        )
    if lattice_steps < 100:
        raise ConfigError(f"lattice needs >= 100 steps, got {lattice_steps}")

    tol = cfg.outputs.validation_tol if tol is None else tol
    outdir = Path(out).expanduser() if out else cfg.outputs.directory

    dat, _ = solve(cfg, verbose)

    P = cfg.market
    spec = BinomialSpec(lattice_steps, P, cfg.model.sigma_hat)
    j = validation_levels(cfg.grid.m, P.T, cfg.outputs.validation_samples)
    tau = dat.tau.values[j]
    rho = dat.rho.values[j]
    # rho(tau) = S_f(T - tau), the lattice needs t < T
    lattice = np.array([binomial_boundary(spec, max(P.T - t, 0.0)) for t in tau])

    table = pandas.DataFrame(
        {
            "tau": tau,
            "rho_pde": rho,
            "rho_binomial": lattice,
            "rel_error": np.abs(rho - lattice) / lattice,
        }
    )
    write_csv(outdir / "validation.csv", table)

    max_err = float(table.rel_error.max())
    ok = max_err <= tol
    logging.info(f"max relative boundary error {max_err:.4g}, tolerance {tol}")

    return table, max_err, ok
