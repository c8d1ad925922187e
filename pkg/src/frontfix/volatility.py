"""
Volatility models sigma^2(gamma, S, tau) for the nonlinear Black-Scholes equation.

gamma stands for S^2 d^2V/dS^2, which is d(Pi)/dx in the transformed variables.

* ConstantVol: sigma_hat^2
* BarlesSonerVol: sigma_hat^2 (1 + Psi(a^2 exp(r tau) gamma))

Psi solves Psi'(x) = (Psi + 1) / (2 sqrt(x Psi) - x), Psi(0) = 0.
The ODE is singular at x = 0, so the table is integrated from the series seed
Psi(x) ~ (3/2)^(2/3) x^(1/3).
"""

from __future__ import annotations
import typing as T
from dataclasses import dataclass, field
import logging

import numpy as np
from scipy.integrate import solve_ivp

from .common import SingularDenominator, IntegrationFailure, check_positive, check_count

PSI_SERIES_COEF = 1.5 ** (2.0 / 3.0)
# second term of Psi = c x^(1/3) + d x^(2/3) + ...
PSI_SERIES_COEF2 = 1.2 * (np.sqrt(PSI_SERIES_COEF) / 2 + 1 / (4 * PSI_SERIES_COEF))

SINGULAR_THRESHOLD = 1e-12
SEED_X = 1e-8
XMAX = 1e4
NODE_COUNT = 4000


def psi_ode_rhs(x: float, psi: float) -> float:
    """
    right-hand side of the Psi ODE

    Raises
    ------
    SingularDenominator
        when |2 sqrt(x psi) - x| < 1e-12
    """
    if x <= 0 or psi <= 0:
        raise ValueError(f"Psi ODE is defined for x > 0, psi > 0, got x={x} psi={psi}")

    den = 2.0 * np.sqrt(x * psi) - x
    if abs(den) < SINGULAR_THRESHOLD:
        raise SingularDenominator(f"2 sqrt(x psi) - x = {den} at x={x} psi={psi}")

    return (psi + 1.0) / den


def psi_series(x: float | np.ndarray, terms: int = 1) -> float | np.ndarray:
    """small-x expansion of Psi with one or two terms"""
    y = np.cbrt(np.asarray(x, dtype=float))
    v = PSI_SERIES_COEF * y
    if terms >= 2:
        v = v + PSI_SERIES_COEF2 * y ** 2

    return v


@dataclass(frozen=True, eq=False)
class PsiTable:
    """
    tabulated Psi, immutable after construction

    nodes[0] = 0 with values[0] = 0; nodes[1:] are log-spaced.
    Beyond x_max, Psi is continued linearly with linear_slope.
    """

    nodes: np.ndarray
    values: np.ndarray
    x_max: float
    linear_slope: float

    def __post_init__(self):
        if self.nodes.shape != self.values.shape or self.nodes.size < 2:
            raise ValueError("Psi table nodes and values must match and have >= 2 entries")
        if self.nodes[0] != 0 or self.values[0] != 0:
            raise ValueError("Psi table must start at Psi(0) = 0")
        if not (np.diff(self.nodes) > 0).all():
            raise ValueError("Psi table nodes must be strictly increasing")
        self.nodes.setflags(write=False)
        self.values.setflags(write=False)

    def __call__(self, x: float | np.ndarray) -> float | np.ndarray:
        return psi_eval(self, x)


def build_psi_table(
    x_max: float = XMAX, node_count: int = NODE_COUNT, seed_x: float = SEED_X
) -> PsiTable:
    """
    integrate the Psi ODE from the small-x seed out to x_max

    Integration runs in t = ln(x), where dPsi/dt = x Psi'(x) is smooth,
    with an adaptive explicit Runge-Kutta method (DOP853).

    Parameters
    ----------

    x_max: float
        largest tabulated argument
    node_count: int
        number of log-spaced nodes in [seed_x, x_max], the exact node (0, 0) is prepended
    seed_x: float
        starting point of the integration

    Returns
    -------

    table: PsiTable
    """
    x_max = check_positive("x_max", x_max)
    seed_x = check_positive("seed_x", seed_x)
    node_count = check_count("node_count", node_count, 2)
    if seed_x >= x_max:
        raise ValueError(f"seed_x {seed_x} must be below x_max {x_max}")

    def rhs(t: float, y: np.ndarray) -> list[float]:
        x = np.exp(t)
        try:
            return [x * psi_ode_rhs(x, y[0])]
        except SingularDenominator as e:
            raise IntegrationFailure(f"Psi integration hit the singular line: {e}")

    t_eval = np.linspace(np.log(seed_x), np.log(x_max), node_count)

    sol = solve_ivp(
        rhs,
        (t_eval[0], t_eval[-1]),
        [float(psi_series(seed_x))],
        method="DOP853",
        t_eval=t_eval,
        rtol=1e-12,
        atol=1e-14,
    )
    if not sol.success:
        raise IntegrationFailure(f"Psi integration to x_max={x_max} failed: {sol.message}")

    nodes = np.concatenate(([0.0], np.exp(sol.t)))
    # exact endpoints, exp(log(x)) is not always x
    nodes[1] = seed_x
    nodes[-1] = x_max
    values = np.concatenate(([0.0], sol.y[0]))

    if not (np.diff(values) > 0).all():
        raise IntegrationFailure("integrated Psi is not strictly increasing")

    slope = (values[-1] - values[-2]) / (nodes[-1] - nodes[-2])
    logging.info(f"Psi table: {nodes.size} nodes, Psi(x_max)/x_max = {values[-1] / x_max}")

    return PsiTable(nodes=nodes, values=values, x_max=x_max, linear_slope=float(slope))


def psi_eval(table: PsiTable, x: float | np.ndarray) -> float | np.ndarray:
    """
    piecewise-linear Psi on [0, x_max], linear extrapolation above, 0 for x < 0
    """
    xa = np.asarray(x, dtype=float)

    v = np.interp(xa, table.nodes, table.values)
    hi = xa > table.x_max
    if hi.any():
        v = np.where(hi, table.values[-1] + table.linear_slope * (xa - table.x_max), v)
    v = np.where(xa < 0, 0.0, v)

    if np.ndim(x) == 0:
        return float(v)
    return v


_TABLES: dict[tuple[float, int, float], PsiTable] = {}


def shared_psi_table(
    x_max: float = XMAX, node_count: int = NODE_COUNT, seed_x: float = SEED_X
) -> PsiTable:
    """Psi tables are immutable, so one table per parameter set is shared within a process"""
    key = (float(x_max), int(node_count), float(seed_x))
    if key not in _TABLES:
        _TABLES[key] = build_psi_table(*key)

    return _TABLES[key]


class VolatilityModel(T.Protocol):
    def sigma_sq(
        self, gamma: float | np.ndarray, s: float | np.ndarray, tau: float
    ) -> np.ndarray:
        ...

    def clamp_count(self, gamma: float | np.ndarray, tau: float) -> int:
        ...


@dataclass(frozen=True)
class ConstantVol:
    sigma_hat: float

    def __post_init__(self):
        check_positive("sigma_hat", self.sigma_hat)

    def sigma_sq(self, gamma, s, tau) -> np.ndarray:
        return np.broadcast_to(self.sigma_hat ** 2, np.shape(gamma)).astype(float)

    def clamp_count(self, gamma, tau: float) -> int:
        return 0


@dataclass(frozen=True)
class BarlesSonerVol:
    sigma_hat: float
    a: float
    r: float
    psi_table: PsiTable = field(default_factory=shared_psi_table, repr=False, compare=False)

    def __post_init__(self):
        check_positive("sigma_hat", self.sigma_hat)
        check_positive("a", self.a, strict=False)
        check_positive("r", self.r)

    def argument(self, gamma, tau: float) -> np.ndarray:
        return self.a ** 2 * np.exp(self.r * tau) * np.asarray(gamma, dtype=float)

    def sigma_sq(self, gamma, s, tau) -> np.ndarray:
        if self.a == 0:
            return np.broadcast_to(self.sigma_hat ** 2, np.shape(gamma)).astype(float)

        return self.sigma_hat ** 2 * (1.0 + psi_eval(self.psi_table, self.argument(gamma, tau)))

    def clamp_count(self, gamma, tau: float) -> int:
        """number of negative Psi arguments, which psi_eval clamps to Psi = 0"""
        if self.a == 0:
            return 0
        return int(np.count_nonzero(self.argument(gamma, tau) < 0))


def sigma_sq(model: VolatilityModel, gamma, s, tau: float) -> float | np.ndarray:
    """
    sigma^2(gamma, S, tau) of the given model, scalar in, scalar out
    """
    if np.any(np.asarray(s) <= 0):
        raise ValueError("asset price S must be > 0")
    if tau < 0:
        raise ValueError("tau must be >= 0")

    v = model.sigma_sq(gamma, s, tau)
    if np.ndim(gamma) == 0 and np.ndim(s) == 0:
        return float(v)
    return v


def make_model(
    kind: str,
    sigma_hat: float,
    a: float = 0.0,
    r: float = None,
    *,
    psi_xmax: float = XMAX,
    psi_nodes: int = NODE_COUNT,
) -> VolatilityModel:
    kind = kind.lower().replace("-", "_")
    if kind == "constant":
        return ConstantVol(sigma_hat)
    elif kind == "barles_soner":
        if r is None:
            raise ValueError("Barles-Soner volatility needs the riskless rate r")
        table = shared_psi_table(psi_xmax, psi_nodes)
        return BarlesSonerVol(sigma_hat, a, r, table)

    raise ValueError(f"unknown volatility model {kind}")
