"""
American call free boundary problem on the fixed domain x = ln(rho(tau) / S), tau = T - t

Pi(x, tau) = V - S dV/dS satisfies Pi(0, tau) = -E, Pi(inf, tau) = 0 and
Pi(x, 0) = -E for x < ln(r/q), 0 otherwise, with rho(0) = r E / q.
"""

from __future__ import annotations
from dataclasses import dataclass, field

import numpy as np

from .common import InvalidParams, OutOfRange, check_positive, check_count, as_vector


@dataclass(frozen=True)
class MarketParams:
    """
    E: exercise price
    T: maturity [years]
    r: riskless rate [1/year]
    q: dividend yield [1/year], 0 < q <= r
    """

    E: float = 10.0
    T: float = 1.0
    r: float = 0.1
    q: float = 0.05

    def __post_init__(self):
        check_positive("E", self.E)
        check_positive("T", self.T)
        check_positive("r", self.r)
        if not np.isfinite(self.q) or self.q <= 0:
            raise InvalidParams(f"dividend yield q must be > 0, got {self.q}")
        if self.q > self.r:
            raise InvalidParams(f"need q <= r, got q={self.q} r={self.r}")

    @property
    def rho0(self) -> float:
        return self.r * self.E / self.q


@dataclass(frozen=True)
class GridSpec:
    """x_i = i h, i = 0..n on [0, L];  tau_j = j k, j = 0..m on [0, T]"""

    L: float = 3.0
    n: int = 200
    m: int = 2000

    def __post_init__(self):
        check_positive("L", self.L)
        object.__setattr__(self, "n", check_count("n", self.n, 2))
        object.__setattr__(self, "m", check_count("m", self.m, 1))

    @property
    def h(self) -> float:
        return self.L / self.n

    def k(self, T: float) -> float:
        return T / self.m

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h

    def taus(self, T: float) -> np.ndarray:
        return np.arange(self.m + 1) * T / self.m


@dataclass(frozen=True, eq=False)
class TransformedState:
    pi: np.ndarray
    rho: float
    tau: float = 0.0
    L: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, "pi", as_vector(self.pi, "pi", 3))
        if not np.isfinite(self.rho) or self.rho <= 0:
            raise InvalidParams(f"free boundary position must be > 0, got {self.rho}")

    @property
    def h(self) -> float:
        return self.L / (self.pi.size - 1)

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.pi.size) * self.h


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """rhos[j] = rho(taus[j]) = S_f(T - taus[j])"""

    taus: np.ndarray
    rhos: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.taus.shape != self.rhos.shape:
            raise ValueError("taus and rhos must have the same shape")

    def __len__(self) -> int:
        return self.taus.size

    def exercise_boundary(self, T: float) -> tuple[np.ndarray, np.ndarray]:
        """boundary in calendar time t = T - tau, t increasing"""
        return (T - self.taus)[::-1], self.rhos[::-1]


def initial_state(params: MarketParams, grid: GridSpec) -> TransformedState:
    x = grid.x
    pi = np.where(x < np.log(params.r / params.q), -params.E, 0.0)
    pi[0] = -params.E
    pi[-1] = 0.0

    return TransformedState(pi=pi, rho=params.rho0, tau=0.0, L=grid.L)


def x_to_s(x: float | np.ndarray, rho: float) -> float | np.ndarray:
    """S = rho exp(-x)"""
    if rho <= 0:
        raise ValueError(f"rho must be > 0, got {rho}")
    return rho * np.exp(-x)


def _cumulative_trapezoid(y: np.ndarray, h: float) -> np.ndarray:
    c = np.zeros_like(y)
    c[1:] = np.cumsum(0.5 * h * (y[1:] + y[:-1]))
    return c


def price_profile(
    state: TransformedState, params: MarketParams, s: float | np.ndarray
) -> np.ndarray:
    """
    option price V(S) recovered from Pi

    V(s) = s [(rho - E) / rho + (1/rho) int_0^{x_s} Pi(x) exp(x) dx],  x_s = ln(rho / s)

    which follows from d(V/S)/dS = -Pi / S^2 and V(rho) = rho - E.
    Points with s > rho are in the exercise region and get s - E.

    On the grid the integral over [0, L] misses E - rho by a discretization defect, which
    drives the formula slightly below 0 far out of the money. The result is floored at 0;
    above the floor it is nondecreasing and convex in s when Pi is nonpositive and
    nondecreasing in x.

    Parameters
    ----------

    state: TransformedState
    params: MarketParams
    s: float or numpy.ndarray
        asset prices > 0
    """
    sa = np.atleast_1d(np.asarray(s, dtype=float))
    if (sa <= 0).any():
        raise OutOfRange("asset price must be > 0")

    pi = state.pi
    n = pi.size - 1
    h = state.h
    x = state.x
    rho = state.rho

    F = _cumulative_trapezoid(pi * np.exp(x), h)

    v = sa - params.E
    held = sa <= rho
    xs = np.log(rho / sa[held])
    # last full cell plus the partial cell up to x_s, Pi = 0 beyond L
    xs = np.minimum(xs, x[-1])
    i = np.minimum((xs / h).astype(int), n - 1)
    frac = xs - x[i]
    pi_s = pi[i] + (pi[i + 1] - pi[i]) * frac / h
    Q = F[i] + 0.5 * frac * (pi[i] * np.exp(x[i]) + pi_s * np.exp(xs))

    v[held] = np.maximum(sa[held] * ((rho - params.E) / rho + Q / rho), 0.0)

    return v


def price_from_pi(state: TransformedState, params: MarketParams, s: float) -> float:
    """
    option price at a single asset level 0 < s <= rho

    Raises
    ------
    OutOfRange
        s > rho is the exercise region, the price there is s - E
    """
    if s <= 0 or s > state.rho:
        raise OutOfRange(f"asset price {s} outside (0, rho={state.rho}]")

    return float(price_profile(state, params, s)[0])
