"""
Cox-Ross-Rubinstein lattice for the American call with continuous dividend yield.

Used to check constant-volatility solves: it shares no code with the PDE scheme.
"""

from __future__ import annotations
from dataclasses import dataclass
import logging

import numpy as np

from .common import InvalidProbability, NoExerciseRegion, InvalidParams, check_positive
from .model import MarketParams

MIN_STEPS = 100
# bisection stops at this relative bracket width
BISECT_RTOL = 1e-6


@dataclass(frozen=True)
class BinomialSpec:
    steps: int
    params: MarketParams
    sigma: float

    def __post_init__(self):
        if int(self.steps) < MIN_STEPS:
            raise InvalidParams(f"lattice needs >= {MIN_STEPS} steps, got {self.steps}")
        check_positive("sigma", self.sigma)


def _lattice(spec: BinomialSpec, t: float) -> tuple[float, float, float, float]:
    P = spec.params
    if not 0 <= t < P.T:
        raise ValueError(f"t must be in [0, T={P.T}), got {t}")

    dt = (P.T - t) / int(spec.steps)
    u = np.exp(spec.sigma * np.sqrt(dt))
    d = 1.0 / u
    p = (np.exp((P.r - P.q) * dt) - d) / (u - d)
    if not 0 <= p <= 1:
        raise InvalidProbability(f"risk-neutral probability {p} outside [0, 1], step too large")

    return u, d, p, np.exp(-P.r * dt)


def _rollback(spec: BinomialSpec, s0: float, t: float) -> tuple[float, float]:
    """root continuation value and intrinsic value"""
    u, d, p, disc = _lattice(spec, t)
    N = int(spec.steps)
    E = spec.params.E

    S = s0 * u ** (2.0 * np.arange(N + 1) - N)
    V = np.maximum(S - E, 0.0)

    for i in range(N - 1, 0, -1):
        S = S[: i + 1] * u
        V = disc * (p * V[1:] + (1 - p) * V[:-1])
        np.maximum(V, S - E, out=V)

    hold = disc * (p * V[1] + (1 - p) * V[0])

    return float(hold), s0 - E


def binomial_price(spec: BinomialSpec, s0: float, t: float = 0.0) -> float:
    """
    American call price at time t by backward induction with early exercise at every node

    Parameters
    ----------

    spec: BinomialSpec
    s0: float
        asset price at time t
    t: float
        calendar time in [0, T)
    """
    check_positive("s0", s0)
    hold, intrinsic = _rollback(spec, s0, t)

    return max(hold, intrinsic)


def _exercised(spec: BinomialSpec, s: float, t: float) -> bool:
    hold, intrinsic = _rollback(spec, s, t)
    return hold <= intrinsic


def binomial_boundary(spec: BinomialSpec, t: float = 0.0, max_level: float = 1e3) -> float:
    """
    early exercise boundary S_f(t)

    Lattice levels E u^j bracket the smallest exercised asset price, galloping over j and
    bisecting on j; the bracket is then refined by bisection on the asset price.

    Raises
    ------
    NoExerciseRegion
        no exercise below max_level * E
    """
    E = spec.params.E
    u, *_ = _lattice(spec, t)

    def level(j: int) -> float:
        return E * u ** j

    # a call is never exercised at or below the strike
    lo, hi = 0, 1
    while not _exercised(spec, level(hi), t):
        lo, hi = hi, 2 * hi
        if level(lo) > max_level * E:
            raise NoExerciseRegion(f"no early exercise below {max_level * E} at t={t}")

    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _exercised(spec, level(mid), t):
            hi = mid
        else:
            lo = mid

    a, b = level(lo), level(hi)
    while b - a > BISECT_RTOL * b:
        mid = 0.5 * (a + b)
        if _exercised(spec, mid, t):
            b = mid
        else:
            a = mid

    logging.debug(f"lattice boundary t={t}: {b}")

    return b
