"""
Operator splitting scheme for the transformed free boundary problem

Each time level tau_j couples three updates, repeated as micro-iterations p:

    rho^{j,p+1}       = F(Pi^{j}(rho^{j,p+1}), rho^{j,p+1}) integrated constraint
    Pi^{j-1/2,p+1}    = T(Pi^{j-1}, rho^{j,p+1})          transport along characteristics
    A(Pi^{j,p}, rho^{j,p+1}) Pi^{j,p+1} = Pi^{j-1/2,p+1}  implicit diffusion

The first line is a scalar equation in rho, solved by bracketing and Brent's method
with the other two updates inside it.
"""

from __future__ import annotations
import typing as T
from dataclasses import dataclass
import logging

import numpy as np
from scipy.linalg import solve_banded
import scipy.optimize as opt

from .common import NonConvergence, NonpositiveRho, NotDiagonallyDominant
from .common import as_vector, check_monotone
from .model import MarketParams, GridSpec, TransformedState, BoundaryCurve, initial_state
from .volatility import VolatilityModel

PIVOT_RTOL = 1e-14
POLICIES = ("warn", "abort")
# boundary equation in y = ln rho
ROOT_GTOL = 1e-13
ROOT_XTOL = 1e-13
BRACKET_STEP = 1e-4
BRACKET_MAX = 1.0


@dataclass(frozen=True, eq=False)
class TridiagonalSystem:
    """
    rows i = 1..n-1 of the diffusion step for the interior unknowns Pi_1..Pi_{n-1}

    lower[0] and upper[-1] multiply the Dirichlet values and are already folded into rhs.
    """

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        N = self.diag.size
        for name in ("lower", "upper", "rhs"):
            if getattr(self, name).shape != (N,):
                raise ValueError(f"{name} must have {N} entries like diag")

    def matvec(self, u: np.ndarray) -> np.ndarray:
        y = self.diag * u
        y[1:] += self.lower[1:] * u[:-1]
        y[:-1] += self.upper[:-1] * u[1:]
        return y


@dataclass(frozen=True)
class IterationConfig:
    tol: float = 1e-7
    p_max: int = 6
    on_nonconvergence: str = "warn"

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tol}")
        if int(self.p_max) < 1:
            raise ValueError(f"p_max must be >= 1, got {self.p_max}")
        if self.on_nonconvergence not in POLICIES:
            raise ValueError(f"on_nonconvergence must be one of {POLICIES}")


@dataclass
class StepDiagnostics:
    iterations_used: int
    final_residual: float
    gamma_clamp_count: int
    rho_change: float
    converged: bool = True
    contraction_violations: int = 0
    residuals: tuple[float, ...] = ()


# %% quadratures


def _trapezoid(f: np.ndarray, h: float) -> float:
    return float(h * (f.sum() - 0.5 * (f[0] + f[-1])))


def quad_I0(pi: np.ndarray, h: float) -> float:
    """trapezoid rule for int_0^L Pi dx, the tail beyond L contributes 0"""
    pi = as_vector(pi, "pi", 2)
    return _trapezoid(pi, h)


def forward_gamma(pi: np.ndarray, h: float) -> np.ndarray:
    """(Pi_{i+1} - Pi_i) / h at every node, 0 at the last node"""
    g = np.zeros_like(pi)
    g[:-1] = np.diff(pi) / h
    return g


def node_sigma_sq(
    model: VolatilityModel, gamma: np.ndarray, rho: float, tau: float, h: float
) -> np.ndarray:
    s = rho * np.exp(-np.arange(gamma.size) * h)
    return np.asarray(model.sigma_sq(gamma, s, tau), dtype=float)


def quad_I1(
    pi: np.ndarray,
    rho: float,
    tau: float,
    model: VolatilityModel,
    params: MarketParams,
    h: float,
) -> float:
    """trapezoid rule for int_0^L (-1/2 sigma^2 dPi/dx + r Pi) dx"""
    pi = as_vector(pi, "pi", 2)
    gamma = forward_gamma(pi, h)
    sig2 = node_sigma_sq(model, gamma, rho, tau, h)

    return _trapezoid(-0.5 * sig2 * gamma + params.r * pi, h)


# %% integrated constraint


def algebraic_update(
    pi_prev_level: np.ndarray,
    pi_iter: np.ndarray,
    rho_prev_level: float,
    rho_iter: float,
    tau: float,
    k: float,
    model: VolatilityModel,
    params: MarketParams,
    h: float,
) -> float:
    """
    rho from the integrated constraint

    E ln rho^j = E ln rho^{j-1} + I0(Pi^{j-1}) - I0(Pi^j) + k (q E - q rho^j - I1(rho^j, Pi^j))

    with Pi^j, rho^j on the right-hand side taken from the previous micro-iterate.
    """
    if rho_prev_level <= 0 or rho_iter <= 0:
        raise NonpositiveRho(f"rho must stay > 0, got {rho_prev_level}, {rho_iter}")

    E, q = params.E, params.q
    incr = quad_I0(pi_prev_level, h) - quad_I0(pi_iter, h)
    if k != 0:
        incr += k * (q * E - q * rho_iter - quad_I1(pi_iter, rho_iter, tau, model, params, h))

    with np.errstate(over="ignore", invalid="ignore"):
        rho = float(np.exp(np.log(rho_prev_level) + incr / E))

    if not np.isfinite(rho) or rho <= 0:
        raise NonpositiveRho(f"free boundary update is not finite and positive: {rho}")

    return rho


# %% convective part


def transport_step(
    pi_prev: np.ndarray,
    rho_prev: float,
    rho_new: float,
    k: float,
    grid: GridSpec,
    params: MarketParams,
) -> np.ndarray:
    """
    explicit solution of the transport equation along characteristics

    xi_i = x_i - ln rho_new + ln rho_prev - (r - q) k;
    Pi_prev(xi_i) by linear interpolation for 0 < xi_i <= L, -E for xi_i <= 0, 0 for xi_i > L
    """
    if rho_prev <= 0 or rho_new <= 0:
        raise NonpositiveRho(f"rho must stay > 0, got {rho_prev}, {rho_new}")

    x = grid.x
    xi = x - np.log(rho_new) + np.log(rho_prev) - (params.r - params.q) * k

    pi = np.interp(xi, x, pi_prev, left=-params.E, right=0.0)
    pi[xi <= 0] = -params.E
    pi[0] = -params.E

    return pi


# %% diffusive part


def assemble_diffusion(
    pi_iter: np.ndarray,
    pi_half: np.ndarray,
    rho: float,
    tau: float,
    k: float,
    model: VolatilityModel,
    params: MarketParams,
    grid: GridSpec,
) -> TridiagonalSystem:
    """
    implicit diffusion step with volatility frozen at the previous micro-iterate

    (Pi_i - Pi_half_i)/k + r Pi_i - s_i/2 (Pi_{i+1} - Pi_{i-1})/(2h)
        - (s_i (Pi_{i+1} - Pi_i) - s_{i-1} (Pi_i - Pi_{i-1})) / (2 h^2) = 0

    with s_i = sigma^2((Pi_{i+1} - Pi_i)/h, rho exp(-x_i), tau).
    """
    h = grid.h
    gamma = forward_gamma(pi_iter, h)
    sig2 = node_sigma_sq(model, gamma, rho, tau, h)

    s = sig2[1:-1]  # s_i, i = 1..n-1
    sm = sig2[:-2]  # s_{i-1}

    lower = s / (4 * h) - sm / (2 * h ** 2)
    diag = 1.0 / k + params.r + (s + sm) / (2 * h ** 2)
    upper = -s / (4 * h) - s / (2 * h ** 2)

    rhs = pi_half[1:-1] / k
    # Dirichlet Pi_0 = -E
    rhs[0] -= lower[0] * (-params.E)
    # Pi_n = 0 adds nothing to rhs[-1]

    return TridiagonalSystem(lower=lower, diag=diag, upper=upper, rhs=rhs)


def solve_tridiagonal(sys: TridiagonalSystem) -> np.ndarray:
    """
    direct solve of a diagonally dominant tridiagonal system

    The elimination pivots are checked first; for a diagonally dominant matrix the
    banded LU performs no row interchanges, so it is plain Thomas elimination.

    Raises
    ------
    NotDiagonallyDominant
        if an elimination pivot is below 1e-14 of its row scale
    """
    a, b, c = sys.lower, sys.diag, sys.upper
    N = b.size

    lo = np.concatenate(([0.0], np.abs(a[1:])))
    up = np.concatenate((np.abs(c[:-1]), [0.0]))
    scale = np.abs(b) + lo + up
    if (np.abs(b) < (lo + up) * (1 - PIVOT_RTOL)).any():
        i = int(np.argmax(lo + up - np.abs(b)))
        raise NotDiagonallyDominant(f"row {i}: |diag| {abs(b[i])} < off-diagonal {lo[i] + up[i]}")

    # diagonal dominance bounds the pivots from below by |b_i| - |a_i|
    if (np.abs(b) - lo < PIVOT_RTOL * scale).any():
        _check_pivots(a, b, c, scale)

    if N == 1:
        return sys.rhs / b

    ab = np.zeros((3, N))
    ab[0, 1:] = c[:-1]
    ab[1] = b
    ab[2, :-1] = a[1:]

    return solve_banded((1, 1), ab, sys.rhs, check_finite=False)


def _check_pivots(a: np.ndarray, b: np.ndarray, c: np.ndarray, scale: np.ndarray):
    d = b[0]
    for i in range(b.size):
        if i:
            d = b[i] - a[i] * c[i - 1] / d
        if abs(d) < PIVOT_RTOL * scale[i]:
            raise NotDiagonallyDominant(f"row {i}: elimination pivot {d} vanishes")


def diffusion_residual(sys: TridiagonalSystem, u: np.ndarray) -> np.ndarray:
    return sys.matvec(u) - sys.rhs


# %% time stepping


def _diffuse(
    state_prev: TransformedState,
    pi_iter: np.ndarray,
    rho: float,
    tau: float,
    k: float,
    model: VolatilityModel,
    params: MarketParams,
    grid: GridSpec,
) -> np.ndarray:
    """Pi^j = A^{-1} T(Pi^{j-1}, rho) with sigma^2 taken from pi_iter"""
    pi_half = transport_step(state_prev.pi, state_prev.rho, rho, k, grid, params)
    sys = assemble_diffusion(pi_iter, pi_half, rho, tau, k, model, params, grid)

    pi = np.empty_like(state_prev.pi)
    pi[0] = -params.E
    pi[-1] = 0.0
    pi[1:-1] = solve_tridiagonal(sys)

    return pi


def _boundary_root(
    state_prev: TransformedState,
    pi_iter: np.ndarray,
    rho_iter: float,
    tau: float,
    k: float,
    model: VolatilityModel,
    params: MarketParams,
    grid: GridSpec,
) -> float:
    """
    root in y = ln rho of g(y) = y - ln F(Pi(e^y), e^y), Pi(rho) from _diffuse

    g rises with slope about k q rho / E, so the bracket is searched downhill from ln rho_iter
    """
    h = grid.h

    def g(y: float) -> float:
        rho = float(np.exp(y))
        pi = _diffuse(state_prev, pi_iter, rho, tau, k, model, params, grid)
        F = algebraic_update(state_prev.pi, pi, state_prev.rho, rho, tau, k, model, params, h)
        return y - float(np.log(F))

    y0 = float(np.log(rho_iter))
    g0 = g(y0)
    if abs(g0) <= ROOT_GTOL:
        return rho_iter

    lead = -1.0 if g0 > 0 else 1.0
    for direction in (lead, -lead):
        step = BRACKET_STEP
        while step <= BRACKET_MAX:
            y1 = y0 + direction * step
            g1 = g(y1)
            if g1 == 0:
                return float(np.exp(y1))
            if np.sign(g1) != np.sign(g0):
                lo, hi = sorted((y0, y1))
                sol = opt.root_scalar(g, bracket=[lo, hi], method="brentq", xtol=ROOT_XTOL)
                if not sol.converged:
                    raise NonConvergence(f"tau={tau}: boundary root: {sol.flag}")
                return float(np.exp(sol.root))
            step *= 2

    raise NonConvergence(f"tau={tau}: boundary equation has no sign change near rho={rho_iter}")


def time_step(
    state_prev: TransformedState,
    tau_new: float,
    k: float,
    model: VolatilityModel,
    params: MarketParams,
    grid: GridSpec,
    cfg: IterationConfig = IterationConfig(),
) -> tuple[TransformedState, StepDiagnostics]:
    """
    one time level by successive iterations from Pi^{j,0} = Pi^{j-1}, rho^{j,0} = rho^{j-1}

    Iteration p freezes sigma^2 at Pi^{j,p} and solves the scalar equation

        rho = F(A^{-1} T(Pi^{j-1}, rho), rho)

    for rho^{j,p+1}. Pi^{j,p+1} is the diffusion solution at that rho.
    With constant sigma the second iteration only confirms the first.

    Raises
    ------
    NonConvergence
        residual above tolerance after p_max iterations with the "abort" policy,
        or no root of the boundary equation
    """
    E = params.E
    pi_prev = state_prev.pi
    rho_prev = state_prev.rho

    pi_p = pi_prev
    rho_p = rho_prev
    residuals: list[float] = []
    clamps = 0

    for _ in range(int(cfg.p_max)):
        rho_next = _boundary_root(state_prev, pi_p, rho_p, tau_new, k, model, params, grid)
        pi_next = _diffuse(state_prev, pi_p, rho_next, tau_new, k, model, params, grid)
        clamps += model.clamp_count(forward_gamma(pi_p, grid.h), tau_new)

        res = max(abs(rho_next - rho_p) / E, float(np.abs(pi_next - pi_p).max()) / E)
        residuals.append(res)
        pi_p, rho_p = pi_next, rho_next

        if res <= cfg.tol:
            break

    violations = sum(1 for r0, r1 in zip(residuals[1:], residuals[2:]) if r1 > r0)
    if violations:
        logging.debug(f"tau={tau_new}: residuals not contracting {residuals}")

    converged = residuals[-1] <= cfg.tol
    if not converged:
        msg = (
            f"tau={tau_new}: residual {residuals[-1]:.3e} above tolerance {cfg.tol} "
            f"after {len(residuals)} iterations"
        )
        if cfg.on_nonconvergence == "abort":
            raise NonConvergence(msg)
        logging.warning(msg)

    diag = StepDiagnostics(
        iterations_used=len(residuals),
        final_residual=residuals[-1],
        gamma_clamp_count=clamps,
        rho_change=rho_p - rho_prev,
        converged=converged,
        contraction_violations=violations,
        residuals=tuple(residuals),
    )

    return TransformedState(pi=pi_p, rho=rho_p, tau=tau_new, L=grid.L), diag


def constraint_defect(
    state: TransformedState, model: VolatilityModel, params: MarketParams
) -> float:
    """
    relative defect of the pointwise boundary condition

    |rho - (r E / q + sigma^2(g0, rho, tau) g0 / (2 q))| / rho,  g0 = (Pi_1 - Pi_0) / h
    """
    g0 = (state.pi[1] - state.pi[0]) / state.h
    sig2 = float(np.asarray(model.sigma_sq(g0, state.rho, state.tau)))
    target = params.rho0 + sig2 * g0 / (2 * params.q)

    return abs(state.rho - target) / state.rho


def solve_boundary(
    params: MarketParams,
    grid: GridSpec,
    model: VolatilityModel,
    cfg: IterationConfig = IterationConfig(),
    *,
    snapshots: T.Sequence[int] = (),
    callback: T.Callable[[int, TransformedState, StepDiagnostics], None] = None,
) -> tuple[BoundaryCurve, TransformedState, list[StepDiagnostics]]:
    """
    march tau_j, j = 1..m from the initial data

    Parameters
    ----------

    params: MarketParams
    grid: GridSpec
    model: VolatilityModel
    cfg: IterationConfig
    snapshots: sequence of int
        time level indices passed to callback (all levels if callback is given and this is empty)
    callback: callable
        called as callback(j, state, diagnostics) after level j

    Returns
    -------

    curve: BoundaryCurve
        rho at every time level
    state: TransformedState
        final level tau = T
    diagnostics: list of StepDiagnostics
        one per level j = 1..m
    """
    k = grid.k(params.T)
    taus = grid.taus(params.T)

    state = initial_state(params, grid)
    rhos = np.empty(grid.m + 1)
    rhos[0] = state.rho
    diags: list[StepDiagnostics] = []
    wanted = set(snapshots)

    if callback is not None and (not wanted or 0 in wanted):
        callback(0, state, None)

    for j in range(1, grid.m + 1):
        state, d = time_step(state, taus[j], k, model, params, grid, cfg)
        rhos[j] = state.rho
        diags.append(d)
        if callback is not None and (not wanted or j in wanted):
            callback(j, state, d)

    clamps = sum(d.gamma_clamp_count for d in diags)
    if clamps:
        logging.info(f"{clamps} negative Psi arguments clamped to 0 over {grid.m} levels")
    violations = sum(d.contraction_violations for d in diags)
    if violations:
        logging.info(f"{violations} non-contracting micro-iterations over {grid.m} levels")
    check_monotone(rhos, 0.0, "rho(tau)")

    return BoundaryCurve(taus=taus, rhos=rhos), state, diags
