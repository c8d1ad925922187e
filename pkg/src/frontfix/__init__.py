from .base import solve, run_solve, run_validate, sweep
from .config import RunConfig, load_config, parse_config
from .model import MarketParams, GridSpec, TransformedState, BoundaryCurve
from .model import initial_state, price_profile, price_from_pi
from .scheme import IterationConfig, StepDiagnostics, TridiagonalSystem
from .scheme import solve_boundary, time_step, solve_tridiagonal, constraint_defect
from .volatility import ConstantVol, BarlesSonerVol, PsiTable, build_psi_table, psi_eval
from .oracle import BinomialSpec, binomial_price, binomial_boundary
from .fileio import read_boundary, write_psi_table
