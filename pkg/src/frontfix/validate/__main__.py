"""
Check a constant-volatility solve against the binomial lattice boundary.

Writes validation.csv (tau, rho_pde, rho_binomial, rel_error) to the output directory and
prints the largest relative error over tau in [0.05 T, T].

Examples:

python -m frontfix.validate --config desk.ini --lattice-steps 5000
python -m frontfix.validate --config desk.ini --lattice-steps 5000 --tol 0.01

exit codes: 0 within tolerance, 2 configuration (including a > 0 or a missing file),
3 solver failure, 4 I/O, 5 outside tolerance
"""

import argparse
import logging
from pathlib import Path
import sys

import frontfix as ff
from frontfix.common import ConfigError, InvalidParams, NonConvergence, NonpositiveRho
from frontfix.common import IntegrationFailure, NotDiagonallyDominant

p = argparse.ArgumentParser(description="validate the PDE boundary with a CRR lattice")
p.add_argument("--config", help="configuration file", required=True)
p.add_argument("--lattice-steps", help="binomial tree depth", type=int, default=5000)
p.add_argument("--tol", help="relative error tolerance", type=float)
p.add_argument("-o", "--out", help="output directory")
p.add_argument("-v", "--verbose", action="store_true")
P = p.parse_args()

if P.verbose:
    logging.basicConfig(level=logging.INFO)

if not Path(P.config).expanduser().is_file():
    print(f"configuration error: no such file {P.config}", file=sys.stderr)
    sys.exit(2)

try:
    table, err, ok = ff.run_validate(P.config, P.lattice_steps, P.tol, P.out, verbose=P.verbose)
except (ConfigError, InvalidParams) as e:
    print(f"configuration error: {e}", file=sys.stderr)
    sys.exit(2)
except (NonConvergence, NonpositiveRho, NotDiagonallyDominant, IntegrationFailure) as e:
    print(f"solver error: {e}", file=sys.stderr)
    sys.exit(3)
except OSError as e:
    print(f"I/O error: {e}", file=sys.stderr)
    sys.exit(4)

print(f"max relative error {err:.6g} over {len(table)} levels")
if not ok:
    sys.exit(5)
