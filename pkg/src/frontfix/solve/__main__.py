"""
Solve the American call free boundary problem of one or more configuration files.

Writes boundary.csv, diagnostics.json and pi_snapshot_<tau>.csv to the output directory.

Examples:

python -m frontfix.solve --config barles.ini
python -m frontfix.solve --config desk.ini --out ~/data/desk
python -m frontfix.solve --config bs.ini barles.ini -j 2

exit codes: 0 success, 2 configuration (including a missing file),
3 solver failure (non-convergence under the abort policy), 4 I/O
"""

import argparse
import logging
from pathlib import Path
import sys

import frontfix as ff
from frontfix.common import ConfigError, InvalidParams, NonConvergence, NonpositiveRho
from frontfix.common import IntegrationFailure, NotDiagonallyDominant

p = argparse.ArgumentParser(description="early exercise boundary of an American call")
p.add_argument("--config", help="configuration file(s)", nargs="+", required=True)
p.add_argument("-o", "--out", help="output directory (single configuration only)")
p.add_argument("-j", "--jobs", help="concurrent solves", type=int, default=1)
p.add_argument("-v", "--verbose", action="store_true")
P = p.parse_args()

if P.verbose:
    logging.basicConfig(level=logging.INFO)

missing = [c for c in P.config if not Path(c).expanduser().is_file()]
if missing:
    print(f"configuration error: no such file {missing}", file=sys.stderr)
    sys.exit(2)

try:
    if len(P.config) == 1:
        dat = ff.run_solve(P.config[0], P.out, verbose=P.verbose)
        print(f"rho(T) = {dat.rho.values[-1]}")
    else:
        if P.out:
            raise ConfigError("--out applies to a single configuration")
        for d in ff.sweep(P.config, jobs=P.jobs, verbose=P.verbose):
            print(d)
except (ConfigError, InvalidParams) as e:
    print(f"configuration error: {e}", file=sys.stderr)
    sys.exit(2)
except (NonConvergence, NonpositiveRho, NotDiagonallyDominant, IntegrationFailure) as e:
    print(f"solver error: {e}", file=sys.stderr)
    sys.exit(3)
except OSError as e:
    print(f"I/O error: {e}", file=sys.stderr)
    sys.exit(4)
