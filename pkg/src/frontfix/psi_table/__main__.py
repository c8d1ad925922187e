"""
Dump the Barles-Soner Psi function table as CSV (columns x, psi).

Example:

python -m frontfix.psi_table --xmax 1e4 --out psi.csv
"""

import argparse
import sys

import frontfix as ff
from frontfix.common import IntegrationFailure, InvalidParams

p = argparse.ArgumentParser(description="tabulate Psi of the Barles-Soner volatility")
p.add_argument("--xmax", help="largest tabulated argument", type=float, default=1e4)
p.add_argument("--nodes", help="number of log-spaced nodes", type=int, default=4000)
p.add_argument("--seed", help="integration start point", type=float, default=1e-8)
p.add_argument("-o", "--out", help="CSV file to write", required=True)
P = p.parse_args()

try:
    table = ff.build_psi_table(P.xmax, P.nodes, P.seed)
except (InvalidParams, ValueError) as e:
    print(f"configuration error: {e}", file=sys.stderr)
    sys.exit(2)
except IntegrationFailure as e:
    print(f"integration error: {e}", file=sys.stderr)
    sys.exit(3)

try:
    ff.write_psi_table(P.out, table.nodes, table.values)
except OSError as e:
    print(f"I/O error: {e}", file=sys.stderr)
    sys.exit(4)

print(f"Psi(x_max) / x_max = {table.values[-1] / table.x_max}")
