"""
SVG comparison of boundary curves rho(tau) from boundary.csv files.

Examples:

python -m frontfix.plot --out fig.svg bs/boundary.csv barles/boundary.csv
python -m frontfix.plot --out fig.svg bs/boundary.csv barles/boundary.csv --show
"""

import argparse
import sys

import frontfix.plots as ffp

p = argparse.ArgumentParser(description="plot early exercise boundaries")
p.add_argument("files", help="boundary.csv files", nargs="*")
p.add_argument("-o", "--out", help="SVG file to write", required=True)
p.add_argument("--show", help="also display with matplotlib", action="store_true")
P = p.parse_args()

try:
    ffp.render_plot(P.files, P.out)
except ValueError as e:
    print(f"plot error: {e}", file=sys.stderr)
    sys.exit(2)
except OSError as e:
    print(f"I/O error: {e}", file=sys.stderr)
    sys.exit(4)

if P.show:
    from matplotlib.pyplot import show

    ffp.boundary_curves(P.files)
    show()
