from __future__ import annotations
import typing as T
from pathlib import Path
from xml.sax.saxutils import escape
import logging

import numpy as np
import pandas

from .fileio import read_boundary, write_text

try:
    from matplotlib.pyplot import figure
except ImportError as e:
    logging.info(e)
    figure = None

WIDTH = 640
HEIGHT = 420
MARGIN = {"left": 64, "right": 16, "top": 20, "bottom": 48}
PAD = 0.05
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, count: int = 5) -> np.ndarray:
    return np.linspace(lo, hi, count)


def boundary_svg(curves: T.Sequence[tuple[str, pandas.DataFrame]]) -> str:
    """
    standalone SVG of rho(tau), one polyline per curve

    The y range is padded by 5% beyond the data extremes. Output depends only on the input.
    """
    if not curves:
        raise ValueError("need at least one boundary curve")

    tau = np.concatenate([c.tau.values for _, c in curves])
    rho = np.concatenate([c.rho.values for _, c in curves])
    x0, x1 = float(tau.min()), float(tau.max())
    if x1 == x0:
        x1 = x0 + 1.0
    span = float(rho.max() - rho.min()) or abs(float(rho.max())) or 1.0
    y0 = float(rho.min()) - PAD * span
    y1 = float(rho.max()) + PAD * span

    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(t):
        return MARGIN["left"] + (np.asarray(t) - x0) / (x1 - x0) * pw

    def py(r):
        return MARGIN["top"] + (y1 - np.asarray(r)) / (y1 - y0) * ph

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    # %% axes
    for t in _ticks(x0, x1):
        X = _fmt(px(t))
        lines.append(
            f'<line x1="{X}" y1="{MARGIN["top"] + ph}" x2="{X}" y2="{MARGIN["top"] + ph + 4}" '
            'stroke="black"/>'
        )
        lines.append(
            f'<text x="{X}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{t:.3g}</text>'
        )
    for r in _ticks(y0, y1):
        Y = _fmt(py(r))
        lines.append(
            f'<line x1="{MARGIN["left"] - 4}" y1="{Y}" x2="{MARGIN["left"]}" y2="{Y}" '
            'stroke="black"/>'
        )
        lines.append(
            f'<text x="{MARGIN["left"] - 8}" y="{Y}" text-anchor="end" '
            f'dominant-baseline="middle">{r:.4g}</text>'
        )
    lines.append(
        f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 10}" text-anchor="middle">tau</text>'
    )
    lines.append(
        f'<text x="16" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2})">rho(tau)</text>'
    )
    # %% curves and legend
    for i, (name, c) in enumerate(curves):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(
            f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px(c.tau.values), py(c.rho.values))
        )
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')

        ly = MARGIN["top"] + 16 + 16 * i
        lx = MARGIN["left"] + 12
        lines.append(
            f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" '
            'stroke-width="1.5"/>'
        )
        lines.append(
            f'<text x="{lx + 30}" y="{ly}" dominant-baseline="middle">{escape(name)}</text>'
        )

    lines.append("</svg>")

    return "\n".join(lines) + "\n"


def render_plot(files: T.Sequence[Path], out: Path) -> Path:
    """
    SVG comparison of boundary.csv files, legend entries are the file paths as given

    Raises
    ------
    ValueError
        empty file list or malformed boundary file
    """
    if not files:
        raise ValueError("no boundary files given")

    curves = [(str(fn), read_boundary(fn)) for fn in files]

    return write_text(Path(out), boundary_svg(curves))


def boundary_curves(files: T.Sequence[Path]):
    """interactive matplotlib figure of the same comparison"""
    if figure is None:
        raise ImportError("pip install matplotlib")

    ax = figure().gca()
    for fn in files:
        c = read_boundary(fn)
        ax.plot(c.tau, c.rho, label=str(fn))

    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(r"$\varrho(\tau)$")
    ax.grid(True)
    ax.legend(loc="best")

    return ax
