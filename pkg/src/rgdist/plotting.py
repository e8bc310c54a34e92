"""Figures for the CLI reports.

PNG figures go through matplotlib with the Agg backend.  The ``--svg`` option
writes a hand-rolled SVG of plain polylines, which keeps the output
byte-stable across matplotlib versions.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.linewidth": 0.8,
    "lines.linewidth": 1.2,
    "legend.frameon": False,
    "savefig.dpi": 150,
    "svg.hashsalt": "rgdist",
}

_COLORS = ["#1b6ca8", "#d1495b", "#2a9d8f", "#e9a03b", "#6d597a", "#3d405b"]


@dataclass
class Curve:
    label: str
    t: np.ndarray
    y: np.ndarray
    se: np.ndarray | None = None


def survival_figure(curves: list[Curve], path, title: str | None = None, ylabel: str = "P(H > t | H < inf)"):
    """Step plot of survival curves with 2 SE bands; saved to ``path``."""
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for k, c in enumerate(curves):
            col = _COLORS[k % len(_COLORS)]
            t = np.asarray(c.t, dtype=float)
            y = np.asarray(c.y, dtype=float)
            ax.step(t, y, where="post", color=col, label=c.label)
            if c.se is not None:
                se = np.nan_to_num(np.asarray(c.se, dtype=float))
                ax.fill_between(t, y - 2 * se, y + 2 * se, step="post", color=col, alpha=0.15, lw=0)
        ax.set_xlabel("t (hops)")
        ax.set_ylabel(ylabel)
        ax.set_ylim(-0.02, 1.02)
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right")
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return path


def line_figure(x, series: dict, path, xlabel: str, ylabel: str, logx: bool = False, logy: bool = False):
    """Markers-and-lines plot of one or more series against ``x``."""
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for k, (name, y) in enumerate(series.items()):
            ax.plot(x, y, marker="o", ms=3, color=_COLORS[k % len(_COLORS)], label=name)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if len(series) > 1:
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return path


def histogram_figure(values, path, xlabel: str, bins: int = 60):
    path = Path(path)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        ax.hist(np.asarray(values, dtype=float), bins=bins, color=_COLORS[0], alpha=0.8)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("count")
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return path


def polyline_svg(curves: list[Curve], path, width: int = 480, height: int = 320, pad: int = 40):
    """Plain SVG with one step polyline per curve; axes are ``t`` and ``[0, 1]``."""
    path = Path(path)
    t_all = np.concatenate([np.asarray(c.t, dtype=float) for c in curves]) if curves else np.zeros(1)
    t_lo, t_hi = float(t_all.min()), float(t_all.max())
    if t_hi == t_lo:
        t_hi = t_lo + 1.0

    def sx(t):
        return pad + (t - t_lo) / (t_hi - t_lo) * (width - 2 * pad)

    def sy(y):
        return height - pad - y * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<polyline points="{pad},{pad} {pad},{height - pad} {width - pad},{height - pad}" fill="none" stroke="black"/>']
    for k, c in enumerate(curves):
        pts = []
        t = np.asarray(c.t, dtype=float)
        y = np.nan_to_num(np.asarray(c.y, dtype=float))
        for i in range(t.size):
            if i:
                pts.append(f"{sx(t[i]):.2f},{sy(y[i - 1]):.2f}")
            pts.append(f"{sx(t[i]):.2f},{sy(y[i]):.2f}")
        col = _COLORS[k % len(_COLORS)]
        out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="{col}"><title>{c.label}</title></polyline>')
        out.append(f'<text x="{width - pad}" y="{pad + 14 * k}" text-anchor="end" font-size="11" fill="{col}">{c.label}</text>')
    out.append("</svg>")
    path.write_text("\n".join(out) + "\n")
    return path
