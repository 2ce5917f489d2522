"""Deterministic SVG figures of bodies, orbits and conics."""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .geometry import TWO_PI  # noqa: E402

STYLE = {
    "svg.hashsalt": "funklab",
    "svg.fonttype": "none",
    "font.size": 9,
    "lines.linewidth": 1.0,
    "axes.linewidth": 0.6,
}
COLORS = {"outer": "#222222", "inner": "#1f77b4", "orbit": "#d62728",
          "caustic_out": "#2ca02c", "caustic_in": "#000000", "points": "#ff7f0e"}
FIGSIZE = (5.0, 5.0)


def _outline(K, n=720):
    t = TWO_PI * np.arange(n + 1) / n
    return K.boundary(t)


def _conic_contour(ax, S, lim, color, label):
    g = np.linspace(-lim, lim, 801)
    X, Y = np.meshgrid(g, g)
    V = S[0, 0] * X * X + 2 * S[0, 1] * X * Y + S[1, 1] * Y * Y + 2 * S[0, 2] * X + 2 * S[1, 2] * Y + S[2, 2]
    ax.contour(X, Y, V, levels=[0.0], colors=[color], linewidths=0.9, linestyles="--", zorder=3)
    ax.plot([], [], color=color, ls="--", lw=0.9, label=label)


def _finish(fig) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return buf.getvalue()


def billiard_svg(orb, conics=None, title=None) -> str:
    """Inner and outer bodies, the orbit polyline and optional conics [(S, label), ...]."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        O = _outline(orb.outer)
        I = _outline(orb.inner)
        lim = 1.05 * float(np.max(np.abs(O)))
        ax.plot(O[:, 0], O[:, 1], color=COLORS["outer"], label="outer")
        ax.plot(I[:, 0], I[:, 1], color=COLORS["inner"], label="inner")
        P = orb.bounce_points()
        if orb.closed:
            P = np.vstack([P, P[:1]])
        ax.plot(P[:, 0], P[:, 1], color=COLORS["orbit"], lw=0.5, alpha=0.8, label="orbit")
        for (S, label), key in zip(conics or [], ("caustic_out", "caustic_in")):
            _conic_contour(ax, np.asarray(S), lim, COLORS[key], label)
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_aspect("equal")
        ax.legend(loc="upper right", fontsize=7, frameon=False)
        if title:
            ax.set_title(title)
        return _finish(fig)


def bodies_svg(bodies, labels, title=None) -> str:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=FIGSIZE)
        lim = 0.0
        for K, lab in zip(bodies, labels):
            B = _outline(K)
            lim = max(lim, float(np.max(np.abs(B))))
            ax.plot(B[:, 0], B[:, 1], label=lab)
        lim *= 1.05
        ax.set_xlim(-lim, lim)
        ax.set_ylim(-lim, lim)
        ax.set_aspect("equal")
        ax.legend(loc="upper right", fontsize=7, frameon=False)
        if title:
            ax.set_title(title)
        return _finish(fig)


def series_svg(x, ys, labels, xlabel, ylabel, title=None) -> str:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        for y, lab in zip(ys, labels):
            ax.plot(x, y, marker="o", ms=3, label=lab)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend(frameon=False)
        if title:
            ax.set_title(title)
        return _finish(fig)
