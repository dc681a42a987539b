"""Figures for the report path.  Everything renders off-screen to files."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from dform.forms import DecomposableForm, evaluate  # noqa: E402

WIDTH = 6.4


def _finish(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_asymptotics(exp, path, title: str = "") -> Path:
    """Counts against the main term, and the residual envelope against the predicted exponent."""
    ms = np.array([float(r["m"]) for r in exp.rows])
    counts = np.array([r["count"] for r in exp.rows], dtype=float)
    main = np.array([r["main"] for r in exp.rows])
    env = np.maximum.accumulate(np.abs(counts - main))

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(WIDTH, WIDTH * 1.1), sharex=True)
    ax1.loglog(ms, counts, "o", label="N(m)")
    ax1.loglog(ms, main, "-", label="m^(n/d) V")
    ax1.set_ylabel("count")
    ax1.legend(frameon=False)
    if title:
        ax1.set_title(title)

    keep = env > 0
    ax2.loglog(ms[keep], env[keep], "s", label="running max |residual|")
    if keep.sum() >= 2:
        x0, y0 = ms[keep][0], env[keep][0]
        ax2.loglog(ms, y0 * (ms / x0) ** exp.fitted_exponent, "--",
                   label="fit, slope %.3f" % exp.fitted_exponent)
        ax2.loglog(ms, y0 * (ms / x0) ** (exp.predicted_exponent + exp.slack), ":",
                   label="allowed, slope %.3f" % (exp.predicted_exponent + exp.slack))
    ax2.set_xlabel("m")
    ax2.set_ylabel("residual")
    ax2.legend(frameon=False, fontsize=8)
    return _finish(fig, path)


def plot_sphere_profile(F: DecomposableForm, path, samples: int = 4000) -> Path:
    """Radial integrand ``|F(cos t, sin t)|^{-2/d}`` of a binary form over half a turn."""
    if F.n != 2:
        raise ValueError("profile plots are for binary forms")
    t = np.linspace(0.0, math.pi, samples, endpoint=False) + math.pi / (2 * samples)
    X = np.stack([np.cos(t), np.sin(t)], axis=1)
    with np.errstate(divide="ignore"):
        f = np.abs(evaluate(F, X)) ** (-2.0 / F.d)
    fig, ax = plt.subplots(figsize=(WIDTH, WIDTH * 0.55))
    ax.semilogy(t, f, lw=1)
    for L in F.factors:
        if np.all(L.imag == 0):
            ax.axvline(math.atan2(-L.real[0], L.real[1]) % math.pi, color="0.6", lw=0.8, ls=":")
    ax.set_xlim(0, math.pi)
    ax.set_xlabel("angle t")
    ax.set_ylabel("|F(cos t, sin t)|^(-2/d)")
    return _finish(fig, path)


def plot_margins(reports, path) -> Path:
    """Horizontal bars of check margins; skipped checks are omitted."""
    rows = [r for r in reports if not r.skipped]
    labels = ["%s %s" % (r.check_id, r.details.get("name", "")) for r in rows]
    vals = np.array([r.margin for r in rows], dtype=float)
    shown = np.clip(vals, -1.0, 10.0)
    fig, ax = plt.subplots(figsize=(WIDTH, 0.28 * len(rows) + 1.2))
    colors = ["tab:blue" if r.passed else "tab:red" for r in rows]
    ax.barh(np.arange(len(rows)), shown, color=colors)
    ax.set_yticks(np.arange(len(rows)))
    ax.set_yticklabels(labels, fontsize=7)
    ax.axvline(0.0, color="k", lw=0.8)
    ax.set_xlabel("margin (clipped to [-1, 10])")
    ax.invert_yaxis()
    return _finish(fig, path)
