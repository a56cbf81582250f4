"""Figure rendering for the CLI report paths.

Every function writes a PNG next to the corresponding CSV/JSON output.
matplotlib is imported lazily with the Agg backend so that headless runs and
JSON-only commands stay light.
"""
from __future__ import annotations

import numpy as np


def _plt():
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt
    return plt


def plot_profile(path, x, u, title=None, front_level=0.5):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7.0, 3.4))
    ax.plot(x, u, lw=1.2)
    ax.axhline(0.0, color="0.6", lw=0.6)
    ax.axhline(1.0, color="0.6", lw=0.6, ls="--")
    ax.axhline(front_level, color="tab:red", lw=0.5, ls=":")
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_trajectory(path, trajectory, title=None):
    plt = _plt()
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(7.0, 5.6))
    t = trajectory.times
    axes[0].plot(t, trajectory.front_positions, lw=1.0)
    axes[0].set_ylabel("front x")
    axes[1].plot(t, trajectory.sup_norms, lw=1.0)
    axes[1].set_ylabel("sup |u|")
    axes[2].plot(t, trajectory.l2_grads, lw=1.0)
    axes[2].set_ylabel(r"$\int u'^2$")
    axes[2].set_xlabel("t")
    if title:
        axes[0].set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_kernel(path, kernel, k_hi=20.0, title=None):
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.0))
    r = min(kernel.tail_radius(1e-6), 50.0)
    z = np.linspace(-r, r, 801)
    ax1.plot(z, kernel.eval(z), lw=1.2)
    ax1.set_xlabel("z")
    ax1.set_ylabel("density")
    k = np.linspace(0.0, k_hi, 801)
    ph = np.asarray(kernel.fourier(k))
    ax2.plot(k, ph.real, lw=1.2)
    ax2.axhline(0.0, color="0.6", lw=0.6)
    ax2.set_xlabel("k")
    ax2.set_ylabel("Re transform")
    if title:
        fig.suptitle(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_dispersion(path, k, lam, k_max=None, title=None):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7.0, 3.4))
    ax.plot(k, lam, lw=1.2)
    ax.axhline(0.0, color="0.6", lw=0.6)
    if k_max is not None:
        ax.axvline(k_max, color="tab:red", lw=0.6, ls=":")
    ax.set_xlabel("k")
    ax.set_ylabel("growth rate")
    ax.set_xscale("log")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


_STATE_COLOR = {"One": "tab:green", "Zero": "tab:blue",
                "Wavetrain": "tab:red", "Undetermined": "0.5"}


def plot_sweep(path, rows, title=None):
    """Phase diagram: (mu, c) cells colored by left tail state, with the
    rapid-wave threshold curve from the per-row c_bar values."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    seen = set()
    for row in rows:
        state = row.get("left_state") or "Undetermined"
        color = _STATE_COLOR.get(state, "0.5")
        label = state if state not in seen else None
        seen.add(state)
        ax.scatter(row["mu"], row["c"], c=color, s=36, label=label, zorder=3)
    curve = sorted({(row["mu"], row["c_bar"]) for row in rows
                    if row.get("c_bar") is not None})
    if len(curve) > 1:
        mus, cbars = zip(*curve)
        ax.plot(mus, cbars, "k--", lw=1.0, label="rapid-wave threshold")
    ax.set_xlabel("mu")
    ax.set_ylabel("c")
    ax.legend(fontsize=8, loc="best")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
