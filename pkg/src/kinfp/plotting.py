"""Figures written next to the CSV/JSON output of a run.

Rendering uses the Agg backend and drops the PNG software/date metadata so
repeated runs give identical files.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_META = {"Software": None}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return path


def plot_field(path, x, v, values, title="f(x, v)"):
    fig, ax = plt.subplots(figsize=(6, 4))
    mesh = ax.pcolormesh(x, v, np.asarray(values).T, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("x")
    ax.set_ylabel("v")
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def plot_history(path, history, keys=("mass", "max_abs")):
    keys = [k for k in keys if history and k in history[0]]
    fig, axes = plt.subplots(len(keys), 1, figsize=(6, 2.2 * max(1, len(keys))), squeeze=False)
    t = [h["t"] for h in history]
    for ax, key in zip(axes[:, 0], keys):
        ax.plot(t, [h[key] for h in history])
        ax.set_ylabel(key)
    axes[-1, 0].set_xlabel("t")
    fig.tight_layout()
    return _save(fig, path)


def plot_special(path, tau, psi):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(tau, psi)
    ax.axhline(0.0, color="0.7", lw=0.8)
    ax.set_xlabel("tau")
    ax.set_ylabel("Psi(tau)")
    fig.tight_layout()
    return _save(fig, path)


def plot_decay(path, radii, oscillations):
    fig, ax = plt.subplots(figsize=(5, 4))
    keep = np.asarray(oscillations) > 0
    ax.loglog(np.asarray(radii)[keep], np.asarray(oscillations)[keep], "o-")
    ax.set_xlabel("r")
    ax.set_ylabel("oscillation")
    fig.tight_layout()
    return _save(fig, path)
