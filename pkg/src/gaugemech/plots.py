"""Figure rendering for the report path (opt-in; CSV stays the contract)."""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def plot_trajectory(times, states, path, title="trajectory"):
    """Phase portrait of the first two coordinates plus per-coordinate traces."""
    plt = _pyplot()
    states = np.asarray(states)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.6))
    if states.shape[1] >= 2:
        axes[0].plot(states[:, 0], states[:, 1], lw=0.8)
        axes[0].set_xlabel("z1")
        axes[0].set_ylabel("z2")
    axes[0].set_title(title)
    for i in range(min(states.shape[1], 6)):
        axes[1].plot(times, states[:, i], lw=0.8, label=f"z{i + 1}")
    axes[1].set_xlabel("t")
    axes[1].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_energy(times, energy, path, title="energy drift"):
    plt = _pyplot()
    energy = np.asarray(energy)
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    ax.plot(times, energy - energy[0], lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("H(t) - H(0)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_deviation(times, deviation, path, title="trajectory deviation"):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    dev = np.maximum(np.asarray(deviation), 1e-18)
    ax.semilogy(times, dev, lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("sup-norm deviation")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
