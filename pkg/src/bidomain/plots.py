"""SVG plot emitters for run artifacts (headless matplotlib)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_residual_history", "plot_energy_vs_bound", "plot_probe_traces"]

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}  # no timestamp, rerun-stable


def plot_residual_history(path, residuals) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.semilogy(np.arange(1, len(residuals) + 1), residuals, marker=".")
    ax.set_xlabel("iteration")
    ax.set_ylabel("weighted residual")
    ax.set_title("period-map fixed point residual")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_energy_vs_bound(path, times, energies, bounds) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(times, energies, label="energy")
    ax.plot(times, bounds, "--", label="envelope")
    ax.set_xlabel("t")
    ax.set_ylabel("r|u|^2 + |w|^2")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_probe_traces(path, times, traces, labels) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for trace, label in zip(traces, labels):
        ax.plot(times, trace, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel("u at probe nodes")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
