"""Optional matplotlib rendering for the CLI report paths.

Figures are written next to the delimited output; nothing here is imported
unless plotting is requested.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_mise_curve(path, h_grid, values, h_min, label):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(h_grid, values, lw=1.5)
    ax.axvline(h_min, color="crimson", ls="--", lw=1.0,
               label=f"minimum at h = {h_min:.4g}")
    ax.set_xscale("log")
    ax.set_xlabel("bandwidth h")
    ax.set_ylabel("MISE - R(f)")
    ax.set_title(label)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_method_boxes(path, per_rep, truth, truth_label, title):
    labels = list(per_rep)
    data = [[v for v in per_rep[k] if v is not None] for k in labels]
    fig, ax = plt.subplots(figsize=(max(7.0, 1.4 * len(labels)), 4.5))
    ax.boxplot(data, tick_labels=labels)
    ax.axhline(truth, color="crimson", ls="--", lw=1.0,
               label=f"{truth_label} = {truth:.4g}")
    ax.set_ylabel("estimate")
    ax.set_title(title)
    ax.tick_params(axis="x", rotation=20)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
