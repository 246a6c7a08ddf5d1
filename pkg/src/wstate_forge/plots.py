"""Figure rendering for the CLI report paths.

Each helper writes one PNG next to the delimited data file it illustrates.
The data files remain the normative outputs; figures are a convenience.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "population_figure",
    "sweep_figure",
    "robustness_figure",
    "scaling_figure",
]


def population_figure(trace, path: str, tau_ns: float | None = None):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for i in range(trace.n_sites):
        ax.plot(trace.times, trace.site_populations[:, i], label=f"site {i}")
    if np.any(trace.vacuum > 1e-12):
        ax.plot(trace.times, trace.vacuum, "k--", label="vacuum")
    if tau_ns is not None:
        ax.axvline(tau_ns, color="grey", lw=0.8)
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("population")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def sweep_figure(phases, times, populations, path: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    mesh = ax.pcolormesh(times, phases, populations, shading="auto", vmin=0.0, vmax=1.0)
    fig.colorbar(mesh, ax=ax, label="target population")
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("coupling phase (rad)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def robustness_figure(report, path: str):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.hist(report.delocalizations, bins=40, color="tab:blue", alpha=0.8)
    ax.axvline(report.mean_delocalization, color="k", lw=1.0)
    ax.set_xlabel("delocalization at synthesis time")
    ax.set_ylabel("samples")
    ax.set_title(f"sigma = {report.sigma_rel:g} J_max, S = {report.samples}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def scaling_figure(rows, path: str):
    """rows: list of dicts with size, single_step_tau_ns, circuit_time_ns."""
    sizes = [r["size"] for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(sizes, [r["single_step_tau_ns"] for r in rows], "o-", label="single step")
    ax.plot(sizes, [r["circuit_time_ns"] for r in rows], "s--", label="circuit bound")
    ax.set_xlabel("chain size")
    ax.set_ylabel("time (ns)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
