"""Figure emission for the CLI report paths.

matplotlib is imported lazily with the Agg backend so library users who
never render pay nothing and headless runs just work.  Every function
writes one PNG next to the delimited output it illustrates.
"""

from __future__ import annotations

import math


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def plot_trajectory(traj, path) -> None:
    """Two panels: potential / worst pair value (log scale) and velocities."""
    plt = _pyplot()
    fig, (ax0, ax1) = plt.subplots(2, 1, sharex=True, figsize=(7.0, 5.6))
    eps = 1e-300
    ax0.semilogy(traj.times, traj.potential + eps, label="V_T", lw=1.4)
    ax0.semilogy(traj.times, traj.max_pair_value + eps, label="max pair value", lw=1.0)
    ax0.set_ylabel("potential")
    ax0.legend(loc="best", fontsize=8)
    ax0.grid(True, alpha=0.3)

    ax1.plot(traj.times, traj.max_velocity_norm, label="max |v|", lw=1.2)
    if not all(math.isnan(e) for e in traj.energy):
        ax1.plot(traj.times, traj.energy, label="energy", lw=1.0)
    ax1.set_xlabel("t")
    ax1.set_ylabel("velocity / energy")
    ax1.legend(loc="best", fontsize=8)
    ax1.grid(True, alpha=0.3)

    status = traj.status + ("" if traj.t_converged is None else f" at t={traj.t_converged:.3g}")
    ax0.set_title(status, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_spectrum(eigenvalues, path, title="spectrum") -> None:
    """Eigenvalues in the complex plane."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.2, 4.2))
    re = [e.real for e in eigenvalues]
    im = [e.imag for e in eigenvalues]
    ax.scatter(re, im, s=18, alpha=0.85)
    ax.axvline(0.0, color="k", lw=0.8, alpha=0.5)
    ax.axhline(0.0, color="k", lw=0.8, alpha=0.5)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title(title, fontsize=9)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_sweep(values, statuses, residuals, parameter, path) -> None:
    """Residual vs parameter with convergence outcome as marker color."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.2, 4.2))
    colors = ["tab:green" if s == "converged" else "tab:red" for s in statuses]
    ax.scatter(values, residuals, c=colors, s=26)
    ax.set_yscale("symlog", linthresh=1e-12)
    ax.set_xlabel(parameter)
    ax.set_ylabel("final residual")
    ax.grid(True, alpha=0.3)
    handles = [
        plt.Line2D([], [], marker="o", ls="", color="tab:green", label="converged"),
        plt.Line2D([], [], marker="o", ls="", color="tab:red", label="not converged"),
    ]
    ax.legend(handles=handles, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
