"""Convergence figures for sweep reports."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_convergence_plot(path, eps_values, lam_eff_11, lam_minus, slope=2):
    """Log-log plot of |lam_eff_11 - lam_minus| against eps with a guide line
    of the expected slope, written to path (format from the suffix)."""
    eps = np.asarray(eps_values, float)
    dev = np.abs(np.asarray(lam_eff_11, float) - lam_minus)
    fig, ax = plt.subplots(figsize=(4.5, 3.4))
    ax.loglog(eps, dev, "o-", color="tab:blue", label=r"$|\lambda^{eff}_{11} - \lambda^-|$")
    guide = dev[0] * (eps / eps[0]) ** slope
    ax.loglog(eps, guide, "--", color="gray", label=f"slope {slope}")
    ax.set_xlabel(r"inclusion size $\epsilon$")
    ax.set_ylabel("deviation from matrix conductivity")
    ax.legend(frameon=False, fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
