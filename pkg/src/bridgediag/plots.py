"""Optional figure rendering for the report paths.

Figures are a convenience layered on top of the delimited outputs; nothing in
the estimation contract depends on them.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_calibration_figure(rows, summary: dict, path) -> None:
    """Two panels: self-reported MCSE against the repeated-run spread, and the
    per-run tail diagnostics with their decision thresholds."""
    mcse = np.array([r.mcse_log for r in rows])
    khat_num = np.array([r.khat_num for r in rows])
    khat_den = np.array([r.khat_den for r in rows])
    sd = summary["empirical_sd_log_ml"]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(mcse, marker=".", linestyle="none", color="tab:red", label="per-run MCSE(log)")
    ax1.axhline(sd, color="tab:blue", label=f"repeated-run SD = {sd:.3g}")
    ax1.axhline(summary["mean_mcse_log"], color="tab:red", linestyle="--",
                label=f"mean MCSE = {summary['mean_mcse_log']:.3g}")
    ax1.set_xlabel("repeat")
    ax1.set_ylabel("log-scale error estimate")
    ax1.legend(fontsize=8)

    ax2.plot(khat_num, marker=".", linestyle="none", color="tab:orange", label="numerator khat")
    ax2.plot(khat_den, marker=".", linestyle="none", color="tab:blue", label="denominator khat")
    ax2.axhline(0.5, color="gray", linestyle="--", linewidth=1)
    ax2.axhline(0.7, color="gray", linestyle=":", linewidth=1)
    ax2.set_xlabel("repeat")
    ax2.set_ylabel("khat")
    ax2.legend(fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_reshuffle_figure(report, path) -> None:
    """Histogram of the replicate estimates with their spread annotated."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(report.estimates, bins=max(10, report.estimates.size // 5),
            color="tab:green", alpha=0.8)
    ax.axvline(float(np.mean(report.estimates)), color="black", linewidth=1)
    ax.set_xlabel("replicate log marginal likelihood")
    ax.set_ylabel("count")
    ax.set_title(f"block reshuffle: sd_log = {report.sd_log:.4g} "
                 f"(R = {report.replicates}, block = {report.block_len})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
