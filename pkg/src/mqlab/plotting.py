"""Matplotlib figure helpers for sweep reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

RC = {
    "figure.figsize": (5.2, 3.4),
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}


def rate_figure(table, fit, path, title=None, expected_slope=None):
    """Log-log risk-vs-budget plot: median with IQR band plus the fitted line.

    `table` holds (n, q25, q50, q75) rows; zero quantiles are clipped to the
    smallest positive value so the log axes stay finite.
    """
    ns = np.array([row[0] for row in table], dtype=float)
    q25 = np.array([row[1] for row in table])
    q50 = np.array([row[2] for row in table])
    q75 = np.array([row[3] for row in table])
    positive = q50[q50 > 0]
    floor = positive.min() * 0.1 if positive.size else 1e-12
    q25, q50, q75 = (np.maximum(q, floor) for q in (q25, q50, q75))
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.fill_between(ns, q25, q75, alpha=0.25, lw=0, label="IQR over seeds")
        ax.loglog(ns, q50, "o-", ms=4, label="median risk")
        if fit is not None:
            line = np.exp(fit.intercept + fit.slope * np.log(ns))
            ax.loglog(ns, line, "--", lw=1,
                      label=f"fit slope {fit.slope:.2f} [{fit.slope_lo:.2f}, {fit.slope_hi:.2f}]")
        if expected_slope is not None:
            ref = q50[0] * (ns / ns[0]) ** expected_slope
            ax.loglog(ns, ref, ":", lw=1, label=f"reference slope {expected_slope:.2f}")
        ax.set_xlabel("label budget n")
        ax.set_ylabel("excess risk")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.savefig(path)
        plt.close(fig)
    return path
