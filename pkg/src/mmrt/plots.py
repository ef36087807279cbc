"""Figure rendering for campaign reports.

Figures are written next to the delimited report tables so a comparison run
leaves both machine-readable and eyeball-ready output. Rendering is
headless (Agg backend).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import snr_cdf
from .traceio import fmt_gamma


def _label(eta_max: int, gamma_db: float) -> str:
    return f"eta_max={eta_max}, gamma_th={fmt_gamma(gamma_db)} dB"


def save_tradeoff_figure(rows, path: str | Path) -> Path:
    """Scatter of speedup against SNR NRMSE, one marker per configuration."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    etas = sorted({r.eta_max for r in rows})
    cmap = plt.get_cmap("tab10")
    markers = ["o", "s", "v", "D", "^", "P", "*", "X"]
    gammas = sorted({r.gamma_th_db for r in rows})
    for r in rows:
        ax.scatter(r.nrmse, r.speedup,
                   color=cmap(etas.index(r.eta_max) % 10),
                   marker=markers[gammas.index(r.gamma_th_db) % len(markers)],
                   s=45, zorder=3)
    for e in etas:
        ax.scatter([], [], color=cmap(etas.index(e) % 10), marker="o",
                   label=f"eta_max={e}")
    for g in gammas:
        ax.scatter([], [], color="black", marker=markers[gammas.index(g) % len(markers)],
                   label=f"gamma_th={fmt_gamma(g)} dB")
    ax.set_xlabel("SNR NRMSE")
    ax.set_ylabel("Speedup")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_snr_timeseries_figure(reports, path: str | Path) -> Path:
    """SNR over time for every campaign; outages appear as gaps."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for r in reports:
        snr = np.array(r.snr_db, dtype=float)
        snr[~np.isfinite(snr)] = np.nan
        t = np.arange(len(snr))
        ax.plot(t, snr, linewidth=0.8, label=_label(*r.key))
    ax.set_xlabel("Timestep")
    ax.set_ylabel("SNR [dB]")
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_snr_cdf_figure(reports, path: str | Path) -> Path:
    """Empirical SNR CDFs; curves stop short of 1 when outages occurred."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for r in reports:
        cdf = snr_cdf(r.snr_db)
        if cdf.values_db.size:
            ax.step(cdf.values_db, cdf.probabilities, where="post",
                    linewidth=0.9, label=_label(*r.key))
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("Empirical CDF")
    ax.set_ylim(0.0, 1.02)
    ax.grid(True, alpha=0.4)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
