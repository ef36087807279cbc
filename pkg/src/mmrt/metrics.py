"""Accuracy and speed evaluation of tracing campaigns.

A campaign is one full trace of a trajectory at a fixed (max order,
threshold) setting. Accuracy is the normalized RMS error of the SNR time
series against a baseline campaign, NRMSE = RMSE / std(baseline), computed
in dB over the timesteps where both series are finite. Speed is compared
through the total campaign time T_RT + n_runs * T_NS, where the trace time
is paid once and the network-simulation time once per run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tracer import TraceConfig


@dataclass(eq=False)
class CampaignReport:
    """SNR series, MPC counts, and stage timings of one campaign."""

    config: TraceConfig
    snr_db: np.ndarray
    mpc_counts: np.ndarray
    t_rt_s: float
    t_ns_s: float

    def __post_init__(self):
        self.snr_db = np.asarray(self.snr_db, dtype=float)
        self.mpc_counts = np.asarray(self.mpc_counts, dtype=int)
        if len(self.snr_db) != len(self.mpc_counts):
            raise ValueError("SNR series and MPC counts must cover the same timesteps")

    @property
    def key(self) -> tuple[int, float]:
        return (self.config.max_reflection_order, self.config.relative_threshold_db)


@dataclass(frozen=True)
class ComparisonReport:
    nrmse: float
    speedup: float
    n_runs: int
    outage_mismatch_count: int


def nrmse(baseline, test) -> float:
    """RMS error between the two series normalized by the baseline spread.

    Computed over timesteps where both values are finite, with the
    population standard deviation of the baseline on that same support.
    """
    g = np.asarray(baseline, dtype=float)
    g_hat = np.asarray(test, dtype=float)
    if g.shape != g_hat.shape:
        raise ValueError(f"series length mismatch: {g.shape} vs {g_hat.shape}")
    both = np.isfinite(g) & np.isfinite(g_hat)
    if not both.any():
        raise ValueError("no timestep has finite values in both series")
    g, g_hat = g[both], g_hat[both]
    sigma = float(np.std(g))
    if sigma == 0.0:
        raise ValueError("degenerate baseline: zero standard deviation")
    return float(np.sqrt(np.mean((g - g_hat) ** 2)) / sigma)


def outage_mismatch_count(baseline, test) -> int:
    """Timesteps where exactly one of the two series is in outage."""
    b = np.isneginf(np.asarray(baseline, dtype=float))
    t = np.isneginf(np.asarray(test, dtype=float))
    return int(np.sum(b ^ t))


@dataclass(frozen=True)
class SnrCdf:
    """Empirical CDF of the finite samples plus the outage probability.

    probabilities are fractions of ALL samples, so the final CDF value plus
    the outage probability is 1.
    """

    values_db: np.ndarray
    probabilities: np.ndarray
    outage_probability: float


def snr_cdf(series) -> SnrCdf:
    s = np.asarray(series, dtype=float)
    if s.size == 0:
        raise ValueError("empty SNR series")
    finite = s[np.isfinite(s)]
    outage = 1.0 - finite.size / s.size
    if finite.size == 0:
        return SnrCdf(np.empty(0), np.empty(0), outage)
    values, counts = np.unique(finite, return_counts=True)
    probs = np.cumsum(counts) / s.size
    return SnrCdf(values, probs, outage)


def campaign_speedup(baseline: CampaignReport, test: CampaignReport, n_runs: int) -> float:
    """Ratio of total campaign times T_RT + n_runs * T_NS, baseline over test."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    for r in (baseline, test):
        if r.t_rt_s <= 0.0 or r.t_ns_s <= 0.0:
            raise ValueError("campaign times must be positive")
    total_base = baseline.t_rt_s + n_runs * baseline.t_ns_s
    total_test = test.t_rt_s + n_runs * test.t_ns_s
    return total_base / total_test


def compare_campaigns(baseline: CampaignReport, test: CampaignReport,
                      n_runs: int) -> ComparisonReport:
    return ComparisonReport(
        nrmse=nrmse(baseline.snr_db, test.snr_db),
        speedup=campaign_speedup(baseline, test, n_runs),
        n_runs=n_runs,
        outage_mismatch_count=outage_mismatch_count(baseline.snr_db, test.snr_db),
    )


@dataclass(frozen=True)
class TradeoffRow:
    eta_max: int
    gamma_th_db: float
    nrmse: float
    speedup: float
    outage_mismatch_count: int


def tradeoff_table(reports: list[CampaignReport], baseline_key: tuple[int, float],
                   n_runs: int) -> list[TradeoffRow]:
    """One row per campaign: accuracy vs speed relative to the baseline.

    The baseline row comes out as (nrmse 0, speedup 1). Rows are sorted by
    (max order, threshold).
    """
    baseline = next((r for r in reports if r.key == baseline_key), None)
    if baseline is None:
        raise ValueError(f"baseline {baseline_key} not among the reports")
    rows = []
    for r in reports:
        cmp = compare_campaigns(baseline, r, n_runs)
        rows.append(TradeoffRow(r.key[0], r.key[1], cmp.nrmse, cmp.speedup,
                                cmp.outage_mismatch_count))
    rows.sort(key=lambda row: (row.eta_max, row.gamma_th_db))
    return rows
