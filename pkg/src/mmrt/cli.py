"""Batch front-end: scenario generation, tracing campaigns over parameter
grids, SNR evaluation, comparison reports with figures, and timing
benchmarks.

Exit codes: 0 success, 1 usage error, 2 data error. Note that ``-inf`` must
be passed in the equals form (``--gamma-th-db=-inf``) because a bare
``-inf`` token looks like an option to the argument parser.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .channel import ArrayConfig, LinkBudget, timed_snr_series
from .metrics import CampaignReport, compare_campaigns, tradeoff_table
from .scene import (
    BUILTIN_SCENARIOS,
    FormatError,
    load_scene,
    load_trajectory,
    save_scene,
    save_trajectory,
)
from .tracer import TraceConfig, trace_trajectory
from . import traceio


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    """Effective configuration of a tracing campaign.

    ``scene`` is a builtin scenario name or a scene file path; a file path
    requires ``trajectory`` and ``tx_position`` as well. The seed is
    reserved: tracing is deterministic and never consumes it.
    """

    scene: str = "lroom"
    trajectory: str | None = None
    tx_position: tuple[float, float, float] | None = None
    eta_max_grid: tuple[int, ...] = (2,)
    gamma_th_db_grid: tuple[float, ...] = (float("-inf"),)
    baseline_eta_max: int | None = None
    baseline_gamma_th_db: float | None = None
    samples: int | None = None
    workers: int = 1
    seed: int = 0
    out_dir: str = "."
    carrier_frequency_hz: float = 60e9
    tx_power_dbm: float = 30.0
    noise_figure_db: float = 5.0
    bandwidth_hz: float = 400e6
    tx_array_rows: int = 8
    tx_array_cols: int = 8
    rx_array_rows: int = 4
    rx_array_cols: int = 4
    element_spacing_wavelengths: float = 0.5

    def validate(self) -> None:
        if not self.eta_max_grid or not self.gamma_th_db_grid:
            raise ValueError("parameter grids must be non-empty")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.samples is not None and self.samples < 1:
            raise ValueError("samples must be >= 1")
        if (self.baseline_eta_max is None) != (self.baseline_gamma_th_db is None):
            raise ValueError("baseline eta and gamma must be given together")
        if self.baseline_eta_max is not None:
            if (self.baseline_eta_max not in self.eta_max_grid
                    or self.baseline_gamma_th_db not in self.gamma_th_db_grid):
                raise ValueError("baseline configuration must lie on the parameter grid")

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = list(v)
            d[f.name] = v
        d["gamma_th_db_grid"] = [traceio.fmt_gamma(g) for g in self.gamma_th_db_grid]
        if self.baseline_gamma_th_db is not None:
            d["baseline_gamma_th_db"] = traceio.fmt_gamma(self.baseline_gamma_th_db)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "eta_max_grid" in kwargs:
            kwargs["eta_max_grid"] = tuple(int(e) for e in kwargs["eta_max_grid"])
        if "gamma_th_db_grid" in kwargs:
            kwargs["gamma_th_db_grid"] = tuple(float(g) for g in kwargs["gamma_th_db_grid"])
        if kwargs.get("baseline_gamma_th_db") is not None:
            kwargs["baseline_gamma_th_db"] = float(kwargs["baseline_gamma_th_db"])
        if kwargs.get("tx_position") is not None:
            kwargs["tx_position"] = tuple(float(x) for x in kwargs["tx_position"])
        return cls(**kwargs)

    def link_budget(self) -> LinkBudget:
        return LinkBudget(self.tx_power_dbm, self.noise_figure_db,
                          self.bandwidth_hz, self.carrier_frequency_hz)

    def arrays(self) -> tuple[ArrayConfig, ArrayConfig]:
        tx = ArrayConfig(self.tx_array_rows, self.tx_array_cols,
                         self.element_spacing_wavelengths)
        rx = ArrayConfig(self.rx_array_rows, self.rx_array_cols,
                         self.element_spacing_wavelengths)
        return tx, rx


def save_config(cfg: CampaignConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def load_config(path: str | Path) -> CampaignConfig:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{Path(path).name}: invalid JSON ({e})") from None
    return CampaignConfig.from_dict(d)


def _parse_gamma(text: str) -> float:
    try:
        g = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold {text!r}") from None
    if math.isnan(g) or g > 0.0:
        raise argparse.ArgumentTypeError("threshold must be <= 0 dB or -inf")
    return g


def _resolve_inputs(cfg: CampaignConfig):
    """Turn the config's scene/trajectory/tx references into objects."""
    if cfg.scene in BUILTIN_SCENARIOS:
        scene, tx_node, traj = BUILTIN_SCENARIOS[cfg.scene]()
        tx = tx_node.position
        if cfg.trajectory is not None:
            traj = load_trajectory(cfg.trajectory)
        if cfg.tx_position is not None:
            tx = np.asarray(cfg.tx_position, dtype=float)
    else:
        scene = load_scene(cfg.scene)
        if cfg.trajectory is None:
            raise UsageError("--trajectory is required with a scene file")
        if cfg.tx_position is None:
            raise UsageError("--tx is required with a scene file")
        traj = load_trajectory(cfg.trajectory)
        tx = np.asarray(cfg.tx_position, dtype=float)
    return scene, tx, traj.truncated(cfg.samples)


def _merged_config(args) -> CampaignConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else CampaignConfig()
    overrides = {}
    mapping = {
        "scene": "scene", "trajectory": "trajectory", "tx": "tx_position",
        "eta_max": "eta_max_grid", "gamma_th_db": "gamma_th_db_grid",
        "baseline_eta": "baseline_eta_max", "baseline_gamma_db": "baseline_gamma_th_db",
        "samples": "samples", "workers": "workers", "out_dir": "out_dir",
        "fc_hz": "carrier_frequency_hz", "tx_power_dbm": "tx_power_dbm",
        "noise_figure_db": "noise_figure_db", "bandwidth_hz": "bandwidth_hz",
        "tx_rows": "tx_array_rows", "tx_cols": "tx_array_cols",
        "rx_rows": "rx_array_rows", "rx_cols": "rx_array_cols",
        "spacing_wl": "element_spacing_wavelengths",
    }
    for arg_name, cfg_name in mapping.items():
        v = getattr(args, arg_name, None)
        if v is not None:
            if isinstance(v, list):
                v = tuple(v)
            overrides[cfg_name] = v
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# subcommands


def cmd_scenario(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kwargs = {}
    if args.samples is not None:
        kwargs["samples"] = args.samples
    scene, tx_node, traj = BUILTIN_SCENARIOS[args.name](**kwargs)
    scene_path = out_dir / f"{args.name}_scene.txt"
    traj_path = out_dir / f"{args.name}_trajectory.txt"
    tx_path = out_dir / f"{args.name}_tx.txt"
    save_scene(scene, scene_path)
    save_trajectory(traj, traj_path)
    p = tx_node.position
    tx_path.write_text(f"{traceio.fmt_float(p[0])} {traceio.fmt_float(p[1])} "
                       f"{traceio.fmt_float(p[2])}\n", encoding="utf-8")
    print(f"wrote {scene_path} ({scene.num_triangles} triangles), "
          f"{traj_path} ({len(traj)} samples), {tx_path}")
    return 0


def _run_cell(scene, tx, traj, cfg: CampaignConfig, eta: int, gamma: float,
              out_dir: Path) -> dict:
    tc = TraceConfig(max_reflection_order=eta, relative_threshold_db=gamma,
                     carrier_frequency_hz=cfg.carrier_frequency_hz)
    t0 = time.perf_counter()
    results = trace_trajectory(scene, tx, traj, tc, workers=cfg.workers)
    t_rt = time.perf_counter() - t0
    tag = traceio.cell_tag(eta, gamma)
    trace_csv = out_dir / f"trace_{tag}.csv"
    traceio.write_trace_csv(trace_csv, results, traj.sample_interval_s,
                            cfg.carrier_frequency_hz)
    traceio.write_trace_jsonl(out_dir / f"trace_{tag}.jsonl", results,
                              traj.sample_interval_s, cfg.carrier_frequency_hz)
    report = {
        "eta_max": eta,
        "gamma_th_db": gamma,
        "carrier_frequency_hz": cfg.carrier_frequency_hz,
        "num_timesteps": len(results),
        "dt_s": traj.sample_interval_s,
        "t_rt_s": t_rt,
        "t_ns_s": None,
        "trace_csv": trace_csv.name,
        "snr_csv": None,
        "mpc_counts": [len(r.mpcs) for r in results],
    }
    traceio.write_report_json(out_dir / f"report_{tag}.json", report)
    return report


def cmd_trace(args) -> int:
    cfg = _merged_config(args)
    scene, tx, traj = _resolve_inputs(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.dump_config:
        save_config(cfg, args.dump_config)
    for eta in cfg.eta_max_grid:
        for gamma in cfg.gamma_th_db_grid:
            report = _run_cell(scene, tx, traj, cfg, eta, gamma, out_dir)
            print(f"traced {traceio.cell_tag(eta, gamma)}: "
                  f"{report['num_timesteps']} timesteps, "
                  f"{sum(report['mpc_counts'])} components, "
                  f"T_RT={report['t_rt_s']:.3f}s")
    return 0


def cmd_snr(args) -> int:
    trace_path = Path(args.trace)
    data = traceio.read_trace_csv(trace_path)
    cfg = _merged_config(args)
    fc = args.fc_hz if args.fc_hz is not None else data.fc_hz
    budget = LinkBudget(cfg.tx_power_dbm, cfg.noise_figure_db, cfg.bandwidth_hz, fc)
    tx_array, rx_array = cfg.arrays()
    points, t_ns = timed_snr_series(data.by_timestep(), budget, tx_array, rx_array)

    out_dir = Path(args.out_dir) if args.out_dir else trace_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = trace_path.stem
    tag = stem[6:] if stem.startswith("trace_") else stem
    snr_path = out_dir / f"snr_{tag}.csv"
    traceio.write_snr_csv(snr_path, points, data.dt_s)

    report_path = trace_path.parent / f"report_{tag}.json"
    if report_path.exists():
        report = traceio.read_report_json(report_path)
        report["t_ns_s"] = t_ns
        report["snr_csv"] = snr_path.name
        traceio.write_report_json(report_path, report)

    outages = sum(1 for p in points if not math.isfinite(p.snr_db))
    print(f"wrote {snr_path}: {len(points)} timesteps, {outages} outages, "
          f"T_NS={t_ns:.3f}s")
    return 0


def _load_campaign(report_path: Path) -> CampaignReport:
    report = traceio.read_report_json(report_path)
    if report.get("snr_csv") is None or report.get("t_ns_s") is None:
        raise FormatError(f"{report_path.name}: run the snr stage before comparing")
    points = traceio.read_snr_csv(report_path.parent / report["snr_csv"])
    tc = TraceConfig(max_reflection_order=int(report["eta_max"]),
                     relative_threshold_db=float(report["gamma_th_db"]),
                     carrier_frequency_hz=float(report["carrier_frequency_hz"]))
    return CampaignReport(
        config=tc,
        snr_db=np.array([p.snr_db for p in points]),
        mpc_counts=np.array(report["mpc_counts"]),
        t_rt_s=float(report["t_rt_s"]),
        t_ns_s=float(report["t_ns_s"]),
    )


def cmd_compare(args) -> int:
    if args.reports_dir:
        paths = sorted(Path(args.reports_dir).glob("report_*.json"))
        if not paths:
            raise FormatError(f"no report_*.json files in {args.reports_dir}")
        if args.baseline_eta is None or args.baseline_gamma_db is None:
            raise UsageError("--baseline-eta and --baseline-gamma-db are required "
                             "with --reports-dir")
        baseline_key = (args.baseline_eta, args.baseline_gamma_db)
    else:
        if not args.baseline or not args.test:
            raise UsageError("either --reports-dir or --baseline plus --test is required")
        paths = [Path(args.baseline)] + [Path(t) for t in args.test]
        baseline_key = None

    reports = [_load_campaign(p) for p in paths]
    if baseline_key is None:
        baseline_key = reports[0].key
    baseline = next((r for r in reports if r.key == baseline_key), None)
    if baseline is None:
        raise FormatError(f"baseline {baseline_key} not among the loaded reports")

    rows = tradeoff_table(reports, baseline_key, args.n_runs)
    out_dir = Path(args.out_dir) if args.out_dir else paths[0].parent
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / "tradeoff.csv"
    traceio.write_tradeoff_csv(table_path, rows)

    for r in reports:
        if r.key == baseline_key:
            continue
        cmp = compare_campaigns(baseline, r, args.n_runs)
        print(f"eta_max={r.key[0]} gamma_th={traceio.fmt_gamma(r.key[1])} dB: "
              f"nrmse={cmp.nrmse:.6g} speedup={cmp.speedup:.4g} "
              f"outage_mismatch={cmp.outage_mismatch_count} (n_runs={cmp.n_runs})")
    print(f"wrote {table_path}")

    if not args.no_figures:
        from . import plots

        ordered = sorted(reports, key=lambda r: r.key)
        for name, fn, data in [
            ("tradeoff.png", plots.save_tradeoff_figure, rows),
            ("snr_timeseries.png", plots.save_snr_timeseries_figure, ordered),
            ("snr_cdf.png", plots.save_snr_cdf_figure, ordered),
        ]:
            print(f"wrote {fn(data, out_dir / name)}")
    return 0


def cmd_bench(args) -> int:
    cfg = _merged_config(args)
    scene, tx, traj = _resolve_inputs(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["eta_max,gamma_th_db,t_rt_median_s,t_rt_min_s,t_rt_max_s,repeat"]
    for eta in cfg.eta_max_grid:
        for gamma in cfg.gamma_th_db_grid:
            tc = TraceConfig(max_reflection_order=eta, relative_threshold_db=gamma,
                             carrier_frequency_hz=cfg.carrier_frequency_hz)
            times = []
            for _ in range(args.repeat):
                t0 = time.perf_counter()
                trace_trajectory(scene, tx, traj, tc, workers=cfg.workers)
                times.append(time.perf_counter() - t0)
            med = sorted(times)[len(times) // 2]
            lines.append(",".join([
                str(eta), traceio.fmt_gamma(gamma),
                traceio.fmt_float(med),
                traceio.fmt_float(min(times)), traceio.fmt_float(max(times)),
                str(args.repeat),
            ]))
            print(f"bench {traceio.cell_tag(eta, gamma)}: median T_RT={med:.3f}s "
                  f"over {args.repeat} runs")
    bench_path = out_dir / "bench.csv"
    bench_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {bench_path}")
    return 0


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_campaign_flags(p: argparse.ArgumentParser, grids: bool = True) -> None:
    p.add_argument("--config", help="campaign config JSON; flags override its values")
    p.add_argument("--scene", help="builtin name (indoor1|lroom|parking) or scene file")
    p.add_argument("--trajectory", help="trajectory file (defaults to the builtin's)")
    p.add_argument("--tx", nargs=3, type=float, metavar=("X", "Y", "Z"),
                   help="transmitter position in meters")
    if grids:
        p.add_argument("--eta-max", action="append", type=int,
                       help="max reflection order; repeat for a grid")
        p.add_argument("--gamma-th-db", action="append", type=_parse_gamma,
                       help="relative threshold in dB (use --gamma-th-db=-inf); "
                            "repeat for a grid")
    p.add_argument("--samples", type=int, help="truncate the trajectory to N samples")
    p.add_argument("--workers", type=int, help="parallel tracing workers")
    p.add_argument("--out-dir", help="output directory")
    p.add_argument("--fc-hz", type=float, help="carrier frequency in Hz")


def _add_budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tx-power-dbm", type=float)
    p.add_argument("--noise-figure-db", type=float)
    p.add_argument("--bandwidth-hz", type=float)
    p.add_argument("--tx-rows", type=int)
    p.add_argument("--tx-cols", type=int)
    p.add_argument("--rx-rows", type=int)
    p.add_argument("--rx-cols", type=int)
    p.add_argument("--spacing-wl", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mmrt",
                     description="Millimeter-wave specular ray tracing toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", help="generate a builtin scenario's files")
    p.add_argument("name", choices=sorted(BUILTIN_SCENARIOS))
    p.add_argument("--out-dir", default=".")
    p.add_argument("--samples", type=int, help="trajectory samples (default: full scale)")
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("trace", help="trace a campaign over an (eta, gamma) grid")
    _add_campaign_flags(p)
    p.add_argument("--dump-config", help="write the effective config JSON here")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("snr", help="beamforming SNR series from a trace file")
    p.add_argument("--trace", required=True, help="trace CSV produced by 'mmrt trace'")
    p.add_argument("--out-dir", help="output directory (default: trace directory)")
    p.add_argument("--config")
    p.add_argument("--fc-hz", type=float, help="carrier override (default: trace metadata)")
    _add_budget_flags(p)
    p.set_defaults(func=cmd_snr)

    p = sub.add_parser("compare", help="accuracy/speed trade-off against a baseline")
    p.add_argument("--reports-dir", help="directory with report_*.json files")
    p.add_argument("--baseline", help="baseline report JSON")
    p.add_argument("--test", action="append", help="test report JSON; repeatable")
    p.add_argument("--baseline-eta", type=int)
    p.add_argument("--baseline-gamma-db", type=_parse_gamma)
    p.add_argument("--n-runs", type=int, default=1000,
                   help="simulation runs amortizing the trace time")
    p.add_argument("--out-dir")
    p.add_argument("--no-figures", action="store_true",
                   help="skip rendering the report figures")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="repeat tracing runs and report median times")
    _add_campaign_flags(p)
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (FormatError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
