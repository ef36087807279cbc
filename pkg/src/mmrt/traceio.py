"""On-disk formats for traces, SNR series, campaign reports, and tables.

Multipath trace, delimited text variant (one record per component)::

    # timesteps=<N> dt=<seconds> fc_hz=<hertz>
    timestep,order,surface_ids,d_m,delay_s,gain_db,phase_rad,aod_az,aod_el,aoa_az,aoa_el
    0,0,,5.1,1.7e-08,-82.1,3.14,...
    0,1,4|17,...

surface_ids are '|'-joined triangle ids in propagation order (empty for the
direct path). The structured-records variant is JSON Lines with the same
field names, a metadata object first and surface_ids as a list. Floats use
shortest round-trip formatting, so identical inputs reproduce identical
bytes and parsing recovers the exact binary values. The metadata line makes
timesteps without any component (outages) representable.

SNR series files are CSV with header ``timestep,time_s,snr_db,num_mpcs,
sigma1``; an SNR of minus infinity is written as the literal ``-inf``.

A campaign report is a small JSON document tying together one (eta_max,
gamma_th_db) cell: configuration, timings, and the trace/SNR file names
(relative to the report's directory).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .channel import SnrPoint
from .scene import FormatError

TRACE_HEADER = "timestep,order,surface_ids,d_m,delay_s,gain_db,phase_rad,aod_az,aod_el,aoa_az,aoa_el"
SNR_HEADER = "timestep,time_s,snr_db,num_mpcs,sigma1"
TRADEOFF_HEADER = "eta_max,gamma_th_db,nrmse,speedup,outage_mismatch"


def fmt_float(x: float) -> str:
    """Shortest round-trip decimal form; -inf stays the literal '-inf'."""
    return repr(float(x))


def fmt_gamma(gamma_db: float) -> str:
    return "-inf" if math.isinf(gamma_db) and gamma_db < 0 else repr(float(gamma_db))


def cell_tag(eta_max: int, gamma_db: float) -> str:
    return f"eta{eta_max}_gamma{fmt_gamma(gamma_db)}"


@dataclass(frozen=True)
class TraceRecord:
    """One multipath component as stored in a trace file."""

    timestep: int
    order: int
    surface_ids: tuple[int, ...]
    d_m: float
    delay_s: float
    gain_db: float
    phase_rad: float
    aod: tuple[float, float]
    aoa: tuple[float, float]


@dataclass(frozen=True)
class TraceData:
    num_timesteps: int
    dt_s: float
    fc_hz: float
    records: tuple[TraceRecord, ...]

    def by_timestep(self) -> list[list[TraceRecord]]:
        groups: list[list[TraceRecord]] = [[] for _ in range(self.num_timesteps)]
        for rec in self.records:
            groups[rec.timestep].append(rec)
        return groups


def _record_fields(timestep: int, m) -> list[str]:
    return [
        str(timestep),
        str(m.order),
        "|".join(str(i) for i in m.surface_ids),
        fmt_float(m.path_length_m if hasattr(m, "path_length_m") else m.d_m),
        fmt_float(m.delay_s),
        fmt_float(m.gain_db),
        fmt_float(m.phase_rad),
        fmt_float(m.aod[0]),
        fmt_float(m.aod[1]),
        fmt_float(m.aoa[0]),
        fmt_float(m.aoa[1]),
    ]


def write_trace_csv(path: str | Path, results, dt_s: float, fc_hz: float) -> None:
    """Write the delimited-text trace for a list of per-timestep results."""
    lines = [f"# timesteps={len(results)} dt={fmt_float(dt_s)} fc_hz={fmt_float(fc_hz)}",
             TRACE_HEADER]
    for res in results:
        for m in res.mpcs:
            lines.append(",".join(_record_fields(res.timestep, m)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_meta(line: str, path: Path) -> dict:
    if not line.startswith("#"):
        raise FormatError(f"{path.name}:1: missing metadata line")
    meta = {}
    for tok in line[1:].split():
        if "=" not in tok:
            raise FormatError(f"{path.name}:1: bad metadata token {tok!r}")
        k, v = tok.split("=", 1)
        meta[k] = v
    return meta


def read_trace_csv(path: str | Path) -> TraceData:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if len(lines) < 2:
        raise FormatError(f"{path.name}: truncated trace file")
    meta = _parse_meta(lines[0], path)
    try:
        num_timesteps = int(meta["timesteps"])
        dt_s = float(meta["dt"])
        fc_hz = float(meta["fc_hz"])
    except (KeyError, ValueError) as e:
        raise FormatError(f"{path.name}:1: bad metadata ({e})") from None
    if lines[1] != TRACE_HEADER:
        raise FormatError(f"{path.name}:2: unexpected header {lines[1]!r}")
    records = []
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 11:
            raise FormatError(f"{path.name}:{lineno}: expected 11 fields, got {len(parts)}")
        try:
            ids = tuple(int(s) for s in parts[2].split("|")) if parts[2] else ()
            rec = TraceRecord(
                timestep=int(parts[0]),
                order=int(parts[1]),
                surface_ids=ids,
                d_m=float(parts[3]),
                delay_s=float(parts[4]),
                gain_db=float(parts[5]),
                phase_rad=float(parts[6]),
                aod=(float(parts[7]), float(parts[8])),
                aoa=(float(parts[9]), float(parts[10])),
            )
        except ValueError:
            raise FormatError(f"{path.name}:{lineno}: malformed record {line!r}") from None
        if rec.timestep < 0 or rec.timestep >= num_timesteps:
            raise FormatError(f"{path.name}:{lineno}: timestep {rec.timestep} out of range")
        records.append(rec)
    return TraceData(num_timesteps, dt_s, fc_hz, tuple(records))


def write_trace_jsonl(path: str | Path, results, dt_s: float, fc_hz: float) -> None:
    """Structured-records variant of the trace (JSON Lines)."""
    lines = [json.dumps({"timesteps": len(results), "dt": dt_s, "fc_hz": fc_hz},
                        sort_keys=True)]
    for res in results:
        for m in res.mpcs:
            lines.append(json.dumps({
                "timestep": res.timestep,
                "order": m.order,
                "surface_ids": list(m.surface_ids),
                "d_m": m.path_length_m if hasattr(m, "path_length_m") else m.d_m,
                "delay_s": m.delay_s,
                "gain_db": m.gain_db,
                "phase_rad": m.phase_rad,
                "aod_az": m.aod[0], "aod_el": m.aod[1],
                "aoa_az": m.aoa[0], "aoa_el": m.aoa[1],
            }, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace_jsonl(path: str | Path) -> TraceData:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path.name}: empty trace file")
    try:
        meta = json.loads(lines[0])
        num_timesteps, dt_s, fc_hz = int(meta["timesteps"]), float(meta["dt"]), float(meta["fc_hz"])
    except (json.JSONDecodeError, KeyError, ValueError) as e:
        raise FormatError(f"{path.name}:1: bad metadata ({e})") from None
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            records.append(TraceRecord(
                timestep=int(obj["timestep"]),
                order=int(obj["order"]),
                surface_ids=tuple(int(i) for i in obj["surface_ids"]),
                d_m=float(obj["d_m"]),
                delay_s=float(obj["delay_s"]),
                gain_db=float(obj["gain_db"]),
                phase_rad=float(obj["phase_rad"]),
                aod=(float(obj["aod_az"]), float(obj["aod_el"])),
                aoa=(float(obj["aoa_az"]), float(obj["aoa_el"])),
            ))
        except (json.JSONDecodeError, KeyError, ValueError):
            raise FormatError(f"{path.name}:{lineno}: malformed record") from None
    return TraceData(num_timesteps, dt_s, fc_hz, tuple(records))


def write_snr_csv(path: str | Path, points: list[SnrPoint], dt_s: float) -> None:
    lines = [SNR_HEADER]
    for p in points:
        lines.append(",".join([
            str(p.timestep),
            fmt_float(p.timestep * dt_s),
            fmt_float(p.snr_db),
            str(p.num_mpcs),
            fmt_float(p.sigma1),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_snr_csv(path: str | Path) -> list[SnrPoint]:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != SNR_HEADER:
        raise FormatError(f"{path.name}:1: unexpected SNR header")
    points = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise FormatError(f"{path.name}:{lineno}: expected 5 fields")
        try:
            points.append(SnrPoint(int(parts[0]), float(parts[2]), int(parts[3]),
                                   float(parts[4])))
        except ValueError:
            raise FormatError(f"{path.name}:{lineno}: malformed record {line!r}") from None
    return points


def write_report_json(path: str | Path, report: dict) -> None:
    clean = dict(report)
    clean["gamma_th_db"] = fmt_gamma(float(clean["gamma_th_db"]))
    Path(path).write_text(json.dumps(clean, sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def read_report_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path.name}: invalid JSON ({e})") from None
    report["gamma_th_db"] = float(report["gamma_th_db"])
    return report


def write_tradeoff_csv(path: str | Path, rows) -> None:
    lines = [TRADEOFF_HEADER]
    for r in rows:
        lines.append(",".join([
            str(r.eta_max),
            fmt_gamma(r.gamma_th_db),
            fmt_float(r.nrmse),
            fmt_float(r.speedup),
            str(r.outage_mismatch_count),
        ]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
