"""Per-window reports, best-approach tables, box-plot statistics and file
emission.

Best-approach ties break toward hybrid, then speed, then batch (recorded in
the summary metadata). Box plots follow the Tukey convention: whiskers reach
the most extreme values within 1.5*IQR of the quartiles, everything outside
is an outlier.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..pipeline import WindowResult
from ..weighting import rmse

SCHEMA_VERSION = 1
APPROACHES = ("speed", "batch", "hybrid")
TIE_BREAK = ("hybrid", "speed", "batch")  # preference order on RMSE ties


@dataclass(frozen=True)
class WindowReport:
    window_index: int
    n_records: int
    rmse_speed: float | None
    rmse_batch: float
    rmse_hybrid: float
    weight_speed: float
    weight_batch: float
    weights_origin: str
    speed_model_version: int
    speed_staleness: int
    best: str
    first_window_fallback: bool
    speed_model_missing: bool
    solver_converged: bool
    training_failed: bool
    fit_rmse_hybrid: float | None = None
    fit_rmse_speed: float | None = None
    fit_rmse_batch: float | None = None
    latency: dict[str, dict[str, float]] = field(default_factory=dict)


def best_approach(rmse_speed: float | None, rmse_batch: float, rmse_hybrid: float) -> str:
    """Arg-min of the available per-approach RMSEs, ties broken toward
    hybrid, then speed, then batch."""
    values = {"batch": rmse_batch, "hybrid": rmse_hybrid}
    if rmse_speed is not None:
        values["speed"] = rmse_speed
    lowest = min(values.values())
    for name in TIE_BREAK:
        if name in values and values[name] == lowest:
            return name
    raise AssertionError("unreachable")


def window_report(result: WindowResult, ledger=None) -> WindowReport:
    rmse_speed = None if result.speed_preds is None else rmse(result.truth, result.speed_preds)
    rmse_batch = rmse(result.truth, result.batch_preds)
    rmse_hybrid = rmse(result.truth, result.hybrid_preds)
    latency = {}
    if ledger is not None:
        from ..fabric.clock import REPORT_PHASES

        for phase in REPORT_PHASES:
            comp, comm, total = ledger.cell(result.window_index, phase)
            latency[phase] = {"computation": comp, "communication": comm, "total": total}
    fit = result.fit_rmse or {}
    return WindowReport(
        window_index=result.window_index,
        n_records=len(result.truth),
        rmse_speed=rmse_speed,
        rmse_batch=rmse_batch,
        rmse_hybrid=rmse_hybrid,
        weight_speed=result.weights.speed,
        weight_batch=result.weights.batch,
        weights_origin=result.weights.origin,
        speed_model_version=result.speed_version_used,
        speed_staleness=result.speed_staleness,
        best=best_approach(rmse_speed, rmse_batch, rmse_hybrid),
        first_window_fallback=result.flags.first_window_fallback,
        speed_model_missing=result.flags.speed_model_missing,
        solver_converged=result.flags.solver_converged,
        training_failed=result.flags.training_failed,
        fit_rmse_hybrid=fit.get("hybrid"),
        fit_rmse_speed=fit.get("speed"),
        fit_rmse_batch=fit.get("batch"),
        latency=latency,
    )


def percentage_best(reports: list[WindowReport]) -> dict[str, float]:
    """Fraction of windows on which each approach had the lowest RMSE;
    the three fractions partition the windows and sum to 1."""
    if not reports:
        raise ValueError("percentage_best needs at least one report")
    counts = {name: 0 for name in APPROACHES}
    for report in reports:
        counts[report.best] += 1
    n = len(reports)
    return {name: counts[name] / n for name in APPROACHES}


def boxplot_stats(values) -> dict:
    """Tukey box-plot statistics: median, quartiles, 1.5*IQR whiskers and
    the values beyond them as outliers."""
    arr = np.asarray([v for v in values if v is not None], dtype=np.float64)
    if arr.size == 0:
        raise ValueError("boxplot_stats needs at least one value")
    q1, median, q3 = (float(q) for q in np.percentile(arr, [25, 50, 75]))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    outliers = arr[(arr < lo_fence) | (arr > hi_fence)]
    return {
        "median": median,
        "q1": q1,
        "q3": q3,
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "outliers": sorted(float(v) for v in outliers),
        "mean": float(arr.mean()),
        "n": int(arr.size),
    }


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode()).hexdigest()


WINDOW_CSV_COLUMNS = (
    "window_index",
    "n_records",
    "rmse_speed",
    "rmse_batch",
    "rmse_hybrid",
    "weight_speed",
    "weight_batch",
    "weights_origin",
    "speed_model_version",
    "speed_staleness",
    "best",
    "first_window_fallback",
    "speed_model_missing",
    "solver_converged",
    "training_failed",
    "fit_rmse_hybrid",
    "fit_rmse_speed",
    "fit_rmse_batch",
)


def windows_csv_text(reports: list[WindowReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    phases = sorted(reports[0].latency.keys()) if reports and reports[0].latency else []
    header = list(WINDOW_CSV_COLUMNS)
    for phase in phases:
        header += [f"{phase}_computation_s", f"{phase}_communication_s", f"{phase}_total_s"]
    writer.writerow(header)
    for report in sorted(reports, key=lambda r: r.window_index):
        row = [_cell(getattr(report, col)) for col in WINDOW_CSV_COLUMNS]
        for phase in phases:
            cell = report.latency.get(phase, {})
            row += [
                _cell(cell.get("computation")),
                _cell(cell.get("communication")),
                _cell(cell.get("total")),
            ]
        writer.writerow(row)
    return buf.getvalue()


def parse_windows_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        parsed: dict = {}
        for key, value in row.items():
            if value == "":
                parsed[key] = None
            elif key in ("window_index", "n_records", "speed_model_version", "speed_staleness"):
                parsed[key] = int(value)
            elif key in ("best", "weights_origin"):
                parsed[key] = value
            elif key in ("first_window_fallback", "speed_model_missing", "solver_converged", "training_failed"):
                parsed[key] = value == "True"
            else:
                parsed[key] = float(value)
        out.append(parsed)
    return out


def latency_csv_text(ledger) -> str:
    from ..fabric.clock import REPORT_PHASES

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["phase", "computation_s", "communication_s", "total_s", "windows"])
    averages = ledger.phase_averages(REPORT_PHASES)
    for phase in REPORT_PHASES:
        cell = averages[phase]
        writer.writerow(
            [phase, repr(cell["computation"]), repr(cell["communication"]), repr(cell["total"]), cell["windows"]]
        )
    return buf.getvalue()


def summary_dict(
    config: dict,
    reports: list[WindowReport],
    ledger=None,
) -> dict:
    per_approach = {}
    for name in APPROACHES:
        values = [getattr(r, f"rmse_{name}") for r in reports]
        values = [v for v in values if v is not None]
        per_approach[name] = {
            "mean_rmse": float(np.mean(values)) if values else None,
            "boxplot": boxplot_stats(values) if values else None,
        }
    speed_mean = per_approach["speed"]["mean_rmse"]
    batch_mean = per_approach["batch"]["mean_rmse"]
    hybrid_mean = per_approach["hybrid"]["mean_rmse"]
    improvement = None
    if speed_mean and batch_mean and hybrid_mean:
        baseline = min(speed_mean, batch_mean)
        improvement = (baseline - hybrid_mean) / baseline
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "config_hash": config_hash(config),
        "n_windows": len(reports),
        "percentage_best": percentage_best(reports) if reports else None,
        "tie_break": list(TIE_BREAK),
        "rmse": per_approach,
        "hybrid_improvement_vs_best_single": improvement,
        "flags": {
            "first_window_fallback": sum(r.first_window_fallback for r in reports),
            "speed_model_missing": sum(r.speed_model_missing for r in reports),
            "solver_not_converged": sum(not r.solver_converged for r in reports),
            "training_failed": sum(r.training_failed for r in reports),
        },
    }
    if ledger is not None:
        summary["latency"] = ledger.phase_averages()
    return summary


def emit(out_dir: str | Path, summary: dict, reports: list[WindowReport], ledger=None) -> dict[str, Path]:
    """Write windows.csv, summary.json and (when a ledger exists)
    latency.csv; deterministic bytes for a fixed run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    windows_path = out / "windows.csv"
    windows_path.write_text(windows_csv_text(reports))
    files["windows"] = windows_path
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    files["summary"] = summary_path
    if ledger is not None:
        latency_path = out / "latency.csv"
        latency_path.write_text(latency_csv_text(ledger))
        files["latency"] = latency_path
    return files


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)
