"""FastAPI service wrapping the engine: weight fitting, box-plot stats and
scenario run management.

Runs execute synchronously when submitted with ``wait=true`` (the default
used by the CLI) or on a background worker with polling otherwise. Errors
map to structured kinds so thin clients can translate them into exit
codes: config -> 400, placement/out-of-memory -> 409, runtime -> 500.
"""

from __future__ import annotations

import itertools
import logging
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, weighting
from ..bench import reports as rp
from ..bench.scenarios import ConfigError, ScenarioConfig, ScenarioReport, run_scenario
from ..fabric.topology import PlacementError
from . import schemas

logger = logging.getLogger(__name__)


class RunRegistry:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._runs: dict[str, dict] = {}
        self._counter = itertools.count(1)
        self._executor = ThreadPoolExecutor(max_workers=1)

    def new_run(self, cfg) -> str:
        with self._lock:
            run_id = f"run-{next(self._counter):06d}"
            self._runs[run_id] = {"status": "queued", "config": cfg.as_dict(), "_cfg": cfg}
        return run_id

    def update(self, run_id: str, **fields) -> None:
        with self._lock:
            self._runs[run_id].update(fields)

    def get(self, run_id: str) -> dict | None:
        with self._lock:
            record = self._runs.get(run_id)
            return dict(record) if record is not None else None

    def all(self) -> dict[str, dict]:
        with self._lock:
            return {k: dict(v) for k, v in self._runs.items()}

    def submit(self, run_id: str, fn) -> None:
        self._executor.submit(fn, run_id)


def _scenario_config(req: schemas.RunRequest) -> ScenarioConfig:
    return ScenarioConfig(
        scenario=req.scenario,
        deployment=req.deployment,
        weighting=req.weighting,
        windows=req.windows,
        window_rule=req.window_rule,
        fidelity=req.fidelity,
        seed=req.seed,
        data=req.data,
        out_dir=req.out_dir,
        topology=req.topology,
    )


def _error_kind(exc: Exception) -> tuple[str, int]:
    if isinstance(exc, ConfigError):
        return "config", 400
    if isinstance(exc, PlacementError):
        return "placement", 409
    return "runtime", 500


def _public(record: dict) -> dict:
    return {k: v for k, v in record.items() if not k.startswith("_")}


def create_app() -> FastAPI:
    app = FastAPI(title="hybridstream", version=__version__)
    registry = RunRegistry()
    app.state.registry = registry
    reports_cache: dict[str, ScenarioReport] = {}

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/weights/fit", response_model=schemas.WeightFitResponse)
    def fit_weights(req: schemas.WeightFitRequest) -> schemas.WeightFitResponse:
        if not (len(req.speed) == len(req.batch) == len(req.truth)):
            raise HTTPException(
                status_code=400,
                detail={"error_kind": "config", "message": "speed, batch and truth must share a length"},
            )
        try:
            solution = weighting.fit_dynamic_weights(
                weighting.DwaInput(
                    predictions=np.array([req.speed, req.batch]), truth=np.array(req.truth)
                )
            )
            closed = weighting.closed_form_two_model(
                np.array(req.batch), np.array(req.speed), np.array(req.truth)
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail={"error_kind": "config", "message": str(exc)})
        return schemas.WeightFitResponse(
            weight_speed=solution.weights.speed,
            weight_batch=solution.weights.batch,
            rmse=solution.rmse,
            converged=solution.converged,
            iterations=solution.iterations,
            closed_form_weight_speed=closed,
        )

    @app.post("/stats/boxplot", response_model=schemas.BoxplotResponse)
    def boxplot(req: schemas.BoxplotRequest) -> schemas.BoxplotResponse:
        return schemas.BoxplotResponse(**rp.boxplot_stats(req.values))

    def execute(run_id: str) -> None:
        cfg = registry.get(run_id)["_cfg"]
        registry.update(run_id, status="running")
        try:
            report = run_scenario(cfg)
        except Exception as exc:
            kind, _ = _error_kind(exc)
            logger.exception("run %s failed", run_id)
            registry.update(run_id, status="error", error_kind=kind, error=str(exc))
            return
        reports_cache[run_id] = report
        registry.update(run_id, status="done", summary=report.summary)

    @app.post("/runs", response_model=schemas.RunRecord)
    def submit_run(req: schemas.RunRequest) -> schemas.RunRecord:
        cfg = _scenario_config(req)
        try:
            cfg.validate()
        except ConfigError as exc:
            raise HTTPException(status_code=400, detail={"error_kind": "config", "message": str(exc)})
        run_id = registry.new_run(cfg)
        if req.wait:
            execute(run_id)
            record = registry.get(run_id)
            if record["status"] == "error":
                kind = record.get("error_kind", "runtime")
                status = {"config": 400, "placement": 409}.get(kind, 500)
                raise HTTPException(status_code=status, detail={"error_kind": kind, "message": record["error"]})
            return schemas.RunRecord(run_id=run_id, **_public(record))
        registry.submit(run_id, execute)
        return schemas.RunRecord(run_id=run_id, **_public(registry.get(run_id)))

    @app.get("/runs")
    def list_runs() -> dict:
        return {
            run_id: schemas.RunRecord(run_id=run_id, **_public(record)).model_dump(exclude={"summary", "config"})
            for run_id, record in registry.all().items()
        }

    @app.get("/runs/{run_id}", response_model=schemas.RunRecord)
    def get_run(run_id: str) -> schemas.RunRecord:
        record = registry.get(run_id)
        if record is None:
            raise HTTPException(status_code=404, detail={"error_kind": "config", "message": f"no run {run_id}"})
        return schemas.RunRecord(run_id=run_id, **_public(record))

    @app.get("/runs/{run_id}/report", response_model=schemas.ReportBundle)
    def get_report(run_id: str) -> schemas.ReportBundle:
        record = registry.get(run_id)
        if record is None:
            raise HTTPException(status_code=404, detail={"error_kind": "config", "message": f"no run {run_id}"})
        if record["status"] != "done":
            raise HTTPException(
                status_code=409,
                detail={"error_kind": "runtime", "message": f"run {run_id} is {record['status']}"},
            )
        report = reports_cache[run_id]
        if report.session is not None:
            windows_csv = rp.windows_csv_text(report.window_reports)
            latency_csv = rp.latency_csv_text(report.session.ledger)
        else:  # resumed from disk: serve the stored files verbatim
            windows_csv = report.files["windows"].read_text()
            latency_path = report.files.get("latency")
            latency_csv = latency_path.read_text() if latency_path else None
        return schemas.ReportBundle(
            run_id=run_id,
            summary=report.summary,
            windows_csv=windows_csv,
            latency_csv=latency_csv,
        )

    return app


app = create_app()
