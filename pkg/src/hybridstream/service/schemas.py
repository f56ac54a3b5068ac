"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class WeightFitRequest(BaseModel):
    speed: list[float] = Field(min_length=1)
    batch: list[float] = Field(min_length=1)
    truth: list[float] = Field(min_length=1)


class WeightFitResponse(BaseModel):
    weight_speed: float
    weight_batch: float
    rmse: float
    converged: bool
    iterations: int
    closed_form_weight_speed: float


class BoxplotRequest(BaseModel):
    values: list[float] = Field(min_length=1)


class BoxplotResponse(BaseModel):
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: list[float]
    mean: float
    n: int


class RunRequest(BaseModel):
    scenario: Literal["none", "gradual", "abrupt"] = "gradual"
    deployment: Literal["edge", "cloud", "edge-cloud", "local"] = "edge-cloud"
    weighting: str = "dynamic"
    windows: int = Field(default=100, ge=1)
    window_rule: str = "seconds:30"
    fidelity: Literal["paper", "desk"] = "desk"
    seed: int = 0
    data: str = "synth"
    out_dir: str | None = None
    topology: str = "desk"
    wait: bool = True


class LatencyPhase(BaseModel):
    computation: float
    communication: float
    total: float
    windows: int


class RunRecord(BaseModel):
    run_id: str
    status: Literal["queued", "running", "done", "error"]
    config: dict | None = None
    error_kind: str | None = None  # "config" | "placement" | "runtime"
    error: str | None = None
    summary: dict | None = None


class ReportBundle(BaseModel):
    run_id: str
    summary: dict
    windows_csv: str
    latency_csv: str | None = None


class ErrorDetail(BaseModel):
    error_kind: str
    message: str
