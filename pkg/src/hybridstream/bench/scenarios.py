"""Scenario runner: drift scenario x deployment x weighting policy, with
report emission.

A scenario builds (or loads) a dataset, splits it 4:6 into the historical
block and the stream, runs one deployed session and emits per-window CSV,
a versioned summary JSON and the phase-latency table. Runs are
deterministic per seed; rerunning into an output directory that already
holds a summary with the same config hash returns the stored report
instead of recomputing.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..drift import BaseSignalConfig, DriftConfig, abrupt_drift, gradual_drift, synth_base
from ..fabric.runtime import DeployedSession, SessionReport
from ..lstm import NetworkConfig, TrainConfig
from ..pipeline import InjectionConfig, SessionConfig, WeightPolicy, replay_weighting
from ..series import Series, read_series_csv, split
from . import reports as rp

logger = logging.getLogger(__name__)

SCENARIOS = ("none", "gradual", "abrupt")
DEPLOYMENTS = {
    "edge": "edge_centric",
    "cloud": "cloud_centric",
    "edge-cloud": "edge_cloud",
    "local": "local",
}
FIDELITIES = ("paper", "desk")
TRAIN_FRACTION = 0.4  # historical : stream = 4 : 6


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "gradual"
    deployment: str = "edge-cloud"
    weighting: str = "dynamic"
    windows: int = 100
    window_rule: str = "seconds:30"
    fidelity: str = "desk"
    seed: int = 0
    data: str = "synth"
    out_dir: str | None = None
    topology: str = "desk"
    # data-shape knobs (documented defaults; the drift slope is derived so
    # the total drift over the dataset spans roughly the base-signal range)
    base_noise_sigma: float = 0.1
    drift_span: float = 10.0
    epsilon_sigma: float = 0.05
    change_points: int = 6
    target_only_drift: bool = False
    tick_ms: int = 143

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError("scenario", f"must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.deployment not in DEPLOYMENTS:
            raise ConfigError("deployment", f"must be one of {tuple(DEPLOYMENTS)}, got {self.deployment!r}")
        if self.fidelity not in FIDELITIES:
            raise ConfigError("fidelity", f"must be one of {FIDELITIES}, got {self.fidelity!r}")
        if self.windows < 1:
            raise ConfigError("windows", "must be >= 1")
        try:
            WeightPolicy.parse(self.weighting)
        except ValueError as exc:
            raise ConfigError("weighting", str(exc)) from None
        try:
            parse_window_rule(self.window_rule)
        except ValueError as exc:
            raise ConfigError("window_rule", str(exc)) from None
        if self.data != "synth" and not Path(self.data).exists():
            raise ConfigError("data", f"no such file: {self.data}")

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "deployment": self.deployment,
            "weighting": self.weighting,
            "windows": self.windows,
            "window_rule": self.window_rule,
            "fidelity": self.fidelity,
            "seed": self.seed,
            "data": self.data,
            "topology": self.topology if isinstance(self.topology, str) else "inline",
            "base_noise_sigma": self.base_noise_sigma,
            "drift_span": self.drift_span,
            "epsilon_sigma": self.epsilon_sigma,
            "change_points": self.change_points,
            "target_only_drift": self.target_only_drift,
            "tick_ms": self.tick_ms,
        }


def parse_window_rule(rule: str) -> InjectionConfig:
    parts = rule.split(":")
    if len(parts) != 2:
        raise ValueError(f"window rule must be 'seconds:S' or 'count:N', got {rule!r}")
    kind, value = parts
    if kind == "seconds":
        return InjectionConfig(close_rule="duration", duration_s=float(value))
    if kind == "count":
        n = int(value)
        return InjectionConfig(close_rule="count", min_records=n, buffer_capacity=max(2000, 2 * n))
    raise ValueError(f"window rule must start with 'seconds' or 'count', got {rule!r}")


def session_config(cfg: ScenarioConfig) -> SessionConfig:
    injection = parse_window_rule(cfg.window_rule)
    network = NetworkConfig(seed=cfg.seed)
    if cfg.fidelity == "paper":
        batch = TrainConfig(epochs=50, batch_size=512, learning_rate=0.001, seed=cfg.seed + 1)
        speed = TrainConfig(epochs=100, batch_size=64, learning_rate=0.001, seed=cfg.seed + 2)
    else:
        batch = TrainConfig(epochs=10, batch_size=512, learning_rate=0.01, seed=cfg.seed + 1)
        speed = TrainConfig(epochs=20, batch_size=64, learning_rate=0.01, seed=cfg.seed + 2)
    return SessionConfig(
        lag=5,
        network=network,
        batch_train=batch,
        speed_train=speed,
        injection=injection,
        policy=WeightPolicy.parse(cfg.weighting),
        seed=cfg.seed,
        max_windows=cfg.windows,
    )


def records_per_window(cfg: ScenarioConfig) -> int:
    injection = parse_window_rule(cfg.window_rule)
    if injection.close_rule == "count":
        return injection.min_records
    per = math.ceil(injection.duration_s * 1000 / cfg.tick_ms)
    return max(per, injection.min_records)


def build_dataset(cfg: ScenarioConfig, lag: int = 5) -> tuple[Series, Series]:
    """Historical block and stream, 4:6, drift applied to the whole set."""
    per_window = records_per_window(cfg)
    stream_len = cfg.windows * per_window + lag + 5
    total = stream_len + int(round(stream_len * TRAIN_FRACTION / (1 - TRAIN_FRACTION)))

    if cfg.data == "synth":
        base = synth_base(
            BaseSignalConfig(length=total, noise_sigma=cfg.base_noise_sigma, tick_ms=cfg.tick_ms, seed=cfg.seed)
        )
    else:
        base = read_series_csv(cfg.data)
        total = len(base)

    if cfg.scenario == "none":
        series = base
    else:
        alpha = cfg.drift_span / total
        if cfg.target_only_drift:
            drift_cfg = DriftConfig.target_only(
                alpha,
                n_variables=base.n_variables,
                epsilon_sigma=cfg.epsilon_sigma,
                change_points=cfg.change_points,
                seed=cfg.seed,
            )
        else:
            drift_cfg = DriftConfig(
                alphas=alpha,
                epsilon_sigma=cfg.epsilon_sigma,
                change_points=cfg.change_points,
                seed=cfg.seed,
            )
        series = gradual_drift(base, drift_cfg) if cfg.scenario == "gradual" else abrupt_drift(base, drift_cfg)

    fraction = (len(series) - stream_len) / len(series) if cfg.data == "synth" else TRAIN_FRACTION
    return split(series, fraction)


@dataclass
class ScenarioReport:
    config: dict
    summary: dict
    window_reports: list[rp.WindowReport]
    session: SessionReport | None
    files: dict[str, Path] = field(default_factory=dict)


def run_scenario(cfg: ScenarioConfig) -> ScenarioReport:
    cfg.validate()
    config_dict = cfg.as_dict()

    if cfg.out_dir is not None:
        existing = _load_existing(Path(cfg.out_dir), rp.config_hash(config_dict))
        if existing is not None:
            logger.info("reusing completed run in %s", cfg.out_dir)
            return existing

    historical, stream = build_dataset(cfg)
    session_cfg = session_config(cfg)
    preset = DEPLOYMENTS[cfg.deployment]
    if preset == "local":
        session = DeployedSession(session_cfg, topology="local")
    else:
        session = DeployedSession(session_cfg, topology=cfg.topology, preset=preset)
    report = session.run(historical, stream)
    if len(report.results) < cfg.windows:
        logger.warning("stream closed %d windows, %d requested", len(report.results), cfg.windows)

    window_reports = [rp.window_report(r, report.ledger) for r in report.results]
    summary = rp.summary_dict(config_dict, window_reports, report.ledger)
    out = ScenarioReport(config=config_dict, summary=summary, window_reports=window_reports, session=report)
    if cfg.out_dir is not None:
        out.files = rp.emit(cfg.out_dir, summary, window_reports, report.ledger)
    return out


def evaluate_policies(session: SessionReport, policies: list[WeightPolicy]) -> dict[str, dict]:
    """Re-score one session under several weighting policies (causally, from
    the stored batch/speed predictions) without re-running inference."""
    out = {}
    for policy in policies:
        results = replay_weighting(session.results, policy)
        window_reports = [rp.window_report(r) for r in results]
        out[policy.label()] = {
            "window_reports": window_reports,
            "percentage_best": rp.percentage_best(window_reports),
            "mean_rmse": {
                name: float(np.mean([getattr(r, f"rmse_{name}") for r in window_reports if getattr(r, f"rmse_{name}") is not None]))
                for name in rp.APPROACHES
            },
        }
    return out


def _load_existing(out_dir: Path, expected_hash: str) -> ScenarioReport | None:
    summary_path = out_dir / "summary.json"
    windows_path = out_dir / "windows.csv"
    if not (summary_path.exists() and windows_path.exists()):
        return None
    try:
        summary = json.loads(summary_path.read_text())
    except json.JSONDecodeError:
        return None
    if summary.get("config_hash") != expected_hash:
        return None
    rows = rp.parse_windows_csv(windows_path.read_text())
    window_reports = [
        rp.WindowReport(
            window_index=row["window_index"],
            n_records=row["n_records"],
            rmse_speed=row["rmse_speed"],
            rmse_batch=row["rmse_batch"],
            rmse_hybrid=row["rmse_hybrid"],
            weight_speed=row["weight_speed"],
            weight_batch=row["weight_batch"],
            weights_origin=row["weights_origin"],
            speed_model_version=row["speed_model_version"],
            speed_staleness=row["speed_staleness"],
            best=row["best"],
            first_window_fallback=row["first_window_fallback"],
            speed_model_missing=row["speed_model_missing"],
            solver_converged=row["solver_converged"],
            training_failed=row["training_failed"],
            fit_rmse_hybrid=row.get("fit_rmse_hybrid"),
            fit_rmse_speed=row.get("fit_rmse_speed"),
            fit_rmse_batch=row.get("fit_rmse_batch"),
        )
        for row in rows
    ]
    files = {"summary": summary_path, "windows": windows_path}
    if (out_dir / "latency.csv").exists():
        files["latency"] = out_dir / "latency.csv"
    return ScenarioReport(
        config=summary.get("config", {}),
        summary=summary,
        window_reports=window_reports,
        session=None,
        files=files,
    )
