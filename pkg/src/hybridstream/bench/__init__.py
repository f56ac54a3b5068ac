"""Benchmark harness: scenario runner, report tables, file emission."""

from .reports import (
    APPROACHES,
    SCHEMA_VERSION,
    WindowReport,
    best_approach,
    boxplot_stats,
    config_hash,
    emit,
    percentage_best,
    summary_dict,
    window_report,
)
from .scenarios import (
    ConfigError,
    ScenarioConfig,
    ScenarioReport,
    build_dataset,
    evaluate_policies,
    run_scenario,
    session_config,
)

__all__ = [
    "APPROACHES",
    "SCHEMA_VERSION",
    "WindowReport",
    "best_approach",
    "boxplot_stats",
    "config_hash",
    "emit",
    "percentage_best",
    "summary_dict",
    "window_report",
    "ConfigError",
    "ScenarioConfig",
    "ScenarioReport",
    "build_dataset",
    "evaluate_policies",
    "run_scenario",
    "session_config",
]
