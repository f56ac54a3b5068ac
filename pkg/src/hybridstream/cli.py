"""Command-line interface: a thin client of the HTTP service.

``run`` submits a scenario (in-process by default, or to ``--server``) and
reports the summary; ``serve`` starts the service. Exit codes: 0 success,
2 configuration error, 3 placement/out-of-memory error, 4 runtime error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .service.client import ServiceClient, ServiceError

EXIT_CODES = {"config": 2, "placement": 3, "runtime": 4}


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Hybrid stream-analytics engine and edge-cloud deployment simulator."""


@main.command()
@click.option("--scenario", type=click.Choice(["none", "gradual", "abrupt"]), default="gradual", show_default=True)
@click.option(
    "--deployment",
    type=click.Choice(["edge", "cloud", "edge-cloud", "local"]),
    default="edge-cloud",
    show_default=True,
)
@click.option("--weighting", default="dynamic", show_default=True, help="'dynamic' or 'static:<ws>:<wb>'")
@click.option("--windows", type=int, default=100, show_default=True)
@click.option("--window", "window_rule", default="seconds:30", show_default=True, help="'count:N' or 'seconds:S'")
@click.option("--fidelity", type=click.Choice(["paper", "desk"]), default="desk", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--data", default="synth", show_default=True, help="'synth' or a CSV path")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="report directory")
@click.option("--topology", default="desk", show_default=True, help="topology profile name or JSON path")
@click.option("--server", default=None, help="remote service URL (default: in-process)")
def run(scenario, deployment, weighting, windows, window_rule, fidelity, seed, data, out_dir, topology, server):
    """Run one benchmark scenario and emit its reports."""
    request = {
        "scenario": scenario,
        "deployment": deployment,
        "weighting": weighting,
        "windows": windows,
        "window_rule": window_rule,
        "fidelity": fidelity,
        "seed": seed,
        "data": data,
        "out_dir": out_dir if server is None else None,
        "topology": topology,
        "wait": True,
    }
    try:
        with ServiceClient(server=server) as client:
            record = client.submit_run(request)
            bundle = client.get_report(record["run_id"])
    except ServiceError as exc:
        click.echo(f"error ({exc.error_kind}): {exc}", err=True)
        sys.exit(EXIT_CODES.get(exc.error_kind, 4))

    summary = bundle["summary"]
    if server is not None and out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        (out / "windows.csv").write_text(bundle["windows_csv"])
        if bundle.get("latency_csv"):
            (out / "latency.csv").write_text(bundle["latency_csv"])

    _print_summary(summary)
    if out_dir is not None:
        click.echo(f"reports written to {out_dir}")


def _print_summary(summary: dict) -> None:
    click.echo(f"windows: {summary['n_windows']}  config: {summary['config_hash'][:12]}")
    rmse = summary.get("rmse", {})
    for name in ("speed", "batch", "hybrid"):
        mean = (rmse.get(name) or {}).get("mean_rmse")
        if mean is not None:
            click.echo(f"  mean rmse {name:<7} {mean:.5f}")
    best = summary.get("percentage_best")
    if best:
        click.echo(
            "  best-window share: "
            + "  ".join(f"{name}={best[name]:.3f}" for name in ("speed", "batch", "hybrid"))
        )
    latency = summary.get("latency")
    if latency:
        for phase, cell in latency.items():
            if cell.get("windows"):
                click.echo(
                    f"  latency {phase:<17} comp={cell['computation']:.2f}s "
                    f"comm={cell['communication']:.2f}s total={cell['total']:.2f}s"
                )
    flags = summary.get("flags", {})
    if flags.get("solver_not_converged"):
        click.echo(f"  warning: solver failed to converge on {flags['solver_not_converged']} windows")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8080, show_default=True)
def serve(host: str, port: int) -> None:
    """Start the HTTP service."""
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
