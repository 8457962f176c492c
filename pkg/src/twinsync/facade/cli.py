"""Command line entry points: run, report, serve, decide."""

import json
import sys

import click

from twinsync.controlblock import (
    AUTO_MODE,
    TERMINAL_BLOCKED,
    TERMINAL_COMPLETED,
    TERMINAL_WATCHDOG,
    RunLog,
    metrics_report,
    run_scenario,
)
from twinsync.errors import ConfigError, DomainError, UndefinedMetricError
from twinsync.facade.config import load_scenario, parse_scenario

EXIT_CODES = {TERMINAL_COMPLETED: 0, TERMINAL_BLOCKED: 2, TERMINAL_WATCHDOG: 3}


@click.group()
def main():
    """Digital-twin pair synchronization engine."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Scenario JSON.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="CSV log output path.")
@click.option("--auto-approve", is_flag=True, help="Override hitl_mode to auto-approve.")
def run(config_path, out_path, auto_approve):
    """Execute a scenario; writes the CSV log and a metrics report.

    Exit code: 0 completed, 1 invalid config, 2 blocked, 3 watchdog timeout.
    """
    try:
        if auto_approve:
            with open(config_path) as fh:
                doc = json.load(fh)
            doc["hitl_mode"] = AUTO_MODE
            config = parse_scenario(doc)
        else:
            config = load_scenario(config_path)
    except ConfigError as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(1)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(1)

    log = run_scenario(config)
    log.write_csv(out_path)
    report = metrics_report(log)
    metrics_path = f"{out_path}.metrics.json"
    with open(metrics_path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    click.echo(
        f"{config.name}: {log.terminal_state} after {len(log.rows)} ticks; "
        f"log -> {out_path}, metrics -> {metrics_path}"
    )
    sys.exit(EXIT_CODES[log.terminal_state])


@main.command()
@click.argument("log_path", type=click.Path())
def report(log_path):
    """Recompute the metrics report from a CSV log alone."""
    try:
        log = RunLog.from_csv(log_path)
        rep = metrics_report(log)
    except (DomainError, UndefinedMetricError, OSError) as exc:
        click.echo(f"cannot report on {log_path}: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(rep.to_dict(), indent=2))


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option(
    "--speed",
    default=1.0,
    show_default=True,
    help="Simulated ms per wall ms; 0 runs flat out.",
)
def serve(config_path, port, host, speed):
    """Serve live state, metrics, the stream, and decision endpoints."""
    import uvicorn

    from twinsync.facade.service import ServiceRuntime, create_app

    try:
        config = load_scenario(config_path)
    except ConfigError as exc:
        click.echo(f"invalid config: {exc}", err=True)
        sys.exit(1)
    runtime = ServiceRuntime(config, speed=speed)
    app = create_app(runtime)

    @app.on_event("startup")
    def _start():
        runtime.start_run()

    @app.on_event("shutdown")
    def _stop():
        runtime.shutdown()

    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.argument("plan_id")
@click.argument("verdict", type=click.Choice(["approve", "reject"]))
@click.option("--actor", required=True, help="Operator identifier for the audit record.")
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
def decide(plan_id, verdict, actor, url):
    """Submit a decision for a pending plan on a running service."""
    import httpx

    try:
        resp = httpx.post(
            f"{url}/api/pending/{plan_id}/decision",
            json={"verdict": verdict, "actor": actor},
            timeout=10.0,
        )
    except httpx.HTTPError as exc:
        click.echo(f"decision failed: {exc}", err=True)
        sys.exit(1)
    if resp.status_code != 200:
        click.echo(f"decision rejected ({resp.status_code}): {resp.text}", err=True)
        sys.exit(1)
    plan = resp.json()["plan"]
    click.echo(f"{plan['id']}: {plan['status']} (actor {actor})")
