"""Command line entry points: thin client of the management service.

Subcommands talk to the FastAPI app in process by default (deterministic,
no sockets) or to a remote instance via --server. Exit codes are a stable
contract: 0 success, 1 scenario failure, 2 configuration error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

EXIT_OK = 0
EXIT_SCENARIO_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


@click.group(context_settings={"auto_envvar_prefix": "CAREBOT"})
def main():
    """Nursing-robot scenario runner, teleop server, and log tools."""


@main.command()
@click.option("--scenario", required=True, help="scenario YAML path or packaged name")
@click.option("--out", "out_dir", default=None, help="artifact directory")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--realtime", is_flag=True, default=False,
              help="pace the simulation to wall clock")
@click.option("--validate-only", is_flag=True, default=False,
              help="validate the scenario and exit")
@click.option("--server", default=None, help="remote service URL (default: in-process)")
def run(scenario, out_dir, seed, realtime, validate_only, server):
    """Run a scenario end to end and write its report and logs."""
    with _client(server) as client:
        if validate_only:
            sys.exit(_validate(client, scenario))
        resp = client.post("/runs", json={"scenario": scenario, "out_dir": out_dir,
                                          "seed": seed, "realtime": realtime})
        if resp.status_code == 404:
            click.echo(f"error: {resp.json()['detail']}", err=True)
            sys.exit(EXIT_CONFIG_ERROR)
        if resp.status_code == 422:
            click.echo(f"config error: {resp.json()['detail']}", err=True)
            sys.exit(EXIT_CONFIG_ERROR)
        resp.raise_for_status()
        body = resp.json()
        click.echo(json.dumps(body["report"], indent=2, sort_keys=True))
        if not body["completed"]:
            click.echo(f"scenario failed: {body['failure']}", err=True)
            sys.exit(EXIT_SCENARIO_FAILURE)
    sys.exit(EXIT_OK)


def _validate(client, scenario) -> int:
    resp = client.post("/validate", json={"scenario": scenario})
    if resp.status_code == 404:
        click.echo(f"error: {resp.json()['detail']}", err=True)
        return EXIT_CONFIG_ERROR
    body = resp.json()
    for line in body["diagnostics"]:
        click.echo(line)
    if body["ok"]:
        click.echo("scenario OK")
        return EXIT_OK
    return EXIT_CONFIG_ERROR


@main.command()
@click.option("--scenario", required=True)
@click.option("--server", default=None)
def validate(scenario, server):
    """Validate a scenario config without running it."""
    with _client(server) as client:
        sys.exit(_validate(client, scenario))


@main.command()
@click.argument("log_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--plots", "plot_dir", default=None, help="plot output directory")
@click.option("--server", default=None)
def replay(log_dir, plot_dir, server):
    """Summarize a run's logs and render plot images."""
    with _client(server) as client:
        resp = client.post("/replay", json={"log_dir": str(Path(log_dir).resolve()),
                                            "plot_dir": plot_dir})
        resp.raise_for_status()
        body = resp.json()
        click.echo(json.dumps(body["summary"], indent=2, sort_keys=True))
        for p in body["plots"]:
            click.echo(f"wrote {p}")
    sys.exit(EXIT_OK)


@main.command()
@click.option("--scenario", required=True, help="scenario to run interactively")
@click.option("--port", default=8765, type=int, show_default=True,
              help="teleop TCP/WebSocket port")
@click.option("--http-port", default=8000, type=int, show_default=True,
              help="management API / console port")
@click.option("--out", "out_dir", default=None)
@click.option("--seed", default=0, type=int)
@click.option("--ui-dir", default=None, help="operator console static assets")
def serve(scenario, port, http_port, out_dir, seed, ui_dir):
    """Run the scenario in real time with the teleop endpoint open.

    The management API (and the operator console, if assets are provided)
    is served in a background thread while the simulation paces itself to
    the wall clock.
    """
    import threading

    import uvicorn

    from .service import create_app, resolve_scenario_path
    from .teleop.server import TeleopServer
    from .world.scenario import load_scenario, run_scenario

    try:
        cfg = load_scenario(resolve_scenario_path(scenario))
    except Exception as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)

    app = create_app(ui_dir=Path(ui_dir) if ui_dir else None)
    http_thread = threading.Thread(
        target=uvicorn.run, kwargs={"app": app, "host": "0.0.0.0", "port": http_port,
                                    "log_level": "warning"}, daemon=True)
    http_thread.start()
    teleop = TeleopServer(port=port)
    teleop.start()
    click.echo(f"teleop endpoint on :{teleop.port}, management API on :{http_port}")
    try:
        report = run_scenario(cfg, seed=seed, out_dir=out_dir, realtime=True,
                              teleop_server=teleop)
    finally:
        teleop.stop()
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    sys.exit(EXIT_OK if report.completed else EXIT_SCENARIO_FAILURE)


if __name__ == "__main__":
    main()
