"""Management service: scenario runs, validation, and replay over HTTP.

The CLI drives this app in-process; `carebot serve` exposes it on the
network together with the operator console's static assets (when built).
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..logs import render_plots, replay_summary
from ..world.scenario import ScenarioError, load_scenario, run_scenario, validate_scenario
from .schemas import (
    HealthResponse,
    ReplayRequest,
    ReplayResponse,
    RunRequest,
    RunResponse,
    ValidateRequest,
    ValidateResponse,
)


def resolve_scenario_path(name: str) -> Path:
    """A filesystem path, or the name of a packaged scenario (without .yaml)."""
    path = Path(name)
    if path.exists():
        return path
    packaged = resources.files("carebot.data") / f"{name}.yaml"
    try:
        if packaged.is_file():
            return Path(str(packaged))
    except (ModuleNotFoundError, FileNotFoundError):
        pass
    raise FileNotFoundError(f"scenario not found: {name}")


def create_app(ui_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="carebot", version=__version__)

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        return HealthResponse(status="ok", version=__version__)

    @app.post("/runs", response_model=RunResponse)
    def runs(req: RunRequest):
        try:
            path = resolve_scenario_path(req.scenario)
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        try:
            cfg = load_scenario(path)
            issues = validate_scenario(cfg)
            if issues:
                raise ScenarioError("; ".join(issues))
        except ScenarioError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        report = run_scenario(cfg, seed=req.seed, out_dir=req.out_dir,
                              realtime=req.realtime)
        return RunResponse(completed=report.completed, failure=report.failure,
                           report=report.to_dict(), out_dir=req.out_dir)

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ValidateRequest):
        try:
            path = resolve_scenario_path(req.scenario)
        except FileNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        try:
            cfg = load_scenario(path)
        except ScenarioError as exc:
            return ValidateResponse(ok=False, diagnostics=[str(exc)])
        issues = validate_scenario(cfg)
        return ValidateResponse(ok=not issues, diagnostics=issues)

    @app.post("/replay", response_model=ReplayResponse)
    def replay(req: ReplayRequest):
        log_dir = Path(req.log_dir)
        if not log_dir.is_dir():
            raise HTTPException(status_code=404, detail=f"no such log dir: {log_dir}")
        summary = replay_summary(log_dir)
        plot_dir = Path(req.plot_dir) if req.plot_dir else log_dir / "plots"
        plots = [str(p) for p in render_plots(log_dir, plot_dir)]
        return ReplayResponse(summary=summary, plots=plots)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
