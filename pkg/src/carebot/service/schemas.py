"""Request/response models for the management API."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class RunRequest(BaseModel):
    scenario: str = Field(description="path to the scenario YAML, or a packaged name")
    out_dir: Optional[str] = Field(default=None, description="artifact directory")
    seed: int = 0
    realtime: bool = False


class RunResponse(BaseModel):
    completed: bool
    failure: Optional[str]
    report: dict
    out_dir: Optional[str]


class ValidateRequest(BaseModel):
    scenario: str


class ValidateResponse(BaseModel):
    ok: bool
    diagnostics: list[str]


class ReplayRequest(BaseModel):
    log_dir: str
    plot_dir: Optional[str] = None


class ReplayResponse(BaseModel):
    summary: dict
    plots: list[str]


class HealthResponse(BaseModel):
    status: str
    version: str
