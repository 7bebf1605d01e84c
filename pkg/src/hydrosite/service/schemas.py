"""Request and response models for the HTTP endpoints.

All inputs travel inline: density maps and PDB files are passed as text
fields, QUBOs as COO text plus an optional sidecar dict.  The service
never touches the filesystem; clients decide what to persist.
"""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RunRequest(_Strict):
    config: dict[str, Any]
    density_text: Optional[str] = None
    pdb_text: Optional[str] = None


class RunResponse(BaseModel):
    status: str = "ok"
    n_vars: int
    n_couplings: int
    total_gates: int
    best_cost: float
    best_bitstring: str
    metrics: Optional[dict[str, Any]] = None
    artifacts: dict[str, str]
    timings: dict[str, float]


class ErrorBody(BaseModel):
    status: str = "error"
    error_code: str
    message: str


class SolveRequest(_Strict):
    coo_text: str
    sidecar: Optional[dict[str, Any]] = None
    solver: dict[str, Any] = Field(default_factory=lambda: {"name": "sa"})
    seed: int = 0


class SolveResponse(BaseModel):
    status: str = "ok"
    result: dict[str, Any]


class ScoreRequest(_Strict):
    crystal_pdb: str
    predicted_pdb: str
    radius: float = 3.0


class ScoreResponse(BaseModel):
    status: str = "ok"
    metrics: dict[str, Any]
    csv_header: str
    csv_row: str


class QuboPayload(_Strict):
    coo_text: str
    sidecar: Optional[dict[str, Any]] = None
    label: Optional[str] = None


class EstimateRequest(_Strict):
    qubos: list[QuboPayload]
    gates_per_edge: int = 2
    routing_factor: float = 3.0
    target_n: Optional[int] = None


class EstimateResponse(BaseModel):
    status: str = "ok"
    estimates: list[dict[str, Any]]
    fit: Optional[dict[str, Any]] = None


class SweepRequest(_Strict):
    config: dict[str, Any]
    axes: dict[str, list[Any]]
    density_text: Optional[str] = None
    pdb_text: Optional[str] = None
    max_workers: int = 1
    fit_target_n: Optional[int] = None


class SweepResponse(BaseModel):
    status: str = "ok"
    csv_text: str
    rows: list[dict[str, Any]]
    fit: Optional[dict[str, Any]] = None


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str
