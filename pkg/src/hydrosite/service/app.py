"""FastAPI application wrapping the pipeline.

The service is stateless and filesystem-free: every request carries its
inputs inline (density/PDB text, QUBO COO text) and every response
returns artifacts as strings.  Domain errors become HTTP 400 bodies with
a stable error_code; anything unexpected is a 500 internal_error.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, HydrositeError
from ..pipeline import (RunConfig, _error_code_for, derive_seed, run_pipeline,
                        run_sweep, validate_solver_spec)
from ..qubo import read_qubo
from ..resources import estimate_gates, extrapolate_gates, fit_gate_scaling
from ..solvers import solve_exact, solve_greedy, solve_qaoa_sim, solve_sa
from ..structures import parse_waters
from ..evaluation import CSV_HEADER, score
from . import schemas


def _error_response(exc: Exception, status_code: int = 400) -> JSONResponse:
    body = schemas.ErrorBody(error_code=_error_code_for(exc), message=str(exc))
    return JSONResponse(status_code=status_code, content=body.model_dump())


def _dispatch(model, solver: dict, seed: int):
    name = solver["name"]
    params = {k: v for k, v in solver.items() if k != "name"}
    if name == "exact":
        return solve_exact(model)
    if name == "sa":
        return solve_sa(model, seed=seed, **params)
    if name == "greedy":
        return solve_greedy(model, seed=seed, **params)
    return solve_qaoa_sim(model, seed=seed, **params)


def _metrics_dict(report):
    return None if report is None else report.to_dict()


def create_app() -> FastAPI:
    app = FastAPI(title="hydrosite", version=__version__)

    @app.exception_handler(HydrositeError)
    async def domain_error(request: Request, exc: HydrositeError):
        return _error_response(exc)

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        return _error_response(exc, status_code=500)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(version=__version__)

    @app.post("/run", response_model=schemas.RunResponse,
              responses={400: {"model": schemas.ErrorBody}})
    def run(req: schemas.RunRequest):
        config = RunConfig.from_dict(req.config)
        result = run_pipeline(config, density_text=req.density_text,
                              pdb_text=req.pdb_text)
        return schemas.RunResponse(
            n_vars=result.n_vars, n_couplings=result.n_couplings,
            total_gates=result.total_gates,
            best_cost=result.solve.best_cost,
            best_bitstring=result.solve.best_bitstring,
            metrics=_metrics_dict(result.metrics),
            artifacts=result.artifacts, timings=result.timings)

    @app.post("/sweep", response_model=schemas.SweepResponse,
              responses={400: {"model": schemas.ErrorBody}})
    def sweep(req: schemas.SweepRequest):
        base = RunConfig.from_dict(req.config)
        result = run_sweep(base, req.axes, max_workers=req.max_workers,
                           fit_target_n=req.fit_target_n,
                           density_text=req.density_text, pdb_text=req.pdb_text)
        rows = []
        for row in result.rows:
            rows.append({
                "index": row.index, "overrides": row.overrides,
                "status": row.status, "error_code": row.error_code,
                "message": row.message, "n_vars": row.n_vars,
                "coupling_edges": row.coupling_edges,
                "total_gates": row.total_gates, "runtime_s": row.runtime_s,
                "metrics": _metrics_dict(row.metrics),
                "artifacts": row.artifacts,
            })
        return schemas.SweepResponse(csv_text=result.csv_text, rows=rows,
                                     fit=result.fit)

    @app.post("/solve", response_model=schemas.SolveResponse,
              responses={400: {"model": schemas.ErrorBody}})
    def solve(req: schemas.SolveRequest):
        sidecar = None if req.sidecar is None else json.dumps(req.sidecar)
        model = read_qubo(req.coo_text, sidecar)
        solver = validate_solver_spec(req.solver)
        result = _dispatch(model, solver, derive_seed(req.seed, "solver"))
        return schemas.SolveResponse(result=json.loads(result.to_json()))

    @app.post("/score", response_model=schemas.ScoreResponse,
              responses={400: {"model": schemas.ErrorBody}})
    def score_waters(req: schemas.ScoreRequest):
        crystal = parse_waters(req.crystal_pdb)
        predicted = parse_waters(req.predicted_pdb)
        if len(crystal) == 0:
            raise ConfigError("crystal PDB contains no waters; "
                              "metrics need at least one reference")
        if req.radius <= 0:
            raise ConfigError(f"radius must be positive, got {req.radius}")
        report = score(crystal.positions, predicted.positions, radius=req.radius)
        return schemas.ScoreResponse(metrics=report.to_dict(),
                                     csv_header=CSV_HEADER,
                                     csv_row=report.to_csv_row())

    @app.post("/estimate", response_model=schemas.EstimateResponse,
              responses={400: {"model": schemas.ErrorBody}})
    def estimate(req: schemas.EstimateRequest):
        if not req.qubos:
            raise ConfigError("estimate needs at least one QUBO")
        if req.gates_per_edge < 1:
            raise ConfigError(f"gates_per_edge must be >= 1, got {req.gates_per_edge}")
        if req.routing_factor <= 0:
            raise ConfigError(f"routing_factor must be positive, "
                              f"got {req.routing_factor}")
        estimates = []
        for idx, payload in enumerate(req.qubos):
            sidecar = None if payload.sidecar is None else json.dumps(payload.sidecar)
            model = read_qubo(payload.coo_text, sidecar)
            est = estimate_gates(model, gates_per_edge=req.gates_per_edge,
                                 routing_factor=req.routing_factor)
            estimates.append({
                "label": payload.label or f"qubo_{idx}",
                "n_vars": est.n_vars, "coupling_edges": est.coupling_edges,
                "gates_per_edge": est.gates_per_edge,
                "routing_factor": est.routing_factor,
                "total_gates": est.total_gates,
            })
        fit = None
        if req.target_n is not None:
            ns = [e["n_vars"] for e in estimates]
            if len(set(ns)) < 3:
                raise ConfigError("scaling fit needs at least 3 distinct "
                                  "variable counts; got "
                                  f"{sorted(set(ns))}")
            fitted = fit_gate_scaling(ns, [e["total_gates"] for e in estimates])
            fit = {"a": fitted.a, "b": fitted.b, "c": fitted.c,
                   "residual_rms": fitted.residual_rms, "convex": fitted.convex,
                   "n_points": fitted.n_points, "target_n": req.target_n,
                   "projected_gates": extrapolate_gates(fitted, req.target_n)}
        return schemas.EstimateResponse(estimates=estimates, fit=fit)

    return app


app = create_app()
