"""End-to-end runs: density + waters -> sites -> QUBO -> solve -> score.

A run emits a fixed artifact set (sites.csv, qubo.coo, qubo.json,
solve_result.json, predicted_waters.pdb, metrics.json, pca.csv,
manifest.json).  Everything except manifest.json is byte-deterministic
for a fixed config + seed; wall-clock timings, library versions and
timestamps live only in the manifest.  All randomness flows from the
config seed through derive_seed, which hashes the component name with
the root seed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import itertools
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .density import parse_dx
from .errors import ConfigError, DegenerateGeometryError, HydrositeError
from .evaluation import CSV_HEADER, MetricsReport, score
from .placement import decode, pca_project, pca_to_csv, write_waters_pdb
from .qubo import build_qubo, write_qubo
from .resources import estimate_gates, extrapolate_gates, fit_gate_scaling
from .sites import build_site_grid, sites_to_csv
from .solvers import (EXACT_MAX_VARS, QAOA_MAX_VARS, SolveResult, solve_exact,
                      solve_greedy, solve_qaoa_sim, solve_sa)
from .errors import SolverCapError
from .structures import PocketBox, filter_to_box, parse_waters, pocket_from_waters

ARTIFACT_NAMES = ("sites.csv", "qubo.coo", "qubo.json", "solve_result.json",
                  "predicted_waters.pdb", "metrics.json", "pca.csv",
                  "manifest.json")

_SOLVER_PARAMS = {
    "exact": frozenset(),
    "sa": frozenset({"num_reads", "sweeps", "beta_hot", "beta_cold"}),
    "greedy": frozenset({"num_reads"}),
    "qaoa": frozenset({"layers", "shots", "max_iters"}),
}

_SWEEP_AXES = ("delta", "tau_g", "sigma2", "solver")


def derive_seed(root_seed: int, component: str) -> int:
    """Stable per-component seed: first 8 bytes of sha256(root:component)."""
    digest = hashlib.sha256(f"{root_seed}:{component}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters for one pipeline run."""

    delta: float
    tau_g: float
    sigma2: float
    density_path: str | None = None
    pdb_path: str | None = None
    pocket: object = "from-waters"   # or an explicit [x, y, z] center
    side: float = 15.0
    amplitude: float = 1.0
    truncation_eps: float = 1e-8
    radius: float = 3.0
    solver: dict = field(default_factory=lambda: {"name": "sa"})
    seed: int = 0
    output_dir: str | None = None

    _FIELDS = ("delta", "tau_g", "sigma2", "density_path", "pdb_path", "pocket",
               "side", "amplitude", "truncation_eps", "radius", "solver",
               "seed", "output_dir")

    def __post_init__(self):
        _validate_config(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"config must be a JSON object, got {type(raw).__name__}")
        unknown = sorted(set(raw) - set(cls._FIELDS))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        missing = [k for k in ("delta", "tau_g", "sigma2") if k not in raw]
        if missing:
            raise ConfigError(f"missing required config key(s): {', '.join(missing)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("output_dir")
        return d


def _validate_config(cfg: RunConfig) -> None:
    def positive(name, value):
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be a number, got {value!r}") from None
        if not v > 0 or not np.isfinite(v):
            raise ConfigError(f"{name} must be positive, got {value}")
        return v

    object.__setattr__(cfg, "delta", positive("delta", cfg.delta))
    object.__setattr__(cfg, "sigma2", positive("sigma2", cfg.sigma2))
    object.__setattr__(cfg, "side", positive("side", cfg.side))
    object.__setattr__(cfg, "amplitude", positive("amplitude", cfg.amplitude))
    object.__setattr__(cfg, "radius", positive("radius", cfg.radius))
    try:
        tau = float(cfg.tau_g)
    except (TypeError, ValueError):
        raise ConfigError(f"tau_g must be a number, got {cfg.tau_g!r}") from None
    if tau < 0 or not np.isfinite(tau):
        raise ConfigError(f"tau_g must be >= 0, got {cfg.tau_g}")
    object.__setattr__(cfg, "tau_g", tau)
    try:
        eps = float(cfg.truncation_eps)
    except (TypeError, ValueError):
        raise ConfigError(f"truncation_eps must be a number, "
                          f"got {cfg.truncation_eps!r}") from None
    if eps < 0:
        raise ConfigError(f"truncation_eps must be >= 0, got {cfg.truncation_eps}")
    object.__setattr__(cfg, "truncation_eps", eps)
    if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool):
        raise ConfigError(f"seed must be an integer, got {cfg.seed!r}")

    pocket = cfg.pocket
    if isinstance(pocket, str):
        if pocket != "from-waters":
            raise ConfigError(f"pocket must be 'from-waters' or an [x, y, z] "
                              f"center, got {pocket!r}")
    else:
        try:
            center = [float(v) for v in pocket]
        except (TypeError, ValueError):
            raise ConfigError(f"pocket center must be three numbers, "
                              f"got {pocket!r}") from None
        if len(center) != 3:
            raise ConfigError(f"pocket center must have 3 coordinates, "
                              f"got {len(center)}")
        object.__setattr__(cfg, "pocket", center)

    validate_solver_spec(cfg.solver)


def validate_solver_spec(solver) -> dict:
    """Check a solver spec dict ({'name': ..., params...}); returns it."""
    if not isinstance(solver, dict) or "name" not in solver:
        raise ConfigError("solver must be an object with a 'name' key")
    name = solver["name"]
    if name not in _SOLVER_PARAMS:
        raise ConfigError(f"unknown solver {name!r}; choose from "
                          f"{sorted(_SOLVER_PARAMS)}")
    extra = sorted(set(solver) - {"name"} - _SOLVER_PARAMS[name])
    if extra:
        raise ConfigError(f"unknown {name} solver parameter(s): {', '.join(extra)}")
    for key in ("num_reads", "sweeps", "layers", "shots", "max_iters"):
        if key in solver:
            v = solver[key]
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"solver {key} must be a positive integer, "
                                  f"got {v!r}")
    for key in ("beta_hot", "beta_cold"):
        if key in solver and solver[key] is not None:
            v = solver[key]
            try:
                fv = float(v)
            except (TypeError, ValueError):
                raise ConfigError(f"solver {key} must be a number, got {v!r}") from None
            if not fv > 0:
                raise ConfigError(f"solver {key} must be positive, got {v}")
    return solver


def _dispatch_solver(model, solver: dict, seed: int) -> SolveResult:
    name = solver["name"]
    params = {k: v for k, v in solver.items() if k != "name"}
    if name == "exact":
        return solve_exact(model)
    if name == "sa":
        return solve_sa(model, seed=seed, **params)
    if name == "greedy":
        return solve_greedy(model, seed=seed, **params)
    return solve_qaoa_sim(model, seed=seed, **params)


@dataclass
class RunResult:
    config: dict
    n_vars: int
    n_couplings: int
    total_gates: int
    artifacts: dict
    solve: SolveResult
    metrics: MetricsReport | None
    timings: dict


def run_pipeline(config: RunConfig, density_text: str | None = None,
                 pdb_text: str | None = None) -> RunResult:
    """Execute one full run and return its artifacts in memory.

    Inputs come from config paths unless the corresponding text is passed
    directly (the service path).  Raises the package's typed errors for
    bad inputs; callers map them to exit codes / HTTP errors.
    """
    t_start = time.perf_counter()
    if density_text is None:
        if config.density_path is None:
            raise ConfigError("no density: config.density_path is missing")
        density_text = config.density_path
    if pdb_text is None:
        if config.pdb_path is None:
            raise ConfigError("no waters: config.pdb_path is missing")
        pdb_text = config.pdb_path
    density = parse_dx(density_text)
    waters_all = parse_waters(pdb_text)

    if config.pocket == "from-waters":
        if len(waters_all) == 0:
            raise ConfigError("pocket is 'from-waters' but the PDB has no waters; "
                              "give an explicit pocket center")
        box = pocket_from_waters(waters_all, side=config.side)
    else:
        box = PocketBox(center=np.asarray(config.pocket), side=config.side)
    cw = filter_to_box(waters_all, box)

    t0 = time.perf_counter()
    grid = build_site_grid(density, box, config.delta, config.tau_g, config.sigma2)
    name = config.solver["name"]
    if name == "exact" and grid.n > EXACT_MAX_VARS:
        raise SolverCapError(
            f"site grid has {grid.n} variables, above the exact solver cap "
            f"{EXACT_MAX_VARS}; shrink the box or raise delta/tau_g")
    if name == "qaoa" and grid.n > QAOA_MAX_VARS:
        raise SolverCapError(
            f"site grid has {grid.n} variables, above the QAOA cap "
            f"{QAOA_MAX_VARS}; shrink the box or raise delta/tau_g")
    model = build_qubo(grid, density, truncation_eps=config.truncation_eps,
                       amplitude=config.amplitude, box=box)
    t_build = time.perf_counter() - t0

    t0 = time.perf_counter()
    result = _dispatch_solver(model, config.solver, derive_seed(config.seed, "solver"))
    t_solve = time.perf_counter() - t0

    placement = decode(result.best_bitstring, grid)
    notes = []
    if len(cw) == 0:
        metrics = None
        metrics_json = json.dumps(
            {"defined": False, "reason": "no reference waters in pocket box",
             "n": 0, "m": placement.count}, sort_keys=True, indent=2) + "\n"
        notes.append("evaluation skipped: no reference waters in pocket box")
    else:
        metrics = score(cw.positions, placement.positions, radius=config.radius)
        metrics_json = metrics.to_json()

    try:
        if len(cw) == 0:
            raise DegenerateGeometryError("no reference waters")
        proj = pca_project(cw.positions, placement.positions)
        pca_csv = pca_to_csv(proj, cw_labels=cw.labels)
    except DegenerateGeometryError as exc:
        pca_csv = "set,label,pc1,pc2\n"
        notes.append(f"pca skipped: {exc}")

    coo_text, sidecar_text = write_qubo(model)
    timings = {"build_s": t_build, "solve_s": t_solve,
               "total_s": time.perf_counter() - t_start}
    manifest = {
        "config": config.to_dict(),
        "package_version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "n_vars": grid.n,
        "n_couplings": model.n_couplings,
        "solver_wall_time_s": result.wall_time,
        "timings": timings,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "notes": notes,
    }
    artifacts = {
        "sites.csv": sites_to_csv(grid),
        "qubo.coo": coo_text,
        "qubo.json": sidecar_text,
        "solve_result.json": result.to_json(),
        "predicted_waters.pdb": write_waters_pdb(placement),
        "metrics.json": metrics_json,
        "pca.csv": pca_csv,
        "manifest.json": json.dumps(manifest, sort_keys=True, indent=2) + "\n",
    }
    return RunResult(config=config.to_dict(), n_vars=grid.n,
                     n_couplings=model.n_couplings,
                     total_gates=estimate_gates(model).total_gates,
                     artifacts=artifacts, solve=result, metrics=metrics,
                     timings=timings)


def write_artifacts(artifacts: dict, output_dir) -> None:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in artifacts.items():
        (out / name).write_text(text)


# ----------------------------------------------------------------------
# Parameter sweeps
# ----------------------------------------------------------------------

@dataclass
class SweepRow:
    index: int
    overrides: dict
    status: str
    error_code: str | None
    message: str | None
    n_vars: int | None
    coupling_edges: int | None
    total_gates: int | None
    runtime_s: float
    metrics: MetricsReport | None
    artifacts: dict | None


@dataclass
class SweepResult:
    rows: list
    csv_text: str
    fit: dict | None


def _error_code_for(exc) -> str:
    from .errors import (DxFormatError, EmptySiteGridError, PdbFormatError,
                         QuboFormatError)
    if isinstance(exc, ConfigError):
        return "config_error"
    if isinstance(exc, (DxFormatError, PdbFormatError, QuboFormatError)):
        return "parse_error"
    if isinstance(exc, EmptySiteGridError):
        return "empty_site_grid"
    if isinstance(exc, SolverCapError):
        return "solver_cap"
    return "internal_error"


def run_sweep(base: RunConfig, axes: dict, max_workers: int = 1,
              fit_target_n: int | None = None, density_text: str | None = None,
              pdb_text: str | None = None) -> SweepResult:
    """Run the cartesian product of parameter lists over a base config.

    Axes may list values for delta, tau_g, sigma2, and solver.  Each
    combination is one full pipeline run; failures are recorded per row
    and never abort the sweep.  Rows are ordered by the product order
    regardless of how workers schedule them.
    """
    if not isinstance(axes, dict):
        raise ConfigError("sweep axes must be an object of parameter lists")
    unknown = sorted(set(axes) - set(_SWEEP_AXES))
    if unknown:
        raise ConfigError(f"unknown sweep axis(es): {', '.join(unknown)}; "
                          f"allowed: {', '.join(_SWEEP_AXES)}")
    if max_workers < 1:
        raise ConfigError(f"max_workers must be >= 1, got {max_workers}")
    lists = []
    for axis in _SWEEP_AXES:
        vals = axes.get(axis)
        if vals is None:
            lists.append([None])
            continue
        if not isinstance(vals, (list, tuple)) or len(vals) == 0:
            raise ConfigError(f"sweep axis {axis} must be a non-empty list")
        if axis == "solver":
            # bare names are sugar for {"name": ...}
            vals = [{"name": v} if isinstance(v, str) else v for v in vals]
        lists.append(list(vals))
    combos = list(itertools.product(*lists))

    def one(index_combo):
        index, combo = index_combo
        overrides = {axis: v for axis, v in zip(_SWEEP_AXES, combo) if v is not None}
        t0 = time.perf_counter()
        try:
            cfg = dataclasses.replace(base, **overrides)
            run = run_pipeline(cfg, density_text=density_text, pdb_text=pdb_text)
            return SweepRow(index=index, overrides=overrides, status="ok",
                            error_code=None, message=None, n_vars=run.n_vars,
                            coupling_edges=run.n_couplings,
                            total_gates=run.total_gates,
                            runtime_s=time.perf_counter() - t0,
                            metrics=run.metrics, artifacts=run.artifacts)
        except Exception as exc:  # recorded per row, sweep continues
            return SweepRow(index=index, overrides=overrides, status="error",
                            error_code=_error_code_for(exc), message=str(exc),
                            n_vars=None, coupling_edges=None, total_gates=None,
                            runtime_s=time.perf_counter() - t0,
                            metrics=None, artifacts=None)

    tasks = list(enumerate(combos))
    if max_workers == 1:
        rows = [one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(one, tasks))
    rows.sort(key=lambda r: r.index)

    header = ("row,delta,tau_g,sigma2,solver,status,error,n_vars,"
              "coupling_edges,total_gates,runtime_s," + CSV_HEADER)
    lines = [header]
    for row in rows:
        cfg_vals = {**{"delta": base.delta, "tau_g": base.tau_g,
                       "sigma2": base.sigma2, "solver": base.solver},
                    **row.overrides}
        metric_cells = (row.metrics.to_csv_row() if row.metrics is not None
                        else "," * (CSV_HEADER.count(",")))
        lines.append(",".join([
            str(row.index),
            f"{cfg_vals['delta']:.6g}", f"{cfg_vals['tau_g']:.6g}",
            f"{cfg_vals['sigma2']:.6g}", cfg_vals["solver"]["name"],
            row.status, row.error_code or "",
            "" if row.n_vars is None else str(row.n_vars),
            "" if row.coupling_edges is None else str(row.coupling_edges),
            "" if row.total_gates is None else str(row.total_gates),
            f"{row.runtime_s:.3f}",
            metric_cells,
        ]))
    csv_text = "\n".join(lines) + "\n"

    fit = None
    ok = [(r.n_vars, r.total_gates) for r in rows if r.status == "ok"]
    if fit_target_n is not None:
        ns = [n for n, _ in ok]
        if len(set(ns)) >= 3:
            fitted = fit_gate_scaling(ns, [g for _, g in ok])
            fit = {"a": fitted.a, "b": fitted.b, "c": fitted.c,
                   "residual_rms": fitted.residual_rms, "convex": fitted.convex,
                   "n_points": fitted.n_points, "target_n": int(fit_target_n),
                   "projected_gates": extrapolate_gates(fitted, int(fit_target_n))}
    return SweepResult(rows=rows, csv_text=csv_text, fit=fit)
