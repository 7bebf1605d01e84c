"""Hydration-site prediction by QUBO optimization over a water density map.

The pipeline discretizes a pocket-sized box into candidate sites, fits
the density with a fixed-width Gaussian per site, encodes the least
squares mixture selection as a QUBO, solves it classically or with a
QAOA simulator, and scores the decoded water positions against
crystallographic references.
"""

__version__ = "0.1.0"

from .density import (DensityGrid, interpolate, interpolate_many, parse_dx,
                      save_dx, synthesize_planted, write_dx)
from .errors import (ConfigError, DegenerateGeometryError, DxFormatError,
                     EmptySiteGridError, HydrositeError, PdbFormatError,
                     QuboFormatError, SolverCapError)
from .evaluation import MetricsReport, build_clusters, compute_metrics, score
from .placement import (WaterPlacement, decode, pca_project, pca_to_csv,
                        write_waters_pdb)
from .pipeline import (RunConfig, RunResult, derive_seed, run_pipeline,
                       run_sweep, write_artifacts)
from .qubo import (IsingModel, QuboModel, build_qubo, data_term, ising_energy,
                   load_qubo, overlap, qubo_cost, read_qubo, to_ising,
                   write_qubo)
from .resources import (GateEstimate, ScalingFit, estimate_gates,
                        extrapolate_gates, fit_gate_scaling)
from .sites import SiteGrid, build_site_grid, sites_to_csv
from .solvers import (SolveResult, local_refine, qaoa_state, solve_exact,
                      solve_greedy, solve_qaoa_sim, solve_sa)
from .structures import (CrystalWaters, PocketBox, filter_to_box,
                         format_waters_pdb, parse_waters, pocket_from_waters)

__all__ = [
    "__version__",
    "ConfigError", "DegenerateGeometryError", "DxFormatError",
    "EmptySiteGridError", "HydrositeError", "PdbFormatError",
    "QuboFormatError", "SolverCapError",
    "DensityGrid", "parse_dx", "write_dx", "save_dx", "interpolate",
    "interpolate_many", "synthesize_planted",
    "CrystalWaters", "PocketBox", "parse_waters", "pocket_from_waters",
    "filter_to_box", "format_waters_pdb",
    "SiteGrid", "build_site_grid", "sites_to_csv",
    "QuboModel", "IsingModel", "build_qubo", "overlap", "data_term",
    "qubo_cost", "to_ising", "ising_energy", "write_qubo", "read_qubo",
    "load_qubo",
    "SolveResult", "solve_exact", "solve_sa", "solve_greedy",
    "solve_qaoa_sim", "qaoa_state", "local_refine",
    "WaterPlacement", "decode", "write_waters_pdb", "pca_project",
    "pca_to_csv",
    "MetricsReport", "build_clusters", "compute_metrics", "score",
    "GateEstimate", "ScalingFit", "estimate_gates", "fit_gate_scaling",
    "extrapolate_gates",
    "RunConfig", "RunResult", "run_pipeline", "run_sweep", "derive_seed",
    "write_artifacts",
]
