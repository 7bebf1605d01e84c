"""Hardware cost model: two-qubit gate counts and their scaling with size.

The estimate is deliberately simple: every stored coupling needs
gates_per_edge two-qubit gates per cost layer, inflated by a routing
factor for limited connectivity.  It is a model, not a compiler; the
useful signal is how the count scales with variable count, which for
fixed-radius interaction graphs in a fixed box is quadratic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qubo import QuboModel


@dataclass(frozen=True)
class GateEstimate:
    n_vars: int
    coupling_edges: int
    gates_per_edge: int
    routing_factor: float
    total_gates: int


def estimate_gates(model: QuboModel, gates_per_edge: int = 2,
                   routing_factor: float = 3.0) -> GateEstimate:
    """Two-qubit gate count for one cost layer of the model."""
    if gates_per_edge < 1:
        raise ValueError(f"gates_per_edge must be >= 1, got {gates_per_edge}")
    if routing_factor <= 0:
        raise ValueError(f"routing_factor must be positive, got {routing_factor}")
    edges = model.n_couplings
    total = int(round(gates_per_edge * routing_factor * edges))
    return GateEstimate(n_vars=model.n, coupling_edges=edges,
                        gates_per_edge=gates_per_edge,
                        routing_factor=routing_factor, total_gates=total)


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares quadratic total_gates ~ a N^2 + b N + c."""

    a: float
    b: float
    c: float
    residual_rms: float
    n_points: int
    convex: bool  # a >= 0; a negative curvature fit is flagged, not rejected

    def predict(self, n) -> float:
        return float(self.a * n * n + self.b * n + self.c)


def fit_gate_scaling(n_vars, totals) -> ScalingFit:
    """Fit a quadratic to (N, total_gates) sweep points.

    Raises:
        ValueError: Fewer than 3 points or fewer than 3 distinct N values.
    """
    ns = np.asarray(n_vars, dtype=np.float64).reshape(-1)
    ys = np.asarray(totals, dtype=np.float64).reshape(-1)
    if ns.size != ys.size:
        raise ValueError("n_vars and totals must have the same length")
    if ns.size < 3:
        raise ValueError(f"need at least 3 sweep points, got {ns.size}")
    if np.unique(ns).size < 3:
        raise ValueError("need at least 3 distinct N values for a quadratic fit")
    coeffs = np.polyfit(ns, ys, 2)
    pred = np.polyval(coeffs, ns)
    rms = float(np.sqrt(np.mean((pred - ys) ** 2)))
    a, b, c = (float(v) for v in coeffs)
    return ScalingFit(a=a, b=b, c=c, residual_rms=rms, n_points=int(ns.size),
                      convex=a >= 0.0)


def extrapolate_gates(fit: ScalingFit, n: int) -> int:
    """Projected gate count at N variables, floored at zero."""
    return max(0, int(round(fit.predict(n))))
