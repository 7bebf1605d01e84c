"""QUBO solvers: exact enumeration, simulated annealing, greedy descent,
and a state-vector QAOA simulator.

All solvers speak the same SolveResult dialect: a histogram of sampled
bitstrings (variable 0 written leftmost), their costs, and the best state
seen.  Cost ties are broken toward the smallest integer encoding with
variable 0 as the least significant bit, i.e. solutions using
lower-indexed variables win.  Every solver is deterministic for a fixed
seed; stochastic solvers derive per-chunk/per-read streams from the root
seed so read counts can change without reshuffling earlier reads.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .errors import SolverCapError
from .qubo import QuboModel, qubo_cost_many, to_ising

EXACT_MAX_VARS = 28   # 2^28 evaluations; beyond this enumeration is pointless
QAOA_MAX_VARS = 22    # 2^22 complex amplitudes
_DENSE_LIMIT = 4096   # densify couplings below this many variables
_READ_CHUNK = 1024


@dataclass(frozen=True)
class SolveResult:
    """Histogram-shaped outcome of one solver invocation."""

    solver: str
    n: int
    samples: dict            # bitstring -> count
    costs: dict              # bitstring -> cost
    best_bitstring: str
    best_cost: float
    total_samples: int
    wall_time: float
    seed: int
    params: dict = field(default_factory=dict)

    def to_json(self, include_wall_time: bool = False) -> str:
        """Deterministic JSON export; wall time is opt-in so artifacts
        produced from the same seed compare byte-for-byte."""
        hist = sorted(self.samples,
                      key=lambda b: (self.costs[b], _bit_encoding(b)))
        payload = {
            "solver": self.solver,
            "n": self.n,
            "seed": self.seed,
            "parameters": self.params,
            "total_samples": self.total_samples,
            "best": {"bitstring": self.best_bitstring, "cost": self.best_cost},
            "histogram": [
                {"bitstring": b, "count": self.samples[b], "cost": self.costs[b]}
                for b in hist
            ],
        }
        if include_wall_time:
            payload["wall_time"] = self.wall_time
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _bit_encoding(bitstring: str) -> int:
    # variable 0 is the least significant bit of the encoding
    return int(bitstring[::-1], 2) if bitstring else 0


def _row_to_str(row: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in row)


def _str_to_row(bitstring: str, n: int) -> np.ndarray:
    if len(bitstring) != n or any(c not in "01" for c in bitstring):
        raise ValueError(f"bad bitstring {bitstring!r} for n={n}")
    return np.frombuffer(bitstring.encode(), dtype=np.uint8) - ord("0")


def _dense_couplings(model: QuboModel) -> np.ndarray:
    if model.n > _DENSE_LIMIT:
        raise ValueError(f"refusing to densify n={model.n} couplings")
    return model.coupling_matrix.toarray()


def _aggregate(model, rows, counts, solver, wall, seed, params) -> SolveResult:
    """Collapse sampled states into the histogram/best-state result."""
    uniq, inverse = np.unique(rows, axis=0, return_inverse=True)
    agg = np.zeros(uniq.shape[0], dtype=np.int64)
    np.add.at(agg, inverse, counts)
    cost_vec = qubo_cost_many(model, uniq)
    samples, costs = {}, {}
    best = None
    for r in range(uniq.shape[0]):
        b = _row_to_str(uniq[r])
        samples[b] = int(agg[r])
        costs[b] = float(cost_vec[r])
        key = (costs[b], _bit_encoding(b))
        if best is None or key < best[0]:
            best = (key, b)
    return SolveResult(solver=solver, n=model.n, samples=samples, costs=costs,
                       best_bitstring=best[1], best_cost=costs[best[1]],
                       total_samples=int(np.sum(counts)), wall_time=wall,
                       seed=seed, params=dict(params))


# ----------------------------------------------------------------------
# Exact enumeration
# ----------------------------------------------------------------------

def solve_exact(model: QuboModel) -> SolveResult:
    """Enumerate all 2^n states and return the certified optimum.

    Hard-capped at n <= 28.  States are scanned in increasing integer
    encoding, so the first minimum encountered is already the tie-break
    winner.
    """
    if model.n > EXACT_MAX_VARS:
        raise SolverCapError(
            f"exact solver capped at {EXACT_MAX_VARS} variables, got {model.n}")
    t0 = time.perf_counter()
    n = model.n
    size = 1 << n
    chunk = 1 << min(n, 20)
    diag = model.diag
    pairs = model.pairs
    coup = model.coupling
    best_cost = math.inf
    best_k = 0
    for base in range(0, size, chunk):
        ks = np.arange(base, base + chunk, dtype=np.int64)
        bits = [((ks >> i) & 1).astype(np.uint8) for i in range(n)]
        cost = np.zeros(chunk)
        for i in range(n):
            if diag[i] != 0.0:
                cost += diag[i] * bits[i]
        for (i, j), v in zip(pairs, coup):
            cost += (2.0 * v) * (bits[i] & bits[j])
        idx = int(np.argmin(cost))
        if cost[idx] < best_cost:
            best_cost = float(cost[idx])
            best_k = base + idx
    row = np.array([(best_k >> i) & 1 for i in range(n)], dtype=np.uint8)
    b = _row_to_str(row)
    wall = time.perf_counter() - t0
    return SolveResult(solver="exact", n=n, samples={b: 1}, costs={b: best_cost},
                       best_bitstring=b, best_cost=best_cost, total_samples=1,
                       wall_time=wall, seed=0, params={})


# ----------------------------------------------------------------------
# Simulated annealing and greedy descent
# ----------------------------------------------------------------------

def auto_betas(model: QuboModel) -> tuple[float, float]:
    """Default geometric schedule endpoints.

    With Delta_i the maximal single-flip |energy change| of variable i:
    beta_hot = 1 / max_i Delta_i (hot enough to accept almost anything),
    beta_cold = 1000 / min nonzero Delta_i (cold enough to freeze).
    """
    pos = np.zeros(model.n)
    neg = np.zeros(model.n)
    if model.n_couplings:
        i, j = model.pairs[:, 0], model.pairs[:, 1]
        cp = np.maximum(model.coupling, 0.0)
        cn = np.minimum(model.coupling, 0.0)
        np.add.at(pos, i, cp)
        np.add.at(pos, j, cp)
        np.add.at(neg, i, cn)
        np.add.at(neg, j, cn)
    delta = np.maximum(np.abs(model.diag + 2.0 * pos),
                       np.abs(model.diag + 2.0 * neg))
    nz = delta[delta > 0]
    if nz.size == 0:
        return 1.0, 1000.0
    return 1.0 / float(delta.max()), 1000.0 / float(nz.min())


def _schedule(beta_hot, beta_cold, sweeps) -> np.ndarray:
    if beta_hot <= 0 or beta_cold <= 0 or beta_cold < beta_hot:
        raise ValueError(
            f"invalid annealing schedule: beta_hot={beta_hot}, beta_cold={beta_cold}")
    return np.geomspace(beta_hot, beta_cold, sweeps)


def _anneal_chunk(X, diag, dense, schedule, rng):
    """Metropolis sweeps over a batch of reads; X is modified in place."""
    phi = diag[None, :] + 2.0 * (X.astype(np.float64) @ dense)
    m, n = X.shape
    for beta in schedule:
        for i in range(n):
            delta = (1.0 - 2.0 * X[:, i]) * phi[:, i]
            acc = rng.random(m) < np.exp(np.clip(-beta * delta, -700.0, 0.0))
            if not acc.any():
                continue
            sgn = 1.0 - 2.0 * X[acc, i]
            X[acc, i] ^= 1
            phi[acc] += (2.0 * sgn)[:, None] * dense[i][None, :]
    return X


def _anneal_single(x, diag, csr, schedule, rng):
    indptr, indices, data = csr.indptr, csr.indices, csr.data
    xf = x.astype(np.float64)
    phi = diag + 2.0 * (csr @ xf)
    n = x.size
    for beta in schedule:
        us = rng.random(n)
        for i in range(n):
            delta = (1.0 - 2.0 * x[i]) * phi[i]
            if delta <= 0.0 or us[i] < math.exp(max(-beta * delta, -700.0)):
                sgn = 1.0 - 2.0 * x[i]
                x[i] ^= 1
                lo, hi = indptr[i], indptr[i + 1]
                phi[indices[lo:hi]] += 2.0 * sgn * data[lo:hi]
    return x


def solve_sa(model: QuboModel, num_reads: int = 10000, sweeps: int = 1000,
             beta_hot: float | None = None, beta_cold: float | None = None,
             seed: int = 0) -> SolveResult:
    """Simulated annealing with a geometric inverse-temperature ramp.

    Each read starts from a uniform random state and performs `sweeps`
    passes of single-flip Metropolis updates (variables visited in index
    order) while beta ramps geometrically from beta_hot to beta_cold.
    Auto-derived endpoints come from auto_betas when not given.
    """
    if num_reads < 1:
        raise ValueError(f"num_reads must be >= 1, got {num_reads}")
    if sweeps < 1:
        raise ValueError(f"sweeps must be >= 1, got {sweeps}")
    hot, cold = auto_betas(model)
    beta_hot = hot if beta_hot is None else float(beta_hot)
    beta_cold = cold if beta_cold is None else float(beta_cold)
    sched = _schedule(beta_hot, beta_cold, sweeps)
    params = {"num_reads": num_reads, "sweeps": sweeps,
              "beta_hot": beta_hot, "beta_cold": beta_cold}
    t0 = time.perf_counter()
    n = model.n
    rows = []
    if n <= _DENSE_LIMIT:
        dense = _dense_couplings(model)
        for chunk_idx, start in enumerate(range(0, num_reads, _READ_CHUNK)):
            m = min(_READ_CHUNK, num_reads - start)
            rng = np.random.default_rng([seed, chunk_idx])
            X = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
            rows.append(_anneal_chunk(X, model.diag, dense, sched, rng))
        rows = np.vstack(rows)
    else:
        csr = model.coupling_matrix
        out = np.empty((num_reads, n), dtype=np.uint8)
        for r in range(num_reads):
            rng = np.random.default_rng([seed, r])
            x = rng.integers(0, 2, size=n, dtype=np.uint8)
            out[r] = _anneal_single(x, model.diag, csr, sched, rng)
        rows = out
    wall = time.perf_counter() - t0
    return _aggregate(model, rows, np.ones(num_reads, dtype=np.int64),
                      "sa", wall, seed, params)


def _descend_dense(X, diag, dense):
    """Best-improvement single-flip descent on a batch; X modified in place."""
    phi = diag[None, :] + 2.0 * (X.astype(np.float64) @ dense)
    active = np.arange(X.shape[0])
    while active.size:
        delta = (1.0 - 2.0 * X[active]) * phi[active]
        best = np.argmin(delta, axis=1)
        bestval = delta[np.arange(active.size), best]
        improving = bestval < 0.0
        act = active[improving]
        if act.size == 0:
            break
        idx = best[improving]
        sgn = 1.0 - 2.0 * X[act, idx]
        X[act, idx] ^= 1
        phi[act] += (2.0 * sgn)[:, None] * dense[idx]
        active = act
    return X


def _descend_sparse(x, diag, csr):
    indptr, indices, data = csr.indptr, csr.indices, csr.data
    phi = diag + 2.0 * (csr @ x.astype(np.float64))
    while True:
        delta = (1.0 - 2.0 * x) * phi
        i = int(np.argmin(delta))
        if delta[i] >= 0.0:
            return x
        sgn = 1.0 - 2.0 * x[i]
        x[i] ^= 1
        lo, hi = indptr[i], indptr[i + 1]
        phi[indices[lo:hi]] += 2.0 * sgn * data[lo:hi]


def solve_greedy(model: QuboModel, num_reads: int = 1, seed: int = 0) -> SolveResult:
    """Steepest-descent single-flip search from random starts.

    Each read repeatedly applies the single flip with the largest cost
    decrease (lowest index on ties) until no flip improves, i.e. the
    zero-temperature limit of solve_sa.
    """
    if num_reads < 1:
        raise ValueError(f"num_reads must be >= 1, got {num_reads}")
    t0 = time.perf_counter()
    n = model.n
    if n <= _DENSE_LIMIT:
        dense = _dense_couplings(model)
        rows = []
        for chunk_idx, start in enumerate(range(0, num_reads, _READ_CHUNK)):
            m = min(_READ_CHUNK, num_reads - start)
            rng = np.random.default_rng([seed, chunk_idx])
            X = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
            rows.append(_descend_dense(X, model.diag, dense))
        rows = np.vstack(rows)
    else:
        csr = model.coupling_matrix
        rows = np.empty((num_reads, n), dtype=np.uint8)
        for r in range(num_reads):
            rng = np.random.default_rng([seed, r])
            x = rng.integers(0, 2, size=n, dtype=np.uint8)
            rows[r] = _descend_sparse(x, model.diag, csr)
    wall = time.perf_counter() - t0
    return _aggregate(model, rows, np.ones(num_reads, dtype=np.int64),
                      "greedy", wall, seed, {"num_reads": num_reads})


def local_refine(model: QuboModel, bitstring) -> tuple[str, float]:
    """Descend from a given state to its single-flip local minimum.

    Returns (refined bitstring, cost); the cost never exceeds the
    starting state's.
    """
    x = (_str_to_row(bitstring, model.n) if isinstance(bitstring, str)
         else np.asarray(bitstring, dtype=np.uint8).reshape(model.n).copy())
    if model.n <= _DENSE_LIMIT:
        out = _descend_dense(x[None, :].copy(), model.diag, _dense_couplings(model))[0]
    else:
        out = _descend_sparse(x.copy(), model.diag, model.coupling_matrix)
    cost = float(qubo_cost_many(model, out[None, :])[0])
    return _row_to_str(out), cost


# ----------------------------------------------------------------------
# QAOA state-vector simulator
# ----------------------------------------------------------------------

def _basis_energies(model: QuboModel) -> np.ndarray:
    """Ising energy (offset included) of every basis state.

    Basis index k encodes x_i as bit i of k, matching the tie-break
    encoding; the returned vector equals qubo_cost on every state.
    """
    ising = to_ising(model)
    n = model.n
    ks = np.arange(1 << n, dtype=np.int64)
    energy = np.full(1 << n, ising.offset)
    for i in range(n):
        if ising.h[i] != 0.0:
            energy += ising.h[i] * (1.0 - 2.0 * ((ks >> i) & 1))
    for (i, j), v in zip(ising.pairs, ising.j_coupling):
        # z_i z_j = 1 - 2 (bit_i XOR bit_j)
        energy += v * (1.0 - 2.0 * (((ks >> int(i)) ^ (ks >> int(j))) & 1))
    return energy


def _apply_mixer(state: np.ndarray, n: int, beta: float) -> np.ndarray:
    """exp(-i beta X) on every qubit, in place."""
    c, s = math.cos(beta), math.sin(beta)
    for i in range(n):
        psi = state.reshape(-1, 2, 1 << i)
        a = psi[:, 0, :].copy()
        b = psi[:, 1, :].copy()
        psi[:, 0, :] = c * a - 1j * s * b
        psi[:, 1, :] = c * b - 1j * s * a
    return state


def qaoa_state(model: QuboModel, gammas, betas,
               collect_norms: bool = False):
    """State after p alternating cost/mixer layers on the |+>^n start.

    Layer l applies U_C = exp(-i gamma_l H_C) (diagonal phases equal to
    each basis state's Ising energy) followed by U_M = prod_i
    exp(-i beta_l X_i).  Both factors are unitary, so the norm stays 1 up
    to rounding; pass collect_norms=True to get the norm after each layer.
    """
    if model.n > QAOA_MAX_VARS:
        raise SolverCapError(
            f"QAOA simulator capped at {QAOA_MAX_VARS} variables, got {model.n}")
    gammas = np.atleast_1d(np.asarray(gammas, dtype=np.float64))
    betas = np.atleast_1d(np.asarray(betas, dtype=np.float64))
    if gammas.shape != betas.shape:
        raise ValueError("gammas and betas must have the same length")
    energies = _basis_energies(model)
    n = model.n
    state = np.full(1 << n, 2.0 ** (-n / 2.0), dtype=np.complex128)
    norms = []
    for g, b in zip(gammas, betas):
        state = state * np.exp(-1j * g * energies)
        state = _apply_mixer(state, n, b)
        norms.append(float(np.linalg.norm(state)))
    if collect_norms:
        return state, norms
    return state


def solve_qaoa_sim(model: QuboModel, layers: int = 2, shots: int = 2048,
                   max_iters: int = 200, seed: int = 0) -> SolveResult:
    """Depth-p QAOA on the exact state vector, with refined sampling.

    Angles start on a linear ramp (gamma_l = (l/p) gamma_max with
    gamma_max = 1/max|J|, beta_l = (1 - l/p) pi/4) and are optimized
    derivative-free (Nelder-Mead) against the exact energy expectation.
    The optimized state is sampled `shots` times and every sample is
    pushed through local_refine before aggregation.
    """
    if model.n > QAOA_MAX_VARS:
        raise SolverCapError(
            f"QAOA simulator capped at {QAOA_MAX_VARS} variables, got {model.n}")
    if layers < 1:
        raise ValueError(f"layers must be >= 1, got {layers}")
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    t0 = time.perf_counter()
    n = model.n
    p = layers
    ising = to_ising(model)
    scale = ising.max_abs_j
    if scale == 0.0:
        scale = float(np.max(np.abs(ising.h))) if np.any(ising.h) else 1.0
    gamma_max = 1.0 / scale
    beta_max = math.pi / 4.0
    ramp = np.arange(1, p + 1) / p
    x0 = np.concatenate([ramp * gamma_max, (1.0 - ramp) * beta_max])

    energies = _basis_energies(model)

    def expectation(theta):
        st = qaoa_state(model, theta[:p], theta[p:])
        return float(np.real(np.abs(st) ** 2 @ energies))

    simplex = np.vstack([x0] + [x0 + 0.15 * np.eye(2 * p)[k] for k in range(2 * p)])
    res = scipy.optimize.minimize(
        expectation, x0, method="Nelder-Mead",
        options={"maxiter": max_iters, "initial_simplex": simplex,
                 "xatol": 1e-4, "fatol": 1e-9})
    theta = res.x
    state = qaoa_state(model, theta[:p], theta[p:])
    probs = np.abs(state) ** 2
    probs /= probs.sum()

    rng = np.random.default_rng(seed)
    ks = rng.choice(probs.size, size=shots, p=probs)
    uniq, counts = np.unique(ks, return_counts=True)
    raw = ((uniq[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)
    refined = _descend_dense(raw.copy(), model.diag, _dense_couplings(model))
    wall = time.perf_counter() - t0
    params = {"layers": p, "shots": shots, "max_iters": max_iters,
              "gammas": [float(g) for g in theta[:p]],
              "betas": [float(b) for b in theta[p:]],
              "expectation": float(res.fun)}
    return _aggregate(model, refined, counts, "qaoa_sim", wall, seed, params)
