"""QUBO encoding of the Gaussian-mixture fit to a solvent density.

The model places one isotropic, unit-normalized Gaussian

    G_i(r) = (2 pi sigma2)^(-3/2) exp(-|r - q_i|^2 / (2 sigma2))

at every candidate site q_i and asks which subset best reproduces the
density g.  Expanding the squared L2 misfit of the mixture A * sum_i x_i G_i
against g over the pocket region, and using x_i^2 = x_i for binaries:

    I^2(x) = constant + sum_i Q_ii x_i + 2 sum_{i<j} Q_ij x_i x_j

with

    Q_ii = A^2 <G_i, G_i> - 2 A <g, G_i>
    Q_ij = A^2 <G_i, G_j>          (i < j)
    constant = <g, g>

Gaussian-Gaussian inner products have the closed form
(4 pi sigma2)^(-3/2) exp(-|q_i - q_j|^2 / (4 sigma2)); the density inner
products <g, G_i> are Riemann sums over source-grid nodes within 6 sigma
of q_i, and <g, g> is a Riemann sum over the pocket box.  Minimizing the
cost therefore minimizes the misfit, and constant + cost approximates
I^2 >= 0.

The amplitude multiplier A rescales every candidate Gaussian; fit quality
depends on how well A matches the density's peak scale, and its
calibration is left to the caller (default 1).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse

from .density import DensityGrid
from .errors import QuboFormatError
from .sites import SiteGrid
from .structures import PocketBox

DATA_TERM_RADIUS_SIGMAS = 6.0  # integration cutoff for <g, G_i>, in sigmas

_META_KEYS = ("sigma2", "delta", "tau_g")


def overlap(qi, qj, sigma2: float) -> float:
    """Closed-form inner product of two unit-normalized Gaussians.

    <G_i, G_j> = (4 pi sigma2)^(-3/2) exp(-|q_i - q_j|^2 / (4 sigma2)),
    symmetric in its arguments and maximal at q_i == q_j.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    qi = np.asarray(qi, dtype=np.float64).reshape(3)
    qj = np.asarray(qj, dtype=np.float64).reshape(3)
    d2 = float(np.sum((qi - qj) ** 2))
    return (4.0 * math.pi * sigma2) ** -1.5 * math.exp(-d2 / (4.0 * sigma2))


def data_term(site, density: DensityGrid, sigma2: float) -> float:
    """Riemann-sum inner product <g, G_site> over nodes within 6 sigma.

    Nodes outside the density domain contribute nothing; a site close to
    the domain edge integrates over what is available.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    site = np.asarray(site, dtype=np.float64).reshape(3)
    radius = DATA_TERM_RADIUS_SIGMAS * math.sqrt(sigma2)
    counts = np.array(density.counts)

    lo_idx = np.ceil((site - radius - density.origin) / density.spacing)
    hi_idx = np.floor((site + radius - density.origin) / density.spacing)
    lo = np.clip(lo_idx, 0, counts - 1).astype(np.int64)
    hi = np.clip(hi_idx, 0, counts - 1).astype(np.int64)
    if np.any(lo_idx > counts - 1) or np.any(hi_idx < 0):
        return 0.0

    axes = [density.axis_coords(a)[lo[a]:hi[a] + 1] for a in range(3)]
    d2 = ((axes[0] - site[0]) ** 2)[:, None, None] \
        + ((axes[1] - site[1]) ** 2)[None, :, None] \
        + ((axes[2] - site[2]) ** 2)[None, None, :]
    sub = density.as_array()[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1]
    mask = d2 <= radius * radius
    norm = (2.0 * math.pi * sigma2) ** -1.5
    cell = float(np.prod(density.spacing))
    return float(np.sum(sub[mask] * np.exp(-d2[mask] / (2.0 * sigma2))) * norm * cell)


def density_self_energy(density: DensityGrid, box: PocketBox | None = None) -> float:
    """Riemann sum of g^2, over the pocket box when one is given."""
    vals = density.values
    if box is not None:
        axes = [density.axis_coords(a) for a in range(3)]
        masks = [(ax >= box.lo[a] - 1e-9) & (ax <= box.hi[a] + 1e-9)
                 for a, ax in enumerate(axes)]
        vol = density.as_array()[np.ix_(masks[0], masks[1], masks[2])]
        vals = vol.reshape(-1)
    cell = float(np.prod(density.spacing))
    return float(np.sum(vals * vals) * cell)


@dataclass(frozen=True)
class QuboModel:
    """Sparse symmetric QUBO: diagonal, strict-upper couplings, constant.

    cost(x) = sum_i diag[i] x_i + 2 sum_{(i,j) in pairs} coupling x_i x_j.
    The constant is carried alongside but is not part of cost(x).  Models
    built from Gaussian mixtures have strictly positive couplings; imported
    instances may carry any nonzero values.
    """

    n: int
    diag: np.ndarray            # (n,)
    pairs: np.ndarray           # (nnz, 2) with i < j, lexicographically sorted
    coupling: np.ndarray        # (nnz,)
    constant: float = 0.0
    truncation_eps: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = int(self.n)
        diag = np.asarray(self.diag, dtype=np.float64).reshape(-1).copy()
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2).copy()
        coupling = np.asarray(self.coupling, dtype=np.float64).reshape(-1).copy()
        if n < 1:
            raise ValueError(f"need at least one variable, got n={n}")
        if diag.size != n:
            raise ValueError(f"diag has {diag.size} entries for n={n}")
        if pairs.shape[0] != coupling.size:
            raise ValueError("pairs and coupling lengths disagree")
        if not np.all(np.isfinite(diag)) or not np.all(np.isfinite(coupling)):
            raise ValueError("QUBO coefficients must be finite")
        if coupling.size:
            if np.any(pairs[:, 0] >= pairs[:, 1]):
                raise ValueError("pairs must satisfy i < j")
            if np.any(pairs < 0) or np.any(pairs >= n):
                raise ValueError("pair index out of range")
            if np.any(coupling == 0.0):
                raise ValueError("zero couplings must be omitted, not stored")
            order = np.lexsort((pairs[:, 1], pairs[:, 0]))
            pairs = pairs[order]
            coupling = coupling[order]
            key = pairs[:, 0] * n + pairs[:, 1]
            if np.any(np.diff(key) == 0):
                raise ValueError("duplicate pair entries")
        for arr in (diag, pairs, coupling):
            arr.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "truncation_eps", float(self.truncation_eps))

    @property
    def n_couplings(self) -> int:
        return self.coupling.size

    @cached_property
    def coupling_matrix(self) -> scipy.sparse.csr_matrix:
        """Symmetric CSR matrix of off-diagonal couplings (zero diagonal)."""
        i, j = self.pairs[:, 0], self.pairs[:, 1]
        m = scipy.sparse.coo_matrix(
            (np.concatenate([self.coupling, self.coupling]),
             (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(self.n, self.n))
        return m.tocsr()

    def offdiag_dict(self) -> dict:
        """{(i, j): Q_ij} with i < j; convenience for small models."""
        return {(int(i), int(j)): float(v)
                for (i, j), v in zip(self.pairs, self.coupling)}

    @classmethod
    def from_dense(cls, matrix, constant: float = 0.0, **kwargs) -> "QuboModel":
        """Build from a dense symmetric matrix; zeros are dropped."""
        q = np.asarray(matrix, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"need a square matrix, got shape {q.shape}")
        if not np.allclose(q, q.T, rtol=0, atol=1e-12):
            raise ValueError("matrix must be symmetric")
        iu = np.triu_indices(q.shape[0], 1)
        vals = q[iu]
        nz = vals != 0.0
        pairs = np.column_stack([iu[0][nz], iu[1][nz]])
        return cls(n=q.shape[0], diag=np.diag(q).copy(), pairs=pairs,
                   coupling=vals[nz], constant=constant, **kwargs)


def build_qubo(sites: SiteGrid, density: DensityGrid, truncation_eps: float = 1e-8,
               amplitude: float = 1.0, box: PocketBox | None = None) -> QuboModel:
    """Assemble the mixture-fit QUBO for a site grid against a density.

    Args:
        sites: Candidate sites carrying sigma2.
        density: Source density g.
        truncation_eps: Off-diagonal entries with |Q_ij| below this are
            omitted from the sparse model.
        amplitude: Global Gaussian amplitude multiplier A.
        box: Integration domain for the constant <g, g>; the full density
            domain when omitted.

    Returns:
        QuboModel with strictly positive stored couplings and meta echoing
        the site-grid parameters.
    """
    if truncation_eps < 0:
        raise ValueError(f"truncation_eps must be >= 0, got {truncation_eps}")
    if amplitude <= 0:
        raise ValueError(f"amplitude must be positive, got {amplitude}")
    sigma2 = sites.sigma2
    pos = sites.sites
    n = pos.shape[0]

    b = np.array([data_term(pos[i], density, sigma2) for i in range(n)])
    self_overlap = (4.0 * math.pi * sigma2) ** -1.5
    diag = amplitude * amplitude * self_overlap - 2.0 * amplitude * b

    d2 = np.sum((pos[:, None, :] - pos[None, :, :]) ** 2, axis=2)
    iu = np.triu_indices(n, 1)
    q_off = amplitude * amplitude * self_overlap * np.exp(-d2[iu] / (4.0 * sigma2))
    keep = np.abs(q_off) >= truncation_eps if truncation_eps > 0 else q_off != 0.0
    pairs = np.column_stack([iu[0][keep], iu[1][keep]])
    coupling = q_off[keep]
    assert np.all(coupling > 0), "Gaussian overlaps must be positive"

    constant = density_self_energy(density, box)
    meta = {"sigma2": sigma2, "delta": sites.delta, "tau_g": sites.tau_g,
            "source_spacing": sites.source_spacing, "amplitude": float(amplitude)}
    return QuboModel(n=n, diag=diag, pairs=pairs, coupling=coupling,
                     constant=constant, truncation_eps=truncation_eps, meta=meta)


def _as_bits(x, n: int) -> np.ndarray:
    if isinstance(x, str):
        if len(x) != n or any(c not in "01" for c in x):
            raise ValueError(f"bad bitstring {x!r} for n={n}")
        return np.frombuffer(x.encode(), dtype=np.uint8) - ord("0")
    arr = np.asarray(x)
    if arr.shape != (n,):
        raise ValueError(f"expected {n} bits, got shape {arr.shape}")
    return arr.astype(np.uint8)


def qubo_cost(model: QuboModel, x) -> float:
    """cost(x) = sum_i Q_ii x_i + 2 sum_{i<j} Q_ij x_i x_j (constant excluded)."""
    bits = _as_bits(x, model.n).astype(np.float64)
    pair_term = 0.0
    if model.n_couplings:
        xi = bits[model.pairs[:, 0]]
        xj = bits[model.pairs[:, 1]]
        pair_term = 2.0 * float(np.dot(model.coupling, xi * xj))
    return float(np.dot(model.diag, bits)) + pair_term


def qubo_cost_many(model: QuboModel, states: np.ndarray) -> np.ndarray:
    """Vectorized qubo_cost over rows of an (m, n) 0/1 array."""
    x = np.asarray(states, dtype=np.float64)
    out = x @ model.diag
    if model.n_couplings:
        out = out + np.einsum("ij,ij->i", x @ model.coupling_matrix, x)
    return out


@dataclass(frozen=True)
class IsingModel:
    """Spin form of a QuboModel under x_i = (1 - s_i) / 2, s_i in {-1, +1}.

    energy(s) = offset + sum_i h_i s_i + sum_{(i,j) in pairs} j_coupling s_i s_j
    reproduces qubo_cost(x) exactly.
    """

    n: int
    h: np.ndarray
    pairs: np.ndarray
    j_coupling: np.ndarray
    offset: float

    @property
    def max_abs_j(self) -> float:
        return float(np.max(np.abs(self.j_coupling))) if self.j_coupling.size else 0.0


def to_ising(model: QuboModel) -> IsingModel:
    """Exact QUBO -> Ising transform.

    With x_i = (1 - s_i)/2:
        h_i = -(Q_ii + sum_{j != i} Q_ij) / 2
        J_ij = Q_ij / 2
        offset = sum_i Q_ii / 2 + sum_{i<j} Q_ij / 2
    """
    row_sums = np.zeros(model.n)
    if model.n_couplings:
        np.add.at(row_sums, model.pairs[:, 0], model.coupling)
        np.add.at(row_sums, model.pairs[:, 1], model.coupling)
    h = -(model.diag + row_sums) / 2.0
    j = model.coupling / 2.0
    offset = float(np.sum(model.diag) / 2.0 + np.sum(model.coupling) / 2.0)
    return IsingModel(n=model.n, h=h, pairs=model.pairs.copy(),
                      j_coupling=j, offset=offset)


def ising_energy(ising: IsingModel, s) -> float:
    """energy(s) for spins s_i in {-1, +1}."""
    spins = np.asarray(s, dtype=np.float64).reshape(ising.n)
    if not np.all(np.abs(spins) == 1.0):
        raise ValueError("spins must be +1 or -1")
    e = ising.offset + float(np.dot(ising.h, spins))
    if ising.j_coupling.size:
        e += float(np.dot(ising.j_coupling,
                          spins[ising.pairs[:, 0]] * spins[ising.pairs[:, 1]]))
    return e


# ----------------------------------------------------------------------
# COO text + JSON sidecar serialization
# ----------------------------------------------------------------------

def write_qubo(model: QuboModel) -> tuple[str, str]:
    """Serialize to ('i j value' COO text, JSON sidecar text).

    Diagonal entries appear as i == j lines; couplings as i < j lines.
    Values use full float precision so re-ingestion is lossless.
    """
    lines = [f"# qubo n={model.n} couplings={model.n_couplings}"]
    for i, v in enumerate(model.diag):
        if v != 0.0:
            lines.append(f"{i} {i} {v:.17g}")
    for (i, j), v in zip(model.pairs, model.coupling):
        lines.append(f"{i} {j} {v:.17g}")
    coo_text = "\n".join(lines) + "\n"

    sidecar = {"n": model.n, "constant": model.constant,
               "truncation_eps": model.truncation_eps}
    for key in (*_META_KEYS, "source_spacing", "amplitude"):
        if key in model.meta:
            sidecar[key] = model.meta[key]
    return coo_text, json.dumps(sidecar, sort_keys=True, indent=2) + "\n"


def read_qubo(coo_text: str, sidecar_text: str | None = None) -> QuboModel:
    """Parse a COO QUBO plus optional JSON sidecar.

    Raises:
        QuboFormatError: On bad tokens, i > j, duplicates, or indices
            outside the sidecar-declared n.
    """
    meta = {}
    constant = 0.0
    truncation_eps = 0.0
    declared_n = None
    if sidecar_text:
        try:
            side = json.loads(sidecar_text)
        except json.JSONDecodeError as exc:
            raise QuboFormatError(f"bad QUBO sidecar JSON: {exc}") from None
        if not isinstance(side, dict):
            raise QuboFormatError("QUBO sidecar must be a JSON object")
        declared_n = side.get("n")
        constant = float(side.get("constant", 0.0))
        truncation_eps = float(side.get("truncation_eps", 0.0))
        meta = {k: side[k] for k in (*_META_KEYS, "source_spacing", "amplitude")
                if k in side}

    entries = {}
    max_idx = -1
    for lineno, raw in enumerate(coo_text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise QuboFormatError(f"line {lineno}: expected 'i j value', got {line!r}")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise QuboFormatError(f"line {lineno}: bad token in {line!r}") from None
        if i < 0 or j < 0:
            raise QuboFormatError(f"line {lineno}: negative index")
        if i > j:
            raise QuboFormatError(f"line {lineno}: lower-triangle entry {i} > {j}")
        if (i, j) in entries:
            raise QuboFormatError(f"line {lineno}: duplicate entry ({i}, {j})")
        if not math.isfinite(v):
            raise QuboFormatError(f"line {lineno}: non-finite value")
        entries[(i, j)] = v
        max_idx = max(max_idx, j)

    n = int(declared_n) if declared_n is not None else max_idx + 1
    if n < 1:
        raise QuboFormatError("QUBO has no entries and no declared n")
    if max_idx >= n:
        raise QuboFormatError(f"index {max_idx} out of range for declared n={n}")

    diag = np.zeros(n)
    pairs = []
    coupling = []
    for (i, j), v in entries.items():
        if i == j:
            diag[i] = v
        elif v != 0.0:
            pairs.append((i, j))
            coupling.append(v)
    pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    return QuboModel(n=n, diag=diag, pairs=pairs,
                     coupling=np.array(coupling), constant=constant,
                     truncation_eps=truncation_eps, meta=meta)


def load_qubo(coo_path, sidecar_path=None) -> QuboModel:
    """Read a QUBO from files; the sidecar defaults to <stem>.json."""
    coo_path = os.fspath(coo_path)
    if not os.path.exists(coo_path):
        raise QuboFormatError(f"no such QUBO file: {coo_path}")
    with open(coo_path, "r") as fh:
        coo_text = fh.read()
    if sidecar_path is None:
        guess = os.path.splitext(coo_path)[0] + ".json"
        sidecar_path = guess if os.path.exists(guess) else None
    sidecar_text = None
    if sidecar_path is not None:
        with open(sidecar_path, "r") as fh:
            sidecar_text = fh.read()
    return read_qubo(coo_text, sidecar_text)
