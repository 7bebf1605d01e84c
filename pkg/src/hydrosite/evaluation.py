"""Placement quality metrics against reference (crystallographic) waters.

Each reference water a_i collects the cluster C_i of predicted waters b_j
with |a_i - b_j| <= R_s (closed, non-exclusive: one prediction may sit in
several clusters).  Pair similarity is S_ij = 1 / (1 + |a_i - b_j|), so
S = 1 at a perfect hit and S -> 1/(1 + R_s) at the cluster edge.  From the
clusters:

    coverage      C     = n* / n          (n* = clusters with >= 1 member)
    best single   P*    = (1/n) sum_i max_j S_ij      (0 for empty C_i)
    precision     <P>   = mean over identified clusters of the
                          within-cluster mean of S_ij
    cluster size  <CS>  = (sum over identified clusters of |C_i|) / n*

CI95 values are 1.96 * sd / sqrt(n*) over the per-cluster statistics and
CV = sd / mean, with the sample sd (ddof=1), defined as 0 when n* < 2.
With no identified clusters (including m = 0) the <P>/<CS> family is
reported absent via defined=False rather than invented.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

DEFAULT_RADIUS = 3.0  # angstrom

CSV_HEADER = "C,P_star,P_mean,P_ci95,CS_mean,CS_ci95,cv_P,cv_CS,n,m,n_star"


@dataclass(frozen=True)
class Cluster:
    """Predicted waters within R_s of one reference water."""

    cw_index: int
    members: np.ndarray        # indices into the predicted set
    similarities: np.ndarray   # S values, parallel to members

    @property
    def identified(self) -> bool:
        return self.members.size > 0

    @property
    def size(self) -> int:
        return int(self.members.size)

    @property
    def best(self) -> float:
        return float(np.max(self.similarities)) if self.identified else 0.0

    @property
    def mean_similarity(self) -> float:
        return float(np.mean(self.similarities)) if self.identified else 0.0


def build_clusters(cw_positions, pw_positions, radius: float = DEFAULT_RADIUS):
    """Cluster predicted waters around each reference water.

    Raises:
        ValueError: On an empty reference set or non-positive radius.
    """
    cw = np.asarray(cw_positions, dtype=np.float64).reshape(-1, 3)
    pw = np.asarray(pw_positions, dtype=np.float64).reshape(-1, 3)
    if cw.shape[0] == 0:
        raise ValueError("cannot evaluate against zero reference waters")
    if radius <= 0:
        raise ValueError(f"cluster radius must be positive, got {radius}")
    clusters = []
    if pw.shape[0] == 0:
        for i in range(cw.shape[0]):
            clusters.append(Cluster(cw_index=i, members=np.empty(0, dtype=np.int64),
                                    similarities=np.empty(0)))
        return clusters
    d = np.sqrt(np.sum((cw[:, None, :] - pw[None, :, :]) ** 2, axis=2))
    for i in range(cw.shape[0]):
        members = np.nonzero(d[i] <= radius)[0]
        clusters.append(Cluster(cw_index=i, members=members,
                                similarities=1.0 / (1.0 + d[i][members])))
    return clusters


@dataclass(frozen=True)
class MetricsReport:
    """All placement metrics for one (reference, predicted) pairing."""

    n: int
    m: int
    n_star: int
    coverage: float
    p_star: float
    defined: bool
    p_mean: float | None = None
    p_ci95: float | None = None
    cs_mean: float | None = None
    cs_ci95: float | None = None
    cv_p: float | None = None
    cv_cs: float | None = None
    radius: float = DEFAULT_RADIUS
    per_cluster: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "m": self.m, "n_star": self.n_star,
            "C": self.coverage, "P_star": self.p_star,
            "defined": self.defined,
            "P_mean": self.p_mean, "P_ci95": self.p_ci95,
            "CS_mean": self.cs_mean, "CS_ci95": self.cs_ci95,
            "cv_P": self.cv_p, "cv_CS": self.cv_cs,
            "radius": self.radius,
            "clusters": self.per_cluster,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv_row(self) -> str:
        def cell(v):
            return "" if v is None else f"{v:.9g}"
        return ",".join([
            cell(self.coverage), cell(self.p_star), cell(self.p_mean),
            cell(self.p_ci95), cell(self.cs_mean), cell(self.cs_ci95),
            cell(self.cv_p), cell(self.cv_cs),
            str(self.n), str(self.m), str(self.n_star)])


def compute_metrics(clusters, n: int, m: int,
                    radius: float = DEFAULT_RADIUS) -> MetricsReport:
    """Aggregate cluster statistics into a MetricsReport."""
    if len(clusters) != n:
        raise ValueError(f"{len(clusters)} clusters for n={n} reference waters")
    identified = [c for c in clusters if c.identified]
    n_star = len(identified)
    coverage = n_star / n
    p_star = float(np.mean([c.best for c in clusters]))
    per_cluster = [{"cw_index": c.cw_index, "size": c.size,
                    "best_S": c.best, "mean_S": c.mean_similarity}
                   for c in clusters]
    if n_star == 0:
        return MetricsReport(n=n, m=m, n_star=0, coverage=0.0, p_star=0.0,
                             defined=False, radius=radius, per_cluster=per_cluster)

    p_vals = np.array([c.mean_similarity for c in identified])
    sizes = np.array([float(c.size) for c in identified])
    p_sd = float(np.std(p_vals, ddof=1)) if n_star >= 2 else 0.0
    cs_sd = float(np.std(sizes, ddof=1)) if n_star >= 2 else 0.0
    p_mean = float(np.mean(p_vals))
    cs_mean = float(np.sum(sizes)) / n_star
    return MetricsReport(
        n=n, m=m, n_star=n_star, coverage=coverage, p_star=p_star, defined=True,
        p_mean=p_mean,
        p_ci95=float(1.96 * p_sd / np.sqrt(n_star)),
        cs_mean=cs_mean,
        cs_ci95=float(1.96 * cs_sd / np.sqrt(n_star)),
        cv_p=float(p_sd / p_mean),
        cv_cs=float(cs_sd / cs_mean),
        radius=radius, per_cluster=per_cluster)


def score(cw_positions, pw_positions, radius: float = DEFAULT_RADIUS) -> MetricsReport:
    """Convenience wrapper: clusters + metrics in one call."""
    cw = np.asarray(cw_positions, dtype=np.float64).reshape(-1, 3)
    pw = np.asarray(pw_positions, dtype=np.float64).reshape(-1, 3)
    clusters = build_clusters(cw, pw, radius)
    return compute_metrics(clusters, cw.shape[0], pw.shape[0], radius)
