"""Turning solver bitstrings into water positions and 2D summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError
from .sites import SiteGrid
from .structures import format_waters_pdb


@dataclass(frozen=True)
class WaterPlacement:
    """Predicted water oxygen positions decoded from one bitstring."""

    positions: np.ndarray  # (m, 3), site order preserved
    bitstring: str

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3).copy()
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "bitstring", str(self.bitstring))

    @property
    def count(self) -> int:
        return self.positions.shape[0]


def decode(bitstring, sites: SiteGrid) -> WaterPlacement:
    """Selected-site positions for a solver bitstring (variable 0 leftmost)."""
    if isinstance(bitstring, str):
        if len(bitstring) != sites.n or any(c not in "01" for c in bitstring):
            raise ValueError(f"bitstring length {len(bitstring)} does not match "
                             f"{sites.n} sites")
        bits = np.frombuffer(bitstring.encode(), dtype=np.uint8) - ord("0")
        text = bitstring
    else:
        bits = np.asarray(bitstring).astype(np.uint8).reshape(-1)
        if bits.size != sites.n:
            raise ValueError(f"bit vector length {bits.size} does not match "
                             f"{sites.n} sites")
        text = "".join("1" if b else "0" for b in bits)
    return WaterPlacement(positions=sites.sites[bits == 1], bitstring=text)


def write_waters_pdb(placement: WaterPlacement, sink=None) -> str:
    """PDB text for the placement; also writes to `sink` path if given."""
    text = format_waters_pdb(placement.positions)
    if sink is not None:
        with open(sink, "w") as fh:
            fh.write(text)
    return text


@dataclass(frozen=True)
class PcaProjection:
    """Top-2 principal components of combined reference + predicted waters."""

    components: np.ndarray                # (2, 3) unit rows
    explained_variance_ratio: np.ndarray  # (2,)
    cw_coords: np.ndarray                 # (n, 2)
    pw_coords: np.ndarray                 # (m, 2)


def pca_project(cw_positions, pw_positions) -> PcaProjection:
    """Project both point sets onto the top-2 PCs of their union.

    Components are eigenvectors of the combined covariance, ordered by
    descending eigenvalue, each signed so its largest-magnitude entry is
    positive.

    Raises:
        DegenerateGeometryError: Fewer than 2 combined points, or zero
            total variance (all points identical).
    """
    cw = np.asarray(cw_positions, dtype=np.float64).reshape(-1, 3)
    pw = np.asarray(pw_positions, dtype=np.float64).reshape(-1, 3)
    combined = np.vstack([cw, pw])
    if combined.shape[0] < 2:
        raise DegenerateGeometryError(
            f"PCA needs at least 2 points, got {combined.shape[0]}")
    center = combined.mean(axis=0)
    centered = combined - center
    cov = centered.T @ centered / (combined.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    total = float(np.sum(np.clip(evals, 0.0, None)))
    if total <= 0.0:
        raise DegenerateGeometryError("all points identical, PCA undefined")
    order = np.argsort(evals)[::-1][:2]
    comps = evecs[:, order].T.copy()
    for k in range(2):
        j = int(np.argmax(np.abs(comps[k])))
        if comps[k, j] < 0:
            comps[k] = -comps[k]
    ratio = np.clip(evals[order], 0.0, None) / total
    proj = centered @ comps.T
    return PcaProjection(components=comps,
                         explained_variance_ratio=ratio,
                         cw_coords=proj[:cw.shape[0]],
                         pw_coords=proj[cw.shape[0]:])


def pca_to_csv(proj: PcaProjection, cw_labels=None, pw_labels=None) -> str:
    """CSV export: set (CW/PW), label, pc1, pc2."""
    cw_labels = (list(cw_labels) if cw_labels is not None
                 else [str(i) for i in range(proj.cw_coords.shape[0])])
    pw_labels = (list(pw_labels) if pw_labels is not None
                 else [str(i) for i in range(proj.pw_coords.shape[0])])
    lines = ["set,label,pc1,pc2"]
    for label, (p1, p2) in zip(cw_labels, proj.cw_coords):
        lines.append(f"CW,{label},{p1:.6f},{p2:.6f}")
    for label, (p1, p2) in zip(pw_labels, proj.pw_coords):
        lines.append(f"PW,{label},{p1:.6f},{p2:.6f}")
    return "\n".join(lines) + "\n"
