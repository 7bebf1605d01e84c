"""Candidate hydration-site lattices filtered by local density.

A cubic lattice with spacing delta is anchored at the pocket box corner
(center - side/2) and covers the box.  A lattice point survives iff the
maximum source-grid value over the 8 nodes of its enclosing density cell
is >= tau_g; points whose enclosing cell is not fully inside the density
domain are dropped.  Each kept point is the center of one candidate
Gaussian of variance sigma2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import DensityGrid
from .errors import EmptySiteGridError
from .structures import PocketBox


@dataclass(frozen=True)
class SiteGrid:
    """Candidate site positions plus the parameters that produced them."""

    sites: np.ndarray  # (N, 3), lexicographic in lattice (ix, iy, iz)
    sigma2: float
    delta: float
    tau_g: float
    source_spacing: float

    def __post_init__(self):
        sites = np.asarray(self.sites, dtype=np.float64).reshape(-1, 3).copy()
        if sites.shape[0] < 1:
            raise ValueError("a SiteGrid needs at least one site")
        if not np.all(np.isfinite(sites)):
            raise ValueError("site positions must be finite")
        if float(self.sigma2) <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if float(self.delta) <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        sites.flags.writeable = False
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "tau_g", float(self.tau_g))
        object.__setattr__(self, "source_spacing", float(self.source_spacing))

    @property
    def n(self) -> int:
        return self.sites.shape[0]


def build_site_grid(density: DensityGrid, box: PocketBox, delta: float,
                    tau_g: float, sigma2: float) -> SiteGrid:
    """Generate and filter the candidate lattice for one pocket.

    Args:
        density: Source solvent density.
        box: Pocket box the lattice covers.
        delta: Lattice spacing in angstrom, > 0.
        tau_g: Keep threshold on the enclosing cell's node maximum (closed).
        sigma2: Gaussian variance attached to the resulting sites.

    Raises:
        EmptySiteGridError: If filtering removes every lattice point.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")

    corner = box.center - 0.5 * box.side
    n_axis = int(np.floor(box.side / delta + 1e-9)) + 1
    offsets = delta * np.arange(n_axis)
    gx, gy, gz = np.meshgrid(corner[0] + offsets, corner[1] + offsets,
                             corner[2] + offsets, indexing="ij")
    points = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])

    counts = np.array(density.counts)
    t = (points - density.origin) / density.spacing
    eps = 1e-9
    inside = np.all((t >= -eps) & (t <= counts - 1 + eps), axis=1)

    keep = np.zeros(points.shape[0], dtype=bool)
    if np.any(inside):
        ti = np.clip(t[inside], 0.0, counts - 1)
        i0 = np.minimum(ti.astype(np.int64), counts - 2)
        vol = density.as_array()
        cell_max = np.full(i0.shape[0], -np.inf)
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    vals = vol[i0[:, 0] + dx, i0[:, 1] + dy, i0[:, 2] + dz]
                    cell_max = np.maximum(cell_max, vals)
        keep[inside] = cell_max >= tau_g

    if not np.any(keep):
        raise EmptySiteGridError(
            f"no candidate sites survive: box side {box.side}, delta {delta}, "
            f"tau_g {tau_g} (lattice had {points.shape[0]} points)")
    return SiteGrid(sites=points[keep], sigma2=sigma2, delta=delta, tau_g=tau_g,
                    source_spacing=float(density.spacing[0]))


def sites_to_csv(grid: SiteGrid) -> str:
    """CSV export, one row per candidate site."""
    lines = ["index,x,y,z"]
    for i, (x, y, z) in enumerate(grid.sites):
        lines.append(f"{i},{x:.6f},{y:.6f},{z:.6f}")
    return "\n".join(lines) + "\n"
