"""Scalar density fields on regular grids.

Handles the OpenDX scalar format used by solvent-density tooling, trilinear
sampling, and synthesis of planted Gaussian test fields.  Grids are stored
flat with the z index varying fastest, matching the DX data layout:

    object 1 class gridpositions counts NX NY NZ
    origin X Y Z
    delta DX 0 0
    delta 0 DY 0
    delta 0 0 DZ
    object 2 class gridconnections counts NX NY NZ
    object 3 class array type double rank 0 items N data follows
    v(0,0,0) v(0,0,1) v(0,0,2)
    ...

Only axis-aligned deltas are supported; distribution functions are
non-negative, so negative values are treated as file corruption.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np

from .errors import DxFormatError

_TRAILER_KEYWORDS = ("attribute", "object", "component", "field", "end")


@dataclass(frozen=True)
class DensityGrid:
    """Immutable regular grid of non-negative scalar values.

    Attributes:
        origin: Cartesian position of node (0, 0, 0), in angstrom.
        spacing: Per-axis node spacing, in angstrom, all positive.
        counts: Nodes per axis, each at least 2.
        values: Flat array of length nx*ny*nz, z varying fastest.
    """

    origin: np.ndarray
    spacing: np.ndarray
    counts: tuple
    values: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3).copy()
        spacing = np.asarray(self.spacing, dtype=np.float64).reshape(3).copy()
        counts = tuple(int(c) for c in self.counts)
        values = np.asarray(self.values, dtype=np.float64).reshape(-1).copy()
        if len(counts) != 3 or any(c < 2 for c in counts):
            raise ValueError(f"counts must be three integers >= 2, got {counts}")
        if not np.all(spacing > 0):
            raise ValueError(f"spacing must be positive, got {spacing}")
        if not np.all(np.isfinite(origin)):
            raise ValueError("origin must be finite")
        n = counts[0] * counts[1] * counts[2]
        if values.size != n:
            raise ValueError(f"expected {n} values for counts {counts}, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("density values must be finite")
        if np.any(values < 0):
            raise ValueError("density values must be non-negative")
        for arr in (origin, spacing, values):
            arr.flags.writeable = False
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "values", values)

    @property
    def n_nodes(self) -> int:
        return self.values.size

    @property
    def bbox_min(self) -> np.ndarray:
        return self.origin

    @property
    def bbox_max(self) -> np.ndarray:
        return self.origin + self.spacing * (np.array(self.counts) - 1)

    def as_array(self) -> np.ndarray:
        """Values reshaped to (nx, ny, nz); a read-only view."""
        return self.values.reshape(self.counts)

    def axis_coords(self, axis: int) -> np.ndarray:
        """Node coordinates along one axis."""
        return self.origin[axis] + self.spacing[axis] * np.arange(self.counts[axis])


def _read_source(source) -> str:
    if hasattr(source, "read"):
        return source.read()
    if isinstance(source, os.PathLike):
        with open(source, "r") as fh:
            return fh.read()
    text = str(source)
    if "\n" in text:
        return text
    if not os.path.exists(text):
        raise DxFormatError(f"no such density file: {text}")
    with open(text, "r") as fh:
        return fh.read()


def parse_dx(source) -> DensityGrid:
    """Parse an OpenDX scalar file into a DensityGrid.

    Args:
        source: File path, file-like object, or the file contents as a
            string (anything containing a newline is treated as contents).

    Returns:
        The parsed grid.

    Raises:
        DxFormatError: On malformed headers, non-axis-aligned deltas,
            value-count mismatches, unparseable or negative values.
    """
    text = _read_source(source)
    lines = text.splitlines()

    header = []
    data_start = None
    for idx, raw in enumerate(lines):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        header.append(line)
        if re.search(r"data\s+follows\s*$", line):
            data_start = idx + 1
            break
    if data_start is None:
        raise DxFormatError("missing 'data follows' marker")
    if len(header) < 7:
        raise DxFormatError("incomplete header: expected positions, origin, "
                            "three deltas, connections and array objects")

    m = re.fullmatch(r"object\s+1\s+class\s+gridpositions\s+counts\s+(\d+)\s+(\d+)\s+(\d+)",
                     header[0])
    if m is None:
        raise DxFormatError(f"bad gridpositions line: {header[0]!r}")
    counts = tuple(int(g) for g in m.groups())
    if any(c < 2 for c in counts):
        raise DxFormatError(f"grid counts must each be >= 2, got {counts}")

    m = re.fullmatch(r"origin\s+(\S+)\s+(\S+)\s+(\S+)", header[1])
    if m is None:
        raise DxFormatError(f"bad origin line: {header[1]!r}")
    try:
        origin = np.array([float(g) for g in m.groups()])
    except ValueError:
        raise DxFormatError(f"non-numeric origin: {header[1]!r}") from None

    spacing = np.zeros(3)
    for axis in range(3):
        line = header[2 + axis]
        m = re.fullmatch(r"delta\s+(\S+)\s+(\S+)\s+(\S+)", line)
        if m is None:
            raise DxFormatError(f"bad delta line: {line!r}")
        try:
            row = np.array([float(g) for g in m.groups()])
        except ValueError:
            raise DxFormatError(f"non-numeric delta: {line!r}") from None
        off = [row[a] for a in range(3) if a != axis]
        if any(v != 0.0 for v in off):
            raise DxFormatError(f"delta row {axis} is not axis-aligned: {line!r}")
        if row[axis] <= 0:
            raise DxFormatError(f"delta row {axis} must be positive: {line!r}")
        spacing[axis] = row[axis]

    m = re.fullmatch(r"object\s+2\s+class\s+gridconnections\s+counts\s+(\d+)\s+(\d+)\s+(\d+)",
                     header[5])
    if m is None:
        raise DxFormatError(f"bad gridconnections line: {header[5]!r}")
    if tuple(int(g) for g in m.groups()) != counts:
        raise DxFormatError("gridconnections counts disagree with gridpositions")

    array_line = header[6]
    if not re.match(r"object\s+3\s+class\s+array\b", array_line):
        raise DxFormatError(f"bad array object line: {array_line!r}")
    n_expected = counts[0] * counts[1] * counts[2]
    m = re.search(r"items\s+(\d+)", array_line)
    if m is not None and int(m.group(1)) != n_expected:
        raise DxFormatError(f"array declares {m.group(1)} items but counts "
                            f"{counts} imply {n_expected}")

    data_lines = []
    in_trailer = False
    for raw in lines[data_start:]:
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        word = line.split(None, 1)[0].lower()
        if word in _TRAILER_KEYWORDS:
            in_trailer = True
            continue
        if in_trailer:
            raise DxFormatError("data tokens after trailing attribute section")
        data_lines.append(line)

    tokens = " ".join(data_lines).split()
    if len(tokens) != n_expected:
        raise DxFormatError(f"expected {n_expected} data values, found {len(tokens)}")
    try:
        values = np.array(tokens, dtype=np.float64)
    except ValueError:
        bad = next(t for t in tokens if not _is_float(t))
        raise DxFormatError(f"unparseable data value: {bad!r}") from None
    if not np.all(np.isfinite(values)):
        raise DxFormatError("non-finite data value in density")
    if np.any(values < 0):
        idx = int(np.argmin(values))
        raise DxFormatError(f"negative density value {values[idx]} at flat index {idx}")

    return DensityGrid(origin=origin, spacing=spacing, counts=counts, values=values)


def _is_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def write_dx(grid: DensityGrid) -> str:
    """Serialize a grid to OpenDX text with ten significant digits."""
    nx, ny, nz = grid.counts
    n = grid.n_nodes
    out = [
        "# scalar density written by hydrosite",
        f"object 1 class gridpositions counts {nx} {ny} {nz}",
        "origin {:.9e} {:.9e} {:.9e}".format(*grid.origin),
        f"delta {grid.spacing[0]:.9e} 0 0",
        f"delta 0 {grid.spacing[1]:.9e} 0",
        f"delta 0 0 {grid.spacing[2]:.9e}",
        f"object 2 class gridconnections counts {nx} {ny} {nz}",
        f"object 3 class array type double rank 0 items {n} data follows",
    ]
    vals = grid.values
    for start in range(0, n, 3):
        out.append(" ".join(f"{v:.9e}" for v in vals[start:start + 3]))
    out.append('attribute "dep" string "positions"')
    return "\n".join(out) + "\n"


def save_dx(grid: DensityGrid, path) -> None:
    with open(path, "w") as fh:
        fh.write(write_dx(grid))


def interpolate_many(grid: DensityGrid, points) -> np.ndarray:
    """Trilinear interpolation at an (m, 3) array of points."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    counts = np.array(grid.counts)
    t = (pts - grid.origin) / grid.spacing
    eps = 1e-9
    if np.any(t < -eps) or np.any(t > counts - 1 + eps):
        bad = pts[np.any((t < -eps) | (t > counts - 1 + eps), axis=1)][0]
        raise ValueError(f"point {bad.tolist()} outside density domain")
    t = np.clip(t, 0.0, counts - 1)
    i0 = np.minimum(t.astype(np.int64), counts - 2)
    f = t - i0
    vol = grid.as_array()
    ix, iy, iz = i0[:, 0], i0[:, 1], i0[:, 2]
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]

    def corner(dx, dy, dz):
        return vol[ix + dx, iy + dy, iz + dz]

    c00 = corner(0, 0, 0) * (1 - fz) + corner(0, 0, 1) * fz
    c01 = corner(0, 1, 0) * (1 - fz) + corner(0, 1, 1) * fz
    c10 = corner(1, 0, 0) * (1 - fz) + corner(1, 0, 1) * fz
    c11 = corner(1, 1, 0) * (1 - fz) + corner(1, 1, 1) * fz
    c0 = c00 * (1 - fy) + c01 * fy
    c1 = c10 * (1 - fy) + c11 * fy
    return c0 * (1 - fx) + c1 * fx


def interpolate(grid: DensityGrid, point) -> float:
    """Trilinear interpolation at a single point inside the grid."""
    return float(interpolate_many(grid, np.asarray(point).reshape(1, 3))[0])


def synthesize_planted(sites, amplitude, sigma2, origin, spacing, counts,
                       noise_level=0.0, seed=None) -> DensityGrid:
    """Build a density of isotropic Gaussians planted at known positions.

    Each site contributes amplitude * exp(-|r - site|^2 / (2 sigma2));
    optional uniform noise in [0, noise_level] is added per node.  Sites
    must lie inside the grid's bounding box so the planted peaks are
    actually represented.

    Args:
        sites: (k, 3) positions, may be empty.
        amplitude: Peak height of each planted Gaussian, >= 0.
        sigma2: Gaussian variance in angstrom^2, > 0.
        origin, spacing, counts: Output grid geometry.
        noise_level: Upper bound of the uniform noise floor, >= 0.
        seed: RNG seed for the noise; unused when noise_level is 0.

    Returns:
        A DensityGrid; identical inputs give identical grids.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    if amplitude < 0:
        raise ValueError(f"amplitude must be non-negative, got {amplitude}")
    if noise_level < 0:
        raise ValueError(f"noise_level must be non-negative, got {noise_level}")
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    spacing = np.asarray(spacing, dtype=np.float64).reshape(3)
    counts = tuple(int(c) for c in counts)
    sites = np.asarray(sites, dtype=np.float64).reshape(-1, 3)
    bbox_max = origin + spacing * (np.array(counts) - 1)
    for s in sites:
        if np.any(s < origin - 1e-9) or np.any(s > bbox_max + 1e-9):
            raise ValueError(f"planted site {s.tolist()} outside grid box")

    axes = [origin[a] + spacing[a] * np.arange(counts[a]) for a in range(3)]
    field = np.zeros(counts, dtype=np.float64)
    for s in sites:
        d2 = ((axes[0] - s[0]) ** 2)[:, None, None] \
            + ((axes[1] - s[1]) ** 2)[None, :, None] \
            + ((axes[2] - s[2]) ** 2)[None, None, :]
        field += np.exp(-d2 / (2.0 * sigma2))
    field *= amplitude
    if noise_level > 0:
        rng = np.random.default_rng(seed)
        field += noise_level * rng.random(counts)
    return DensityGrid(origin=origin, spacing=spacing, counts=counts,
                       values=field.reshape(-1))
