"""Crystallographic water extraction from PDB files and pocket boxes.

Only water oxygens are of interest: records named HOH or WAT whose atom
name starts with O.  Fixed-width PDB columns are used throughout (record
name 1-6, atom name 13-16, altloc 17, residue name 18-20, x/y/z 31-38 /
39-46 / 47-54); alternate locations other than blank or 'A' are skipped
so each water contributes one position.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import PdbFormatError

DUPLICATE_TOL = 0.1  # angstrom; two records closer than this are one water twice

_WATER_RESNAMES = ("HOH", "WAT")


@dataclass(frozen=True)
class CrystalWaters:
    """Water oxygen positions plus their chain:resseq source labels."""

    positions: np.ndarray  # (n, 3)
    labels: tuple

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3).copy()
        labels = tuple(str(x) for x in self.labels)
        if len(labels) != pos.shape[0]:
            raise ValueError(f"{pos.shape[0]} positions but {len(labels)} labels")
        if pos.size and not np.all(np.isfinite(pos)):
            raise ValueError("water positions must be finite")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class PocketBox:
    """Axis-aligned cube defined by its center and side length."""

    center: np.ndarray
    side: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64).reshape(3).copy()
        side = float(self.side)
        if not np.all(np.isfinite(center)):
            raise ValueError("box center must be finite")
        if side <= 0:
            raise ValueError(f"box side must be positive, got {side}")
        center.flags.writeable = False
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "side", side)

    @property
    def lo(self) -> np.ndarray:
        return self.center - 0.5 * self.side

    @property
    def hi(self) -> np.ndarray:
        return self.center + 0.5 * self.side

    def contains(self, points) -> np.ndarray:
        """Boolean mask of points inside the closed box."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)


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
        raise PdbFormatError(f"no such PDB file: {text}")
    with open(text, "r") as fh:
        return fh.read()


def parse_waters(source) -> CrystalWaters:
    """Extract water oxygen positions from PDB text.

    Args:
        source: File path, file-like object, or PDB contents.

    Returns:
        CrystalWaters, possibly empty (apo pockets are legal input).

    Raises:
        PdbFormatError: On unparseable coordinates in a water record or
            two waters closer than 0.1 angstrom.
    """
    text = _read_source(source)
    positions = []
    labels = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        record = line[:6].strip()
        if record not in ("ATOM", "HETATM"):
            continue
        if len(line) < 54:
            if line[17:20].strip().upper() in _WATER_RESNAMES:
                raise PdbFormatError(f"line {lineno}: truncated water record")
            continue
        resname = line[17:20].strip().upper()
        if resname not in _WATER_RESNAMES:
            continue
        name = line[12:16].strip()
        if not name.startswith("O"):
            continue
        altloc = line[16]
        if altloc not in (" ", "A"):
            continue
        try:
            xyz = [float(line[30:38]), float(line[38:46]), float(line[46:54])]
        except ValueError:
            raise PdbFormatError(
                f"line {lineno}: bad coordinate fields {line[30:54]!r}") from None
        positions.append(xyz)
        chain = line[21] if len(line) > 21 else " "
        resseq = line[22:26].strip() if len(line) >= 26 else ""
        labels.append(f"{chain.strip() or '_'}:{resseq or '?'}")

    pos = np.array(positions, dtype=np.float64).reshape(-1, 3)
    if pos.shape[0] >= 2:
        d2 = np.sum((pos[:, None, :] - pos[None, :, :]) ** 2, axis=2)
        iu = np.triu_indices(pos.shape[0], 1)
        close = d2[iu] < DUPLICATE_TOL ** 2
        if np.any(close):
            k = int(np.argmax(close))
            i, j = int(iu[0][k]), int(iu[1][k])
            raise PdbFormatError(
                f"waters {labels[i]} and {labels[j]} are duplicates "
                f"(closer than {DUPLICATE_TOL} angstrom)")
    return CrystalWaters(positions=pos, labels=tuple(labels))


def pocket_from_waters(waters: CrystalWaters, side: float = 15.0) -> PocketBox:
    """Cubic pocket centered on the waters' centroid."""
    if len(waters) == 0:
        raise ValueError("cannot derive a pocket box from zero waters")
    return PocketBox(center=waters.positions.mean(axis=0), side=side)


def filter_to_box(waters: CrystalWaters, box: PocketBox) -> CrystalWaters:
    """Waters inside the closed box, original order preserved."""
    if len(waters) == 0:
        return waters
    keep = box.contains(waters.positions)
    return CrystalWaters(positions=waters.positions[keep],
                         labels=tuple(l for l, k in zip(waters.labels, keep) if k))


def format_waters_pdb(positions) -> str:
    """Render positions as HETATM water-oxygen records ending in END.

    The layout round-trips through parse_waters: occupancy 1.00, B 0.00,
    residue HOH, one oxygen per residue.
    """
    pts = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    lines = []
    for idx, (x, y, z) in enumerate(pts, start=1):
        lines.append(
            f"HETATM{idx:5d}  O   HOH A{idx % 10000:4d}    "
            f"{x:8.3f}{y:8.3f}{z:8.3f}  1.00  0.00           O")
    lines.append("END")
    return "\n".join(lines) + "\n"
