"""Exception types shared across the package.

Each class maps to one CLI exit code / service error code, so callers can
tell apart bad input files, an over-aggressive site filter, and solver
size caps without string matching.
"""


class HydrositeError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(HydrositeError):
    """Invalid or unknown run-configuration keys/values."""


class DxFormatError(HydrositeError):
    """Malformed OpenDX density file."""


class PdbFormatError(HydrositeError):
    """Malformed PDB water file."""


class QuboFormatError(HydrositeError):
    """Malformed QUBO COO file or sidecar."""


class EmptySiteGridError(HydrositeError):
    """Site filtering removed every candidate point."""


class SolverCapError(HydrositeError):
    """Problem size exceeds a solver's hard cap."""


class DegenerateGeometryError(HydrositeError):
    """Point sets without enough spread for a projection."""
