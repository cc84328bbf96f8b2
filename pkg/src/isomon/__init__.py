"""Formal normal forms, Stokes data, residue moment maps, and isomonodromy
Hamiltonians for meromorphic connections with irregular singularities on the
Riemann sphere.

Everything operates on truncated matrix Laurent series (series.MatrixLaurent)
and global rational matrix 1-forms (rational.RationalForm).  All operations
are pure functions on immutable-by-convention values; instances are safe to
share across threads.
"""

__version__ = "0.1.0"

from .lie import RootData, TorusElement, dimension_report, invariant_pairing, regular_check
from .normal_form import DiagSplit, FormalType, NotGenericError, compatible_framing, diag_split, formal_type
from .series import MatrixLaurent, gauge_transform, polar_decompose, residue

__all__ = [
    "MatrixLaurent",
    "RootData",
    "TorusElement",
    "DiagSplit",
    "FormalType",
    "NotGenericError",
    "compatible_framing",
    "diag_split",
    "dimension_report",
    "formal_type",
    "gauge_transform",
    "invariant_pairing",
    "polar_decompose",
    "regular_check",
    "residue",
]
