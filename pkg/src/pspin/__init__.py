"""Numerical laboratory for quantum annealing of the infinite-range
p-spin ferromagnet with a k-body transverse driver: (lambda, s) phase
diagrams, thermodynamic-limit energy gaps, exact maximal-spin-sector
spectra, ground-state overlaps, static-approximation cross-checks, and
annealing-path scoring.
"""

__version__ = "0.1.0"

from .model import AnnealPoint, ModelParams, Phase, SemiClassicalState

__all__ = [
    "AnnealPoint",
    "ModelParams",
    "Phase",
    "SemiClassicalState",
    "__version__",
]
