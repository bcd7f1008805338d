"""Hot numerical kernels with a compiled core and a pure-numpy fallback.

The backend is chosen once at import time.  Set ``PSPIN_BACKEND=python``
to force the numpy fallback or ``PSPIN_BACKEND=compiled`` to require the
Cython extension (raising if it is missing); the default tries the
extension and silently falls back.
"""

from __future__ import annotations

import math
import os

import numpy as np

from ..model import powi

__all__ = [
    "BACKEND",
    "batch_candidate_minima",
    "energy_tables",
    "golden_refine",
    "newton_refine",
    "sector_apply",
]

_requested = os.environ.get("PSPIN_BACKEND", "auto").strip().lower()

if _requested in ("auto", ""):
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _ref as _impl

        BACKEND = "python"
elif _requested == "compiled":
    from . import _core as _impl

    BACKEND = "compiled"
elif _requested in ("python", "ref"):
    from . import _ref as _impl

    BACKEND = "python"
else:
    raise ValueError(
        f"PSPIN_BACKEND must be 'auto', 'compiled' or 'python', got {_requested!r}"
    )

batch_candidate_minima = _impl.batch_candidate_minima
golden_refine = _impl.golden_refine
newton_refine = _impl.newton_refine
sector_apply = _impl.sector_apply


def energy_tables(p: int, k: int, thetas: np.ndarray):
    """Basis tables (sin^p, cos^k, cos) over a theta grid.

    The batched energy at any annealing point is a fixed linear
    combination of these three tables, so one set serves a whole scan.
    """
    st = np.sin(thetas)
    ct = np.cos(thetas)
    # Exact endpoint values; linspace grids hit 0 and pi only up to rounding.
    st = np.where((thetas == 0.0) | (thetas == math.pi), 0.0, st)
    ct = np.where(thetas == math.pi, -1.0, ct)
    return powi(st, p), powi(ct, k), ct
