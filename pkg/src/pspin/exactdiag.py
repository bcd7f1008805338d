"""Exact spectra in the maximal-spin sector and ground-state overlaps.

The total spin is conserved and the annealing run starts fully polarized,
so only the S = N/2 sector matters; it has dimension N+1 in the S^z
eigenbasis.  The Hamiltonian is applied matrix-free in O(k*N) per
product: the target term is diagonal, and each power of the transverse
operator is one tridiagonal sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh

from . import kernels
from .model import AnnealPoint, ModelParams

__all__ = [
    "NoConvergence",
    "SectorOperator",
    "SectorSpectrum",
    "apply",
    "lowest_eigenpairs",
    "overlap_tf",
    "overlap_vk",
    "vk_ground_in_sector",
]

_DENSE_LIMIT = 512       # dense solve up to this many spins
_DEGENERACY_TOL = 1e-10


class NoConvergence(RuntimeError):
    """The iterative eigensolver failed; the spectrum may be near-degenerate."""


@dataclass
class SectorOperator:
    """The annealing Hamiltonian restricted to the S = N/2 sector."""

    n: int
    params: ModelParams
    pt: AnnealPoint
    _diag: np.ndarray = field(init=False, repr=False)
    _offdiag: np.ndarray = field(init=False, repr=False)
    _coeff_k: float = field(init=False, repr=False)
    _coeff_tf: float = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        n = self.n
        s_tot = 0.5 * n
        m = np.arange(n + 1, dtype=float) - s_tot
        self._diag = -self.pt.s * self.pt.lam * n * (2.0 * m / n) ** self.params.p
        raised = np.sqrt(s_tot * (s_tot + 1.0) - m[:-1] * (m[:-1] + 1.0))
        # Off-diagonals of T = (2/N) S^x; S^x couples m to m +/- 1 with
        # matrix element raised/2.
        self._offdiag = raised / n
        self._coeff_k = self.pt.s * (1.0 - self.pt.lam) * n
        self._coeff_tf = -(1.0 - self.pt.s) * n

    @property
    def dim(self) -> int:
        return self.n + 1

    def apply(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise ValueError(f"vector must have length {self.dim}, got {v.shape}")
        return kernels.sector_apply(
            v, self._diag, self._offdiag, self.params.k, self._coeff_k, self._coeff_tf
        )

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(
            (self.dim, self.dim), matvec=self.apply, dtype=float
        )

    def dense(self) -> np.ndarray:
        t = np.zeros((self.dim, self.dim))
        idx = np.arange(self.n)
        t[idx, idx + 1] = self._offdiag
        t[idx + 1, idx] = self._offdiag
        h = np.diag(self._diag) + self._coeff_tf * t
        h += self._coeff_k * np.linalg.matrix_power(t, self.params.k)
        return h


def apply(op: SectorOperator, v: np.ndarray) -> np.ndarray:
    """H v in the sector basis (module-level alias of SectorOperator.apply)."""
    return op.apply(v)


@dataclass
class SectorSpectrum:
    """Lowest eigenpairs of a sector operator, eigenvalues ascending."""

    eigenvalues: np.ndarray
    ground_vector: np.ndarray
    gap_n: float
    degenerate: bool = False


def _fix_sign(v: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(v)))
    if v[pivot] < 0.0:
        return -v
    return v


def lowest_eigenpairs(
    op: SectorOperator, count: int = 2, distinct_gap: bool = False
) -> SectorSpectrum:
    """The ``count`` lowest eigenpairs of the sector Hamiltonian.

    Dense solve for small sectors; otherwise a Lanczos iteration with a
    deterministic all-ones start vector.  With ``distinct_gap`` the
    reported gap skips levels within 1e-10 of the ground state (relevant
    at first-order points, which host near-degenerate doublets).
    """
    if not 1 <= count <= op.dim:
        raise ValueError(f"count must lie in [1, {op.dim}]")
    if op.n <= _DENSE_LIMIT or count >= op.dim - 1:
        evals, evecs = eigh(op.dense())
        evals = evals[:count]
        ground = evecs[:, 0]
    else:
        v0 = np.ones(op.dim) / math.sqrt(op.dim)
        try:
            evals, evecs = eigsh(
                op.as_linear_operator(),
                k=count,
                which="SA",
                v0=v0,
                maxiter=10 * op.dim,
                ncv=min(op.dim, max(32, 2 * count + 1)),
                tol=0,
            )
        except ArpackNoConvergence as exc:
            raise NoConvergence(
                f"Lanczos did not converge for n={op.n} at "
                f"(lambda={op.pt.lam}, s={op.pt.s}); spectrum may be near-degenerate"
            ) from exc
        order = np.argsort(evals)
        evals = evals[order]
        ground = evecs[:, order[0]]

    ground = _fix_sign(np.asarray(ground, dtype=float))
    evals = np.asarray(evals, dtype=float)
    degenerate = bool(np.any(np.diff(evals) < _DEGENERACY_TOL))
    gap_n = float(evals[1] - evals[0]) if count >= 2 else 0.0
    if distinct_gap and count >= 2:
        above = evals[evals - evals[0] > _DEGENERACY_TOL]
        if above.size:
            gap_n = float(above[0] - evals[0])
    return SectorSpectrum(evals, ground, gap_n, degenerate)


# ---------------------------------------------------------------------------
# Ground-state overlaps
# ---------------------------------------------------------------------------

def _log_binomial(n: int, r: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)


def overlap_tf(n: int) -> float:
    """Amplitude between the all-up-x and all-up-z product states: 2**(-n/2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 ** (-0.5 * n)


def overlap_vk(n: int, k: int) -> float:
    """Ground-state overlap amplitude of the k-body driver with the target.

    Odd k aligns the spins along -x, so the amplitude is 2**(-n/2) like
    the plain transverse field.  Even k selects the zero-x-magnetization
    state, whose overlap decays only algebraically: for even n it is
    sqrt(C(n, n/2)) / 2**(n/2).  For odd n the ground doublet sits at
    x-magnetization +/- 1; the amplitude is the norm of the projection
    onto that two-dimensional space, sqrt(C(n,(n+1)/2) + C(n,(n-1)/2))
    / 2**(n/2).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if k < 2:
        raise ValueError("k must be >= 2")
    if k % 2 == 1:
        return 2.0 ** (-0.5 * n)
    if n % 2 == 0:
        log_amp2 = _log_binomial(n, n // 2) - n * math.log(2.0)
    else:
        log_amp2 = math.log(2.0) + _log_binomial(n, (n + 1) // 2) - n * math.log(2.0)
    return math.exp(0.5 * log_amp2)


def _x_basis_product_state(n: int, down: bool) -> np.ndarray:
    """Sector coefficients of the product state polarized along +/- x."""
    i = np.arange(n + 1)  # number of up spins along z
    log_c = np.array([_log_binomial(n, int(r)) for r in i])
    amp = np.exp(0.5 * (log_c - n * math.log(2.0)))
    if down:
        signs = np.where((n - i) % 2 == 0, 1.0, -1.0)
        amp = amp * signs
    return amp


def vk_ground_in_sector(n: int, k: int) -> np.ndarray:
    """Sector-basis ground state of the bare k-body driver, unit norm.

    Odd k: the all-down-x product state.  Even k: the x-magnetization
    eigenstate at 0 (even n) or, for odd n, the normalized projection of
    the fully z-polarized state onto the degenerate +/-1/2 doublet (the
    symmetric combination, with overall sign fixed positive on the top
    S^z component).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if k < 2:
        raise ValueError("k must be >= 2")
    if k % 2 == 1:
        return _x_basis_product_state(n, down=True)

    s_tot = 0.5 * n
    m = np.arange(n + 1, dtype=float) - s_tot
    offdiag = 0.5 * np.sqrt(s_tot * (s_tot + 1.0) - m[:-1] * (m[:-1] + 1.0))
    evals, evecs = eigh_tridiagonal(np.zeros(n + 1), offdiag)
    if n % 2 == 0:
        j = int(np.argmin(np.abs(evals)))
        vec = evecs[:, j]
        if vec[-1] < 0.0:
            vec = -vec
        return vec
    plus = int(np.argmin(np.abs(evals - 0.5)))
    minus = int(np.argmin(np.abs(evals + 0.5)))
    v_plus = evecs[:, plus]
    v_minus = evecs[:, minus]
    # Fix each eigenvector's sign by its top S^z component, i.e. by the
    # sign of its overlap with the fully z-polarized state.
    if v_plus[-1] < 0.0:
        v_plus = -v_plus
    if v_minus[-1] < 0.0:
        v_minus = -v_minus
    vec = (v_plus + v_minus) / math.sqrt(2.0)
    return vec / np.linalg.norm(vec)
