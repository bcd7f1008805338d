"""Global minimization of the classical energy landscape and everything
built on top of it: phase classification, phase-diagram scans, transition
lines, and the closed-form large-p limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from . import kernels
from ._pool import map_index_chunks
from .model import (
    AnnealPoint,
    ModelParams,
    Phase,
    SemiClassicalState,
    energy,
    energy_coefficients,
    powi,
)

__all__ = [
    "ApproximationInvalid",
    "BranchEnergy",
    "BranchEstimate",
    "LineKind",
    "NoDiscontinuity",
    "PhaseDiagram",
    "TransitionLine",
    "analytic_transition_lines",
    "classify",
    "find_theta0",
    "finite_p_branch_energies",
    "minimize_batch",
    "pinfty_energies",
    "pinfty_winner",
    "scan_diagram",
    "second_order_line",
    "trace_first_order",
]

THETA_GRID = 2048          # default number of grid intervals on [0, pi]
MAX_CANDIDATES = 4         # landscape has at most two interior minima + edges
DEGENERACY_TOL = 1e-12     # energy window treated as an exact tie
JUMP_FLOOR = 1e-3          # smallest theta0 jump counted as first order
ANGLE_TOL = 1e-8           # |theta0| below this is a paramagnet
BAND = 0.05                # relative band for the F / F' sub-labels

_GOLDEN_ITERS = 48         # bracket width pi/1024 * 0.618**48 < 1e-12
_NEWTON_ITERS = 4


class ApproximationInvalid(ValueError):
    """The small-angle ferromagnetic branch formulas do not apply."""


class NoDiscontinuity(RuntimeError):
    """No branch crossing was detected near the requested seed."""


class LineKind(str, Enum):
    FIRST_ORDER = "first-order"
    SECOND_ORDER = "second-order"

    def __str__(self) -> str:
        return self.value


class BranchEnergy(NamedTuple):
    energy: float
    valid: bool


@dataclass(frozen=True)
class BranchEstimate:
    energy: float
    cos_theta0: float
    reliable: bool


@dataclass(frozen=True)
class TransitionLine:
    kind: LineKind
    pair: tuple[Phase, Phase]
    points: list[AnnealPoint]
    tolerance: float


@dataclass
class MinimizeResult:
    """Vectorized output of the global landscape minimization."""

    theta0: np.ndarray
    energy: np.ndarray
    coexistence: np.ndarray
    alt_theta: np.ndarray
    alt_energy: np.ndarray
    has_alt: np.ndarray


@dataclass
class PhaseDiagram:
    """Row-major grid (lambda outer, s inner) of landscape minima."""

    params: ModelParams
    lambdas: np.ndarray
    svals: np.ndarray
    theta0: np.ndarray
    energy: np.ndarray
    phase: np.ndarray       # int8 codes, see PHASE_CODES
    coexistence: np.ndarray

    @property
    def resolution(self) -> tuple[int, int]:
        return len(self.lambdas), len(self.svals)

    @property
    def mx(self) -> np.ndarray:
        return np.cos(self.theta0)

    @property
    def mz(self) -> np.ndarray:
        return np.sin(self.theta0)

    def phase_at(self, i: int, j: int) -> Phase:
        return CODE_TO_PHASE[int(self.phase[i, j])]

    def state(self, i: int, j: int) -> SemiClassicalState:
        pt = AnnealPoint(float(self.lambdas[i]), float(self.svals[j]))
        return SemiClassicalState.from_theta(
            self.theta0[i, j], pt, self.params, self.phase_at(i, j),
            bool(self.coexistence[i, j]),
        )


PHASE_CODES = {
    Phase.QP_PLUS: 0,
    Phase.QP_MINUS: 1,
    Phase.F: 2,
    Phase.F_PRIME: 3,
    Phase.INTERMEDIATE: 4,
}
CODE_TO_PHASE = {v: k for k, v in PHASE_CODES.items()}


@lru_cache(maxsize=32)
def _tables(p: int, k: int, n_grid: int):
    thetas = np.linspace(0.0, math.pi, n_grid + 1)
    tab_sp, tab_ck, tab_c = kernels.energy_tables(p, k, thetas)
    return thetas, tab_sp, tab_ck, tab_c


def _batch_energy(theta, c1, c2, c3, p, k):
    st = np.sin(theta)
    ct = np.cos(theta)
    return c1 * powi(st, p) + c2 * powi(ct, k) + c3 * ct


def minimize_batch(
    lams: np.ndarray,
    svals: np.ndarray,
    params: ModelParams,
    n_grid: int = THETA_GRID,
) -> MinimizeResult:
    """Global minimum of the energy over theta in [0, pi] for many points.

    Dense-grid bracketing on ``n_grid`` intervals, then golden-section plus
    Newton polish of every surviving local minimum.  Exact ties (within
    1e-12 in energy) are broken toward larger mz and flagged as
    coexistence; the best minimum separated by more than 1e-3 in theta is
    reported as the alternative branch.
    """
    lams = np.ascontiguousarray(lams, dtype=float)
    svals = np.ascontiguousarray(svals, dtype=float)
    p, k = params.p, params.k
    thetas, tab_sp, tab_ck, tab_c = _tables(p, k, n_grid)
    c1 = -(svals * lams)
    c2 = svals * (1.0 - lams)
    c3 = svals - 1.0
    m = c1.size

    idx = kernels.batch_candidate_minima(c1, c2, c3, tab_sp, tab_ck, tab_c, MAX_CANDIDATES)
    cand_theta = np.full((m, MAX_CANDIDATES), np.nan)
    cand_energy = np.full((m, MAX_CANDIDATES), np.inf)

    for j in range(MAX_CANDIDATES):
        col = idx[:, j]
        valid = col >= 0
        if not valid.any():
            continue
        boundary = valid & ((col == 0) | (col == n_grid))
        if boundary.any():
            th = thetas[col[boundary]]
            cand_theta[boundary, j] = th
            cand_energy[boundary, j] = _batch_energy(
                th, c1[boundary], c2[boundary], c3[boundary], p, k
            )
        interior = valid & ~boundary
        if interior.any():
            sel = np.flatnonzero(interior)
            lo = thetas[col[sel] - 1]
            hi = thetas[col[sel] + 1]
            th = kernels.golden_refine(
                c1[sel], c2[sel], c3[sel], p, k, lo, hi, _GOLDEN_ITERS
            )
            th = kernels.newton_refine(
                c1[sel], c2[sel], c3[sel], p, k, th, lo, hi, _NEWTON_ITERS
            )
            cand_theta[sel, j] = th
            cand_energy[sel, j] = _batch_energy(th, c1[sel], c2[sel], c3[sel], p, k)

    best = cand_energy.min(axis=1)
    eligible = cand_energy <= best[:, None] + DEGENERACY_TOL
    mz_score = np.where(eligible, np.sin(cand_theta), -np.inf)
    pick = np.argmax(mz_score, axis=1)
    rows = np.arange(m)
    theta0 = cand_theta[rows, pick]
    theta0 = np.where(theta0 < 1e-12, 0.0, theta0)
    theta0 = np.where(theta0 > math.pi - 1e-12, math.pi, theta0)
    e0 = _batch_energy(theta0, c1, c2, c3, p, k)

    separated = np.abs(cand_theta - theta0[:, None]) > JUMP_FLOOR
    coexistence = (eligible & separated).any(axis=1)

    alt_pool = np.where(separated & np.isfinite(cand_energy), cand_energy, np.inf)
    alt_pick = np.argmin(alt_pool, axis=1)
    alt_energy = alt_pool[rows, alt_pick]
    has_alt = np.isfinite(alt_energy)
    alt_theta = np.where(has_alt, cand_theta[rows, alt_pick], np.nan)

    return MinimizeResult(theta0, e0, coexistence, alt_theta, alt_energy, has_alt)


def _classify_batch(theta0, lams, svals, params: ModelParams) -> np.ndarray:
    """Vectorized phase labels for landscape minima (int8 codes)."""
    p, k = params.p, params.k
    lams = np.asarray(lams, dtype=float)
    svals = np.asarray(svals, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    codes = np.full(theta0.shape, PHASE_CODES[Phase.INTERMEDIATE], dtype=np.int8)
    qp_plus = theta0 < ANGLE_TOL
    qp_minus = theta0 > math.pi - ANGLE_TOL
    codes[qp_plus] = PHASE_CODES[Phase.QP_PLUS]
    codes[qp_minus] = PHASE_CODES[Phase.QP_MINUS]
    ferro = ~(qp_plus | qp_minus)
    if not ferro.any():
        return codes

    c = np.cos(theta0)
    with np.errstate(divide="ignore", invalid="ignore"):
        # The F branch keeps the driver correction for k = 2, where it
        # enters at the same order as the target term.
        if k == 2:
            denom_f = svals * (p * lams + k * (1.0 - lams))
        else:
            denom_f = svals * p * lams
        c_f = (1.0 - svals) / denom_f
        c_fp = np.where(
            svals * (1.0 - lams) > 0.0,
            ((1.0 - svals) / (k * svals * (1.0 - lams))) ** (1.0 / (k - 1)),
            np.inf,
        )
        # Guarded denominators: the closed forms vanish at s = 1, where the
        # band test degenerates to an absolute one.
        dev_f = np.abs(c - c_f) / np.maximum(np.abs(c_f), ANGLE_TOL)
        dev_fp = np.abs(c - c_fp) / np.maximum(np.abs(c_fp), ANGLE_TOL)
    ok_f = ferro & np.isfinite(dev_f) & (dev_f <= BAND)
    ok_fp = ferro & np.isfinite(dev_fp) & (c_fp <= 1.0) & (dev_fp <= BAND)
    both = ok_f & ok_fp
    codes[ok_f] = PHASE_CODES[Phase.F]
    codes[ok_fp] = PHASE_CODES[Phase.F_PRIME]
    if both.any():
        prefer_f = both & (dev_f <= dev_fp)
        codes[both] = PHASE_CODES[Phase.F_PRIME]
        codes[prefer_f] = PHASE_CODES[Phase.F]
    return codes


def classify(state: SemiClassicalState, pt: AnnealPoint, params: ModelParams) -> Phase:
    """Phase label of a stationarity solution at the given point."""
    code = _classify_batch(
        np.array([state.theta0]), np.array([pt.lam]), np.array([pt.s]), params
    )[0]
    return CODE_TO_PHASE[int(code)]


def find_theta0(
    pt: AnnealPoint, params: ModelParams, n_grid: int = THETA_GRID
) -> SemiClassicalState:
    """Global minimizer of the energy over [0, pi] at one annealing point."""
    res = minimize_batch(
        np.array([pt.lam]), np.array([pt.s]), params, n_grid=n_grid
    )
    theta0 = float(res.theta0[0])
    code = _classify_batch(res.theta0, np.array([pt.lam]), np.array([pt.s]), params)[0]
    return SemiClassicalState.from_theta(
        theta0, pt, params, CODE_TO_PHASE[int(code)], bool(res.coexistence[0])
    )


def scan_diagram(
    params: ModelParams,
    resolution: tuple[int, int],
    threads: int | None = None,
    n_grid: int = THETA_GRID,
) -> PhaseDiagram:
    """Phase diagram on a regular (lambda, s) grid covering [0,1] x [0,1].

    Deterministic regardless of the number of worker threads: each row
    block writes to disjoint slices of preallocated arrays.
    """
    n_lam, n_s = resolution
    if n_lam < 2 or n_s < 2:
        raise ValueError("resolution must be at least 2x2")
    lambdas = np.linspace(0.0, 1.0, n_lam)
    svals = np.linspace(0.0, 1.0, n_s)
    lam_flat = np.repeat(lambdas, n_s)
    s_flat = np.tile(svals, n_lam)

    theta0 = np.empty(n_lam * n_s)
    energy_out = np.empty(n_lam * n_s)
    coex = np.empty(n_lam * n_s, dtype=bool)
    codes = np.empty(n_lam * n_s, dtype=np.int8)

    def work(sl: slice) -> None:
        res = minimize_batch(lam_flat[sl], s_flat[sl], params, n_grid=n_grid)
        theta0[sl] = res.theta0
        energy_out[sl] = res.energy
        coex[sl] = res.coexistence
        codes[sl] = _classify_batch(res.theta0, lam_flat[sl], s_flat[sl], params)

    map_index_chunks(work, n_lam * n_s, threads, min_chunk=4 * n_s)

    shape = (n_lam, n_s)
    return PhaseDiagram(
        params=params,
        lambdas=lambdas,
        svals=svals,
        theta0=theta0.reshape(shape),
        energy=energy_out.reshape(shape),
        phase=codes.reshape(shape),
        coexistence=coex.reshape(shape),
    )


# ---------------------------------------------------------------------------
# Closed forms: second-order line and the large-p limit
# ---------------------------------------------------------------------------

def second_order_line(params: ModelParams, lam: float) -> float:
    """The continuous-transition line s = 1 / (1 + k*(1 - lambda))."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    return 1.0 / (1.0 + params.k * (1.0 - lam))


def _fprime_cos(pt: AnnealPoint, k: int) -> float:
    return ((1.0 - pt.s) / (k * pt.s * (1.0 - pt.lam))) ** (1.0 / (k - 1))


def pinfty_energies(pt: AnnealPoint, params: ModelParams) -> dict[Phase, BranchEnergy]:
    """Closed-form branch energies in the p -> infinity limit.

    Every branch that exists at the point is reported; the ``valid`` flag
    marks whether its defining condition (local stability for the
    paramagnets, amplitude <= 1 for the F' cosine, s*lambda > 0 for F)
    holds there.  The F' entry is absent where s*(1-lambda) = 0.
    """
    k = params.k
    s, lam = pt.s, pt.lam
    out: dict[Phase, BranchEnergy] = {}
    s2_threshold = s * (1.0 + k * (1.0 - lam))
    out[Phase.QP_PLUS] = BranchEnergy(s * (1.0 - lam) - 1.0 + s, s2_threshold <= 1.0)
    if k % 2 == 1:
        out[Phase.QP_MINUS] = BranchEnergy(-s * (1.0 - lam) + 1.0 - s, s2_threshold >= 1.0)
    out[Phase.F] = BranchEnergy(-s * lam, s * lam > 0.0)
    if s * (1.0 - lam) > 0.0:
        c = _fprime_cos(pt, k)
        out[Phase.F_PRIME] = BranchEnergy(
            -(k - 1.0) / k * c * (1.0 - s), c <= 1.0
        )
    return out


def pinfty_winner(pt: AnnealPoint, params: ModelParams) -> tuple[Phase, float]:
    """Lowest-energy valid branch in the p -> infinity limit."""
    branches = pinfty_energies(pt, params)
    best: tuple[Phase, float] | None = None
    for phase, be in branches.items():
        if be.valid and (best is None or be.energy < best[1]):
            best = (phase, be.energy)
    if best is None:  # only at s*lam = 0 corners where no flag survives
        phase = min(branches, key=lambda ph: branches[ph].energy)
        best = (phase, branches[phase].energy)
    return best


def finite_p_branch_energies(
    pt: AnnealPoint, params: ModelParams
) -> dict[Phase, BranchEstimate]:
    """Small-angle approximations of the two ferromagnetic branches.

    Cross-check data only; the primary answer always comes from
    ``find_theta0``.  Raises ApproximationInvalid when the expansion
    parameter (1-s)/(s*p*lambda) reaches 0.5.
    """
    p, k = params.p, params.k
    s, lam = pt.s, pt.lam
    if s <= 0.0 or lam <= 0.0:
        raise ApproximationInvalid("requires s > 0 and lambda > 0")
    quotient = (1.0 - s) / (s * p * lam)
    if quotient >= 0.5:
        raise ApproximationInvalid(
            f"(1-s)/(s*p*lambda) = {quotient:.3g} >= 0.5; F branch formula unusable"
        )
    out: dict[Phase, BranchEstimate] = {}
    if k == 2:
        c_f = (1.0 - s) / (s * (p * lam + 2.0 * (1.0 - lam)))
    else:
        c_f = quotient
    e_f = (
        -s * lam * (1.0 - c_f * c_f) ** (0.5 * p - 1.0)
        + s * (1.0 - lam) * c_f**k
        - (1.0 - s) * c_f
    )
    out[Phase.F] = BranchEstimate(float(e_f), float(c_f), True)
    if s * (1.0 - lam) > 0.0:
        c_fp = _fprime_cos(pt, k)
        if c_fp <= 1.0:
            theta = math.acos(c_fp)
            out[Phase.F_PRIME] = BranchEstimate(
                float(energy(theta, pt, params)), float(c_fp), p > 3
            )
    return out


# ---------------------------------------------------------------------------
# Transition lines
# ---------------------------------------------------------------------------

def _pinfty_f(s: float, lam: float) -> float:
    return -s * lam


def _pinfty_fprime(s: float, lam: float, k: int) -> float:
    c = ((1.0 - s) / (k * s * (1.0 - lam))) ** (1.0 / (k - 1))
    return -(k - 1.0) / k * c * (1.0 - s)


def _pinfty_qp_plus(s: float, lam: float) -> float:
    return 2.0 * s - 1.0 - s * lam


def _pinfty_qp_minus(s: float, lam: float) -> float:
    return 1.0 - 2.0 * s + s * lam


def _root_on_s(f, s_lo: float, s_hi: float) -> float | None:
    f_lo, f_hi = f(s_lo), f(s_hi)
    if f_lo == 0.0:
        return s_lo
    if f_hi == 0.0:
        return s_hi
    if f_lo * f_hi > 0.0:
        return None
    return brentq(f, s_lo, s_hi, xtol=1e-13, rtol=8.9e-16)


def analytic_transition_lines(k: int, n_points: int = 257) -> list[TransitionLine]:
    """All transition lines of the p -> infinity phase diagram for one k.

    First-order lines are found by root-finding on the closed-form branch
    energy differences; the second-order line is the exact formula.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    lines: list[TransitionLine] = []
    lam_triple = (k - 1.0) / k

    lam_so = np.linspace(0.0, lam_triple, n_points)
    so_points = [
        AnnealPoint(float(l), 1.0 / (1.0 + k * (1.0 - l))) for l in lam_so
    ]
    lines.append(
        TransitionLine(LineKind.SECOND_ORDER, (Phase.F_PRIME, Phase.QP_PLUS), so_points, 0.0)
    )

    f_qp: list[AnnealPoint] = []
    for lam in np.linspace(lam_triple, 1.0, n_points):
        root = _root_on_s(
            lambda s: _pinfty_f(s, lam) - _pinfty_qp_plus(s, lam), 1e-6, 1.0 - 1e-6
        )
        if root is not None:
            f_qp.append(AnnealPoint(float(lam), root))
    lines.append(
        TransitionLine(LineKind.FIRST_ORDER, (Phase.F, Phase.QP_PLUS), f_qp, 1e-13)
    )

    ff: list[AnnealPoint] = []
    for lam in np.linspace(1e-4, lam_triple, n_points):
        s2 = 1.0 / (1.0 + k * (1.0 - lam))
        root = _root_on_s(
            lambda s: _pinfty_fprime(s, lam, k) - _pinfty_f(s, lam),
            s2 + 1e-12,
            1.0 - 1e-12,
        )
        if root is not None:
            ff.append(AnnealPoint(float(lam), root))
    lines.append(
        TransitionLine(LineKind.FIRST_ORDER, (Phase.F, Phase.F_PRIME), ff, 1e-13)
    )

    if k % 2 == 1:
        f_qpm: list[AnnealPoint] = []
        for lam in np.linspace(0.0, 0.5, n_points):
            root = _root_on_s(
                lambda s: _pinfty_f(s, lam) - _pinfty_qp_minus(s, lam), 1e-6, 1.0
            )
            if root is not None:
                f_qpm.append(AnnealPoint(float(lam), root))
        lines.append(
            TransitionLine(LineKind.FIRST_ORDER, (Phase.F, Phase.QP_MINUS), f_qpm, 1e-13)
        )

        fp_qpm: list[AnnealPoint] = []
        for lam in np.linspace(1e-4, lam_triple, n_points):
            s2 = 1.0 / (1.0 + k * (1.0 - lam))
            root = _root_on_s(
                lambda s: _pinfty_fprime(s, lam, k) - _pinfty_qp_minus(s, lam),
                s2 + 1e-12,
                1.0 - 1e-12,
            )
            if root is not None:
                fp_qpm.append(AnnealPoint(float(lam), root))
        if fp_qpm:
            lines.append(
                TransitionLine(
                    LineKind.FIRST_ORDER, (Phase.F_PRIME, Phase.QP_MINUS), fp_qpm, 1e-13
                )
            )
    return lines


def _coarse_class(theta: float) -> str:
    if theta < ANGLE_TOL:
        return "QP+"
    if theta > math.pi - ANGLE_TOL:
        return "QP-"
    return "FERRO"


_COARSE = {
    Phase.QP_PLUS: "QP+",
    Phase.QP_MINUS: "QP-",
    Phase.F: "FERRO",
    Phase.F_PRIME: "FERRO",
    Phase.INTERMEDIATE: "FERRO",
}


def _theta_at(lam: float, s: float, params: ModelParams) -> float:
    res = minimize_batch(np.array([lam]), np.array([s]), params)
    return float(res.theta0[0])


def _find_jump_s(
    params: ModelParams, lam: float, s_lo: float, s_hi: float,
    jump_floor: float = JUMP_FLOOR,
) -> tuple[float, float] | None:
    """Bracket in s of the largest theta0 discontinuity, if one survives
    refinement down to width 1e-7."""
    s_lo = max(0.0, s_lo)
    s_hi = min(1.0, s_hi)
    lo, hi = s_lo, s_hi
    n = 101
    for _ in range(6):
        grid = np.linspace(lo, hi, n)
        th = minimize_batch(np.full(n, lam), grid, params).theta0
        jumps = np.abs(np.diff(th))
        j = int(np.argmax(jumps))
        if jumps[j] <= jump_floor:
            return None
        lo, hi = grid[j], grid[j + 1]
        if hi - lo < 1e-7:
            return lo, hi
    return lo, hi


def _resolve_transition_s(
    params: ModelParams, lam: float, s_lo: float, s_hi: float,
    energy_tol: float = 1e-10,
) -> tuple[float, float, float] | None:
    """Pinpoint a first-order transition along s at fixed lambda.

    Returns (s_star, jump, achieved |branch energy difference|).  The
    bisection runs on the sign of the energy difference between the two
    coexisting minima whenever both are visible, and falls back to
    branch-membership bisection otherwise.
    """
    th_lo = _theta_at(lam, s_lo, params)
    th_hi = _theta_at(lam, s_hi, params)
    if abs(th_lo - th_hi) <= JUMP_FLOOR:
        return None
    for _ in range(200):
        mid = 0.5 * (s_lo + s_hi)
        res = minimize_batch(np.array([lam]), np.array([mid]), params)
        th = float(res.theta0[0])
        if res.has_alt[0]:
            # Signed difference: energy of the branch continuing th_lo
            # minus the branch continuing th_hi.
            d_main = abs(th - th_lo) - abs(th - th_hi)
            e_main = float(res.energy[0])
            e_alt = float(res.alt_energy[0])
            diff = (e_main - e_alt) if d_main > 0.0 else (e_alt - e_main)
            # diff < 0 means the low-s branch is still the global minimum.
            if abs(diff) < energy_tol:
                jump = abs(float(res.alt_theta[0]) - th)
                return mid, jump, abs(diff)
            if diff < 0.0:
                s_lo, th_lo = mid, th if d_main < 0.0 else th_lo
            else:
                s_hi, th_hi = mid, th if d_main > 0.0 else th_hi
        else:
            if abs(th - th_lo) <= abs(th - th_hi):
                s_lo, th_lo = mid, th
            else:
                s_hi, th_hi = mid, th
        if s_hi - s_lo < 1e-14:
            break
    jump = abs(th_hi - th_lo)
    if jump <= JUMP_FLOOR:
        return None
    mid = 0.5 * (s_lo + s_hi)
    res = minimize_batch(np.array([lam]), np.array([mid]), params)
    ediff = (
        abs(float(res.energy[0]) - float(res.alt_energy[0]))
        if res.has_alt[0]
        else abs(
            float(energy(th_lo, AnnealPoint(lam, mid), params))
            - float(energy(th_hi, AnnealPoint(lam, mid), params))
        )
    )
    return mid, jump, ediff


def trace_first_order(
    params: ModelParams,
    pair: tuple[Phase, Phase],
    seed: AnnealPoint,
    lam_step: float = 1e-2,
    energy_tol: float = 1e-10,
) -> TransitionLine:
    """March a first-order line through the diagram from a seed point.

    The seed must lie within 0.05 of a theta0 discontinuity.  At each
    lambda the crossing is resolved by bisection on the branch energy
    difference; the march stops at the diagram boundary or where the
    theta0 jump falls below 1e-3 (critical endpoint).
    """
    bracket = _find_jump_s(params, seed.lam, seed.s - 0.05, seed.s + 0.05)
    if bracket is None:
        raise NoDiscontinuity(
            f"no theta0 discontinuity within 0.05 of (lambda={seed.lam}, s={seed.s})"
        )
    resolved = _resolve_transition_s(params, seed.lam, *bracket, energy_tol=energy_tol)
    if resolved is None:
        raise NoDiscontinuity(
            f"branch crossing near (lambda={seed.lam}, s={seed.s}) did not persist"
        )
    s0, jump0, tol0 = resolved

    want = {_COARSE[pair[0]], _COARSE[pair[1]]}
    got_lo = _coarse_class(_theta_at(seed.lam, max(0.0, s0 - 1e-4), params))
    got_hi = _coarse_class(_theta_at(seed.lam, min(1.0, s0 + 1e-4), params))
    got = {got_lo, got_hi}
    if got != want:
        raise NoDiscontinuity(
            f"crossing near the seed separates {sorted(got)}, not {sorted(want)}"
        )

    points = {float(seed.lam): (s0, jump0, tol0)}
    for direction in (-1.0, 1.0):
        lam = seed.lam
        s_prev = s0
        while True:
            lam = lam + direction * lam_step
            if not 0.0 <= lam <= 1.0:
                break
            found = None
            for half_width in (0.03, 0.1):
                lo = s_prev - half_width
                hi = s_prev + half_width
                if lo >= 1.0 or hi <= 0.0:
                    break
                bracket = _find_jump_s(params, lam, lo, hi)
                if bracket is not None:
                    found = _resolve_transition_s(
                        params, lam, *bracket, energy_tol=energy_tol
                    )
                    if found is not None:
                        break
            if found is None:
                break
            points[float(lam)] = found
            s_prev = found[0]

    ordered = sorted(points.items())
    pts = [AnnealPoint(lam, vals[0]) for lam, vals in ordered]
    achieved = max(vals[2] for _, vals in ordered)
    return TransitionLine(LineKind.FIRST_ORDER, pair, pts, achieved)
