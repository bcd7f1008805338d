"""Thermodynamic-limit energy gap from quadratic fluctuations around the
classical minimum.

Rotating the quantization axis onto the minimum and bosonizing the
fluctuations leaves a quadratic boson Hamiltonian
``delta * a^dag a + gamma * (a^dag^2 + a^2)`` (the linear term vanishes by
stationarity).  A Bogoliubov rotation with tanh(Theta) = -2*gamma/delta
diagonalizes it, giving the gap Delta = delta * sqrt(1 - epsilon^2).

The expansion fails near transitions, where |epsilon| -> 1 or delta <= 0;
such points are reported with ``valid=False`` and a reason instead of a
clamped number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import semiclassical
from ._pool import map_index_chunks
from .model import AnnealPoint, ModelParams, powi

__all__ = ["GapResult", "gap", "gap_profile"]

_EPS_LIMIT = 1.0 - 1e-12


@dataclass(frozen=True)
class GapResult:
    """Quadratic-fluctuation coefficients and the resulting gap.

    ``gap`` is None when the expansion breaks down; ``reason`` then names
    the failed condition.  ``coexistence`` marks results computed on the
    larger-mz branch of an exactly degenerate minimum.
    """

    delta: float
    gamma: float
    epsilon: float
    bogoliubov_angle: float | None
    gap: float | None
    valid: bool
    reason: str | None = None
    coexistence: bool = False


def _coefficients(theta0, c1, c2, c3, p: int, k: int):
    st = np.sin(theta0)
    ct = np.cos(theta0)
    sp2 = powi(st, p - 2)
    ck2 = powi(ct, k - 2)
    sin_p = sp2 * st * st
    cos_k = ck2 * ct * ct
    delta = (
        c1 * (p * (p - 1) * sp2 * ct * ct - 2.0 * p * sin_p)
        + c2 * (k * (k - 1) * st * st * ck2 - 2.0 * k * cos_k)
        - 2.0 * c3 * ct
    )
    gamma = c1 * (0.5 * p * (p - 1)) * sp2 * ct * ct + c2 * (0.5 * k * (k - 1)) * st * st * ck2
    return delta, gamma


def _build_result(delta: float, gamma: float, coexistence: bool) -> GapResult:
    epsilon = -2.0 * gamma / delta if delta != 0.0 else math.nan
    angle = math.atanh(epsilon) if abs(epsilon) < 1.0 else None
    if delta <= 0.0:
        return GapResult(delta, gamma, epsilon, angle, None, False,
                         "delta <= 0: expansion around the minimum lost", coexistence)
    if not abs(epsilon) < _EPS_LIMIT:
        return GapResult(delta, gamma, epsilon, angle, None, False,
                         "|epsilon| >= 1: anomalous terms dominate", coexistence)
    gap_value = delta * math.sqrt(1.0 - epsilon * epsilon)
    return GapResult(delta, gamma, epsilon, angle, gap_value, True, None, coexistence)


def gap(pt: AnnealPoint, params: ModelParams) -> GapResult:
    """Energy gap above the ground state in the N -> infinity limit.

    theta0 is recomputed internally so the linear fluctuation term is
    guaranteed to vanish; near a transition the breakdown is flagged
    rather than clamped.
    """
    res = semiclassical.minimize_batch(
        np.array([pt.lam]), np.array([pt.s]), params
    )
    c1, c2, c3 = -pt.s * pt.lam, pt.s * (1.0 - pt.lam), pt.s - 1.0
    delta, gamma = _coefficients(res.theta0[0], c1, c2, c3, params.p, params.k)
    return _build_result(float(delta), float(gamma), bool(res.coexistence[0]))


def gap_profile(
    params: ModelParams,
    lam: float,
    s_grid,
    threads: int | None = None,
) -> list[GapResult]:
    """Gap along an s sweep at fixed lambda.

    Breakdown points are reported invalid in place, never interpolated.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.ndim != 1 or s_grid.size == 0:
        raise ValueError("s_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(s_grid) < 0.0):
        raise ValueError("s_grid must be sorted ascending")
    if s_grid[0] < 0.0 or s_grid[-1] > 1.0:
        raise ValueError("s_grid values must lie in [0, 1]")

    n = s_grid.size
    lams = np.full(n, float(lam))
    delta = np.empty(n)
    gamma = np.empty(n)
    coex = np.empty(n, dtype=bool)

    def work(sl: slice) -> None:
        res = semiclassical.minimize_batch(lams[sl], s_grid[sl], params)
        c1 = -(s_grid[sl] * lam)
        c2 = s_grid[sl] * (1.0 - lam)
        c3 = s_grid[sl] - 1.0
        d, g = _coefficients(res.theta0, c1, c2, c3, params.p, params.k)
        delta[sl] = d
        gamma[sl] = g
        coex[sl] = res.coexistence

    map_index_chunks(work, n, threads, min_chunk=64)
    return [
        _build_result(float(delta[i]), float(gamma[i]), bool(coex[i]))
        for i in range(n)
    ]
