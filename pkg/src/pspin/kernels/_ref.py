"""Pure-numpy implementations of the hot kernels.

Same signatures as the compiled backend in ``_core``; used as the
fallback when the extension is unavailable and as the reference in the
backend-equivalence tests and benchmarks.
"""

from __future__ import annotations

import math

import numpy as np

from ..model import powi

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _batch_energy(theta, c1, c2, c3, p, k):
    st = np.sin(theta)
    ct = np.cos(theta)
    return c1 * powi(st, p) + c2 * powi(ct, k) + c3 * ct


def _batch_residual(theta, c1, c2, c3, p, k):
    st = np.sin(theta)
    ct = np.cos(theta)
    return -c1 * p * powi(st, p - 2) * ct + c2 * k * powi(ct, k - 1) + c3


def _batch_residual_derivative(theta, c1, c2, c3, p, k):
    st = np.sin(theta)
    ct = np.cos(theta)
    return -c1 * p * ((p - 2) * powi(st, p - 3) * ct * ct - powi(st, p - 1)) - c2 * k * (
        k - 1
    ) * powi(ct, k - 2) * st


def batch_candidate_minima(c1, c2, c3, tab_sp, tab_ck, tab_c, max_candidates, chunk=2048):
    """Indices of up to ``max_candidates`` grid-local minima per row.

    The energy over the theta grid is c1*tab_sp + c2*tab_ck + c3*tab_c per
    row; boundary points count as local minima.  Rows with fewer local
    minima are padded with -1.  Candidate order within a row is not
    specified.
    """
    c1 = np.ascontiguousarray(c1, dtype=float)
    c2 = np.ascontiguousarray(c2, dtype=float)
    c3 = np.ascontiguousarray(c3, dtype=float)
    m = c1.size
    out = np.full((m, max_candidates), -1, dtype=np.int64)
    for start in range(0, m, chunk):
        sl = slice(start, min(start + chunk, m))
        e = (
            c1[sl, None] * tab_sp[None, :]
            + c2[sl, None] * tab_ck[None, :]
            + c3[sl, None] * tab_c[None, :]
        )
        is_min = np.empty(e.shape, dtype=bool)
        # <= on the left, < on the right: a flat plateau contributes only
        # its leftmost point.
        is_min[:, 1:-1] = (e[:, 1:-1] <= e[:, :-2]) & (e[:, 1:-1] < e[:, 2:])
        is_min[:, 0] = e[:, 0] <= e[:, 1]
        is_min[:, -1] = e[:, -1] < e[:, -2]
        masked = np.where(is_min, e, np.inf)
        picked = np.argpartition(masked, max_candidates - 1, axis=1)[:, :max_candidates]
        vals = np.take_along_axis(masked, picked, axis=1)
        out[sl] = np.where(np.isfinite(vals), picked, -1)
    return out


def golden_refine(c1, c2, c3, p, k, lo, hi, iters):
    """Golden-section minimization of the energy on per-row brackets."""
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    for _ in range(iters):
        d = _INVPHI * (b - a)
        x1 = b - d
        x2 = a + d
        f1 = _batch_energy(x1, c1, c2, c3, p, k)
        f2 = _batch_energy(x2, c1, c2, c3, p, k)
        take_left = f1 < f2
        b = np.where(take_left, x2, b)
        a = np.where(take_left, a, x1)
    return 0.5 * (a + b)


def newton_refine(c1, c2, c3, p, k, theta, lo, hi, iters):
    """Newton polish of the stationarity residual, clipped to the bracket.

    A step is kept only if it reduces |residual|, so a bad step near a
    bracket edge degrades gracefully to the golden-section result.
    """
    theta = np.array(theta, dtype=float, copy=True)
    r = _batch_residual(theta, c1, c2, c3, p, k)
    for _ in range(iters):
        dr = _batch_residual_derivative(theta, c1, c2, c3, p, k)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dr != 0.0, r / dr, 0.0)
        cand = np.clip(theta - step, lo, hi)
        r_cand = _batch_residual(cand, c1, c2, c3, p, k)
        better = np.abs(r_cand) < np.abs(r)
        theta = np.where(better, cand, theta)
        r = np.where(better, r_cand, r)
    return theta


def sector_apply(v, diag_z, w, k, coeff_k, coeff_tf):
    """Matrix-free Hamiltonian apply in the maximal-spin sector.

    ``w`` holds the off-diagonal elements of the normalized transverse
    operator T = (2/N) S^x in the S^z basis; the result is
    diag_z * v + coeff_k * T^k v + coeff_tf * T v.
    """
    v = np.asarray(v, dtype=float)

    def tri(u):
        out = np.zeros_like(u)
        out[1:] = w * u[:-1]
        out[:-1] += w * u[1:]
        return out

    tv = tri(v)
    u = tv
    for _ in range(k - 1):
        u = tri(u)
    return diag_z * v + coeff_k * u + coeff_tf * tv
