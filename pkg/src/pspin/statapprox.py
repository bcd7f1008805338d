"""Self-consistent magnetization equations from the imaginary-time
path-integral treatment with time-independent order parameters.

The pseudo free energy

    f(mx, mz) = (p-1)*s*lam*mz**p - (k-1)*s*(1-lam)*mx**k
                - log(2*cosh(beta*R)) / beta,
    R = hypot(p*s*lam*mz**(p-1), 1 - s - s*(1-lam)*k*mx**(k-1))

is stationary at the solutions of two coupled equations for (mx, mz);
at beta -> infinity converged solutions land on the unit circle and
reproduce the variational minimum of ``semiclassical``, which is what the
cross-validation tests exploit.  The extra zero-mz branch with mx
strictly inside (0, 1) is handled by ``qp2_free_energy`` bookkeeping; it
is always metastable against the ferromagnetic branch at finite p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._pool import map_index_chunks
from .model import AnnealPoint, ModelParams, Phase

__all__ = [
    "SelfConsistentSolution",
    "best_self_consistent",
    "pseudo_free_energy",
    "qp2_free_energy",
    "solve_grid",
    "solve_self_consistent",
]

DAMPING = 0.5
TOL = 1e-12
MAX_ITER = 100_000

_CANONICAL_EPS = 0.01


@dataclass(frozen=True)
class SelfConsistentSolution:
    mx: float
    mz: float
    beta: float
    free_energy: float
    phase: Phase
    converged: bool
    iterations: int


def _fields(mx, mz, s: float, lam: float, p: int, k: int):
    a = p * s * lam * mz ** (p - 1)
    b = 1.0 - s - s * (1.0 - lam) * k * mx ** (k - 1)
    return a, b


def _log_2cosh(x):
    # log(2*cosh(x)) without overflow for large |x|.
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax))


def pseudo_free_energy(mx, mz, pt: AnnealPoint, params: ModelParams, beta: float):
    """Static pseudo free energy at magnetizations (mx, mz).

    ``beta`` may be math.inf, in which case the entropy term reduces to
    -R.  Accepts scalars or broadcastable arrays.
    """
    p, k = params.p, params.k
    mx = np.asarray(mx, dtype=float)
    mz = np.asarray(mz, dtype=float)
    a, b = _fields(mx, mz, pt.s, pt.lam, p, k)
    r = np.hypot(a, b)
    f0 = (p - 1) * pt.s * pt.lam * mz**p - (k - 1) * pt.s * (1.0 - pt.lam) * mx**k
    if math.isinf(beta):
        out = f0 - r
    else:
        out = f0 - _log_2cosh(beta * r) / beta
    if out.shape == ():
        return float(out)
    return out


def qp2_free_energy(pt: AnnealPoint, params: ModelParams) -> float:
    """Free energy of the zero-mz branch with mx strictly inside (0, 1).

    Defined for p > 3 on 1/[1 + k*(1-lambda)] <= s <= 1 with
    s*(1-lambda) > 0; this branch never beats the ferromagnetic one at
    finite p, and in the p -> infinity limit its energy coincides with
    the closed-form F' energy.
    """
    k = params.k
    if params.p <= 3:
        raise ValueError("this branch requires p > 3")
    if pt.s * (1.0 - pt.lam) <= 0.0:
        raise ValueError("requires s*(1-lambda) > 0")
    if pt.s < 1.0 / (1.0 + k * (1.0 - pt.lam)):
        raise ValueError("below the validity region s >= 1/(1 + k*(1-lambda))")
    mx = ((1.0 - pt.s) / (k * pt.s * (1.0 - pt.lam))) ** (1.0 / (k - 1))
    return -(k - 1.0) / k * mx * (1.0 - pt.s)


def _iterate_arrays(mx, mz, s, lam, p, k, beta, tol, max_iter):
    """Damped fixed-point iteration, vectorized over solution slots.

    Returns (mx, mz, converged, iterations); the final values are the map
    output at the last step, so beta = inf solutions land exactly on the
    unit circle.
    """
    mx = np.array(mx, dtype=float, copy=True)
    mz = np.array(mz, dtype=float, copy=True)
    shape = mx.shape
    converged = np.zeros(shape, dtype=bool)
    iterations = np.zeros(shape, dtype=np.int64)
    active = np.ones(shape, dtype=bool)
    beta_inf = math.isinf(beta)

    for it in range(1, max_iter + 1):
        if not active.any():
            break
        amx = mx[active]
        amz = mz[active]
        a, b = _fields(amx, amz, s if np.isscalar(s) else s[active],
                       lam if np.isscalar(lam) else lam[active], p, k)
        r = np.hypot(a, b)
        ok = r > 1e-300
        safe_r = np.where(ok, r, 1.0)
        scale = np.where(ok, 1.0 if beta_inf else np.tanh(beta * r), 0.0) / safe_r
        tx = np.where(ok, b * scale, amx)
        tz = np.where(ok, a * scale, amz)
        resid = np.maximum(np.abs(tx - amx), np.abs(tz - amz))
        done = resid < tol
        nx = amx + DAMPING * (tx - amx)
        nz = amz + DAMPING * (tz - amz)
        # Converged slots report the pure map output.
        mx[active] = np.where(done, tx, nx)
        mz[active] = np.where(done, tz, nz)
        idx = np.flatnonzero(active)
        iterations[idx[done]] = it
        conv_idx = idx[done]
        converged[conv_idx] = True
        active[conv_idx] = False
    iterations[active] = max_iter
    return mx, mz, converged, iterations


def _classify(mx: float, mz: float, s: float, lam: float, p: int, k: int) -> Phase:
    if abs(mz) <= 1e-8:
        if mx >= 0.5:
            return Phase.QP_PLUS
        if mx <= -0.5:
            return Phase.QP_MINUS
        return Phase.QP2
    c = mx
    with np.errstate(divide="ignore", invalid="ignore"):
        if k == 2:
            c_f = (1.0 - s) / (s * (p * lam + k * (1.0 - lam))) if s > 0 else math.inf
        else:
            c_f = (1.0 - s) / (s * p * lam) if s * lam > 0 else math.inf
        c_fp = (
            ((1.0 - s) / (k * s * (1.0 - lam))) ** (1.0 / (k - 1))
            if s * (1.0 - lam) > 0
            else math.inf
        )
    dev_f = abs(c - c_f)
    dev_fp = abs(c - c_fp)
    if not math.isfinite(dev_fp) or dev_f <= dev_fp:
        return Phase.F
    return Phase.F_PRIME


def solve_self_consistent(
    pt: AnnealPoint,
    params: ModelParams,
    beta: float,
    init: tuple[float, float],
    tol: float = TOL,
    max_iter: int = MAX_ITER,
) -> SelfConsistentSolution:
    """Damped fixed-point solve of the two magnetization equations.

    ``init`` is (mx, mz) inside the unit square.  On failure to converge
    the best iterate is returned with ``converged=False``; nothing is
    raised.
    """
    mx0, mz0 = init
    if not (abs(mx0) <= 1.0 and abs(mz0) <= 1.0):
        raise ValueError("init must lie inside the unit square")
    mx, mz, conv, iters = _iterate_arrays(
        np.array([mx0]), np.array([mz0]), pt.s, pt.lam,
        params.p, params.k, beta, tol, max_iter,
    )
    mx_f, mz_f = float(mx[0]), float(mz[0])
    return SelfConsistentSolution(
        mx=mx_f,
        mz=mz_f,
        beta=beta,
        free_energy=float(pseudo_free_energy(mx_f, mz_f, pt, params, beta)),
        phase=_classify(mx_f, mz_f, pt.s, pt.lam, params.p, params.k),
        converged=bool(conv[0]),
        iterations=int(iters[0]),
    )


def _canonical_inits(pt: AnnealPoint, params: ModelParams) -> list[tuple[float, float]]:
    inits = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (_CANONICAL_EPS, 1.0 - _CANONICAL_EPS),
    ]
    if pt.s * (1.0 - pt.lam) > 0.0:
        c = ((1.0 - pt.s) / (params.k * pt.s * (1.0 - pt.lam))) ** (1.0 / (params.k - 1))
        if c <= 1.0:
            inits.append((c, math.sqrt(max(0.0, 1.0 - c * c))))
    return inits


def best_self_consistent(
    pt: AnnealPoint,
    params: ModelParams,
    beta: float = math.inf,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
) -> SelfConsistentSolution:
    """Lowest-free-energy converged solution over the canonical starts.

    The equations have several solutions, so phase competition is decided
    by free energy across four initializations: both paramagnets, a
    near-ferromagnet, and the closed-form ferromagnetic cosine.  If no
    start converges the best non-converged iterate is returned.
    """
    solutions = [
        solve_self_consistent(pt, params, beta, init, tol=tol, max_iter=max_iter)
        for init in _canonical_inits(pt, params)
    ]
    converged = [sol for sol in solutions if sol.converged]
    pool = converged if converged else solutions
    return min(pool, key=lambda sol: sol.free_energy)


def solve_grid(
    params: ModelParams,
    lambdas: np.ndarray,
    svals: np.ndarray,
    beta: float = math.inf,
    threads: int | None = None,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
):
    """Vectorized multi-start solve over a (lambda, s) grid.

    Returns (mx, mz, free_energy, converged, iterations) arrays of shape
    (len(lambdas), len(svals)); per-point winners follow the same
    lowest-converged-free-energy rule as ``best_self_consistent``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    svals = np.asarray(svals, dtype=float)
    n_lam, n_s = lambdas.size, svals.size
    n = n_lam * n_s
    lam_flat = np.repeat(lambdas, n_s)
    s_flat = np.tile(svals, n_lam)

    out_mx = np.empty(n)
    out_mz = np.empty(n)
    out_f = np.empty(n)
    out_conv = np.empty(n, dtype=bool)
    out_iters = np.empty(n, dtype=np.int64)

    k = params.k

    def work(sl: slice) -> None:
        lam = lam_flat[sl]
        s = s_flat[sl]
        m = lam.size
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(
                s * (1.0 - lam) > 0.0,
                ((1.0 - s) / (k * s * (1.0 - lam))) ** (1.0 / (k - 1)),
                1.0,
            )
        c = np.clip(c, -1.0, 1.0)
        mx0 = np.stack([
            np.ones(m),
            -np.ones(m),
            np.full(m, _CANONICAL_EPS),
            c,
        ])
        mz0 = np.stack([
            np.zeros(m),
            np.zeros(m),
            np.full(m, 1.0 - _CANONICAL_EPS),
            np.sqrt(np.clip(1.0 - c * c, 0.0, None)),
        ])
        s_b = np.broadcast_to(s, mx0.shape)
        lam_b = np.broadcast_to(lam, mx0.shape)
        mx, mz, conv, iters = _iterate_arrays(
            mx0, mz0, s_b, lam_b, params.p, params.k, beta, tol, max_iter
        )
        p = params.p
        a = p * s_b * lam_b * mz ** (p - 1)
        b = 1.0 - s_b - s_b * (1.0 - lam_b) * k * mx ** (k - 1)
        r = np.hypot(a, b)
        f = (p - 1) * s_b * lam_b * mz**p - (k - 1) * s_b * (1.0 - lam_b) * mx**k
        if math.isinf(beta):
            f -= r
        else:
            f -= _log_2cosh(beta * r) / beta
        score = np.where(conv, f, np.inf)
        all_failed = ~conv.any(axis=0)
        score[:, all_failed] = f[:, all_failed]
        pick = np.argmin(score, axis=0)
        cols = np.arange(m)
        out_mx[sl] = mx[pick, cols]
        out_mz[sl] = mz[pick, cols]
        out_f[sl] = f[pick, cols]
        out_conv[sl] = conv[pick, cols]
        out_iters[sl] = iters[pick, cols]

    map_index_chunks(work, n, threads, min_chunk=max(64, n_s))

    shape = (n_lam, n_s)
    return (
        out_mx.reshape(shape),
        out_mz.reshape(shape),
        out_f.reshape(shape),
        out_conv.reshape(shape),
        out_iters.reshape(shape),
    )
