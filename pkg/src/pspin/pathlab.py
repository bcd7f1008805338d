"""Annealing trajectories through the (lambda, s) square.

Paths are piecewise-linear polylines with no time parameterization; a
report lists where they cross first- or second-order transitions, the
minimum fluctuation gap along the way, and the segments where the gap
expansion breaks down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import semiclassical, spinwave
from .model import AnnealPoint, ModelParams, Phase
from .semiclassical import LineKind

__all__ = [
    "AnnealPath",
    "Crossing",
    "PathReport",
    "evaluate_path",
    "suggest_safe_lambda",
]

JUMP_FLOOR = 1e-3          # theta0 jump that counts as first order
SCAN_TRIGGER = 1e-2        # sample-to-sample jump that triggers refinement
REFINE_TOL = 1e-6          # path-parameter width of the bisection
GAP_FLOOR = 0.05           # a second-order crossing must dip below this
_CORNER = (0.0, 1.0)       # driver-only corner: no target term survives


@dataclass(frozen=True)
class AnnealPath:
    """Piecewise-linear waypoints from (lambda0, 0) to (1, 1).

    ``strict`` additionally rejects any decrease of s along the path.
    ``validate=False`` skips all checks (used for derived geometry such
    as reversed paths in symmetry tests).
    """

    waypoints: tuple[AnnealPoint, ...]
    strict: bool = True

    def __init__(
        self,
        waypoints,
        strict: bool = True,
        validate: bool = True,
    ) -> None:
        object.__setattr__(self, "waypoints", tuple(waypoints))
        object.__setattr__(self, "strict", bool(strict))
        if validate:
            self.check()

    def check(self) -> None:
        wp = self.waypoints
        if len(wp) < 2:
            raise ValueError("path needs at least two waypoints")
        if wp[0].s != 0.0:
            raise ValueError("path must begin at s = 0")
        if wp[-1].lam != 1.0 or wp[-1].s != 1.0:
            raise ValueError("path must end at (1,1)")
        if self.strict:
            for i in range(1, len(wp)):
                if wp[i].s < wp[i - 1].s:
                    raise ValueError(
                        f"s decreases between waypoints {i} and {i + 1} (strict mode)"
                    )

    def _cumulative(self) -> np.ndarray:
        pts = np.array([(w.lam, w.s) for w in self.waypoints])
        seg = np.hypot(*np.diff(pts, axis=0).T)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        if cum[-1] == 0.0:
            raise ValueError("path has zero length")
        return cum / cum[-1]

    def point_at(self, t: float) -> tuple[float, float]:
        """(lambda, s) at normalized arc-length parameter t in [0, 1]."""
        t = min(1.0, max(0.0, float(t)))
        cum = self._cumulative()
        pts = np.array([(w.lam, w.s) for w in self.waypoints])
        i = int(np.searchsorted(cum, t, side="right")) - 1
        i = min(max(i, 0), len(cum) - 2)
        width = cum[i + 1] - cum[i]
        frac = 0.0 if width == 0.0 else (t - cum[i]) / width
        lam, s = pts[i] + frac * (pts[i + 1] - pts[i])
        return float(min(1.0, max(0.0, lam))), float(min(1.0, max(0.0, s)))

    def sample(self, samples: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Uniform arc-length samples: (t, lambda, s) arrays."""
        t = np.linspace(0.0, 1.0, samples)
        pts = np.array([self.point_at(x) for x in t])
        return t, pts[:, 0], pts[:, 1]

    def touches(self, lam: float, s: float, tol: float = 1e-9) -> bool:
        """Whether the polyline passes within tol of the given point."""
        target = np.array([lam, s])
        pts = np.array([(w.lam, w.s) for w in self.waypoints])
        for a, b in zip(pts[:-1], pts[1:]):
            d = b - a
            denom = float(d @ d)
            u = 0.0 if denom == 0.0 else float(np.clip((target - a) @ d / denom, 0.0, 1.0))
            if float(np.hypot(*(a + u * d - target))) <= tol:
                return True
        return False


@dataclass(frozen=True)
class Crossing:
    kind: LineKind
    position: float              # arc-length parameter in [0, 1]
    point: AnnealPoint
    theta_jump: float
    gap_nearby: float | None     # smallest valid gap adjacent to the crossing


@dataclass
class PathReport:
    crossings: list[Crossing]
    min_gap: float | None
    min_gap_position: float | None
    breakdown_intervals: list[tuple[float, float]]
    flags: list[str] = field(default_factory=list)
    samples: int = 0

    def count(self, kind: LineKind) -> int:
        return sum(1 for c in self.crossings if c.kind == kind)


def _coarse(theta: float) -> str:
    return semiclassical._coarse_class(theta)


def _theta_and_class(path: AnnealPath, t: float, params: ModelParams) -> tuple[float, str]:
    lam, s = path.point_at(t)
    theta = semiclassical._theta_at(lam, s, params)
    return theta, _coarse(theta)


def _jump_across(path: AnnealPath, t_star: float, width: float,
                 params: ModelParams) -> float:
    lo = max(0.0, t_star - 0.5 * width)
    hi = min(1.0, t_star + 0.5 * width)
    th_lo, _ = _theta_and_class(path, lo, params)
    th_hi, _ = _theta_and_class(path, hi, params)
    return abs(th_hi - th_lo)


def _refine(path: AnnealPath, t_lo: float, t_hi: float,
            params: ModelParams) -> float:
    """Bisection on the theta0-jump indicator between two samples."""
    th_lo, _ = _theta_and_class(path, t_lo, params)
    th_hi, _ = _theta_and_class(path, t_hi, params)
    while t_hi - t_lo > REFINE_TOL:
        mid = 0.5 * (t_lo + t_hi)
        th_mid, _ = _theta_and_class(path, mid, params)
        if abs(th_mid - th_lo) <= abs(th_mid - th_hi):
            t_lo, th_lo = mid, th_mid
        else:
            t_hi, th_hi = mid, th_mid
    return 0.5 * (t_lo + t_hi)


def _gap_near(path: AnnealPath, t_star: float, params: ModelParams) -> float | None:
    vals = []
    for dt in (-2e-6, 2e-6):
        lam, s = path.point_at(t_star + dt)
        res = spinwave.gap(AnnealPoint(lam, s), params)
        if res.valid:
            vals.append(res.gap)
    return min(vals) if vals else None


def evaluate_path(
    path: AnnealPath,
    params: ModelParams,
    samples: int,
    analytic: bool = False,
    threads: int | None = None,
) -> PathReport:
    """Scan a path, refine every candidate crossing, and report verdicts.

    A crossing refined to path-parameter width 1e-6 counts as first order
    when its theta0 jump exceeds 1e-3 and persists under window
    shrinking; a phase-class change with a non-persistent jump is a
    second-order crossing.  In ``analytic`` mode the large-p closed forms
    replace the numerical minimization.
    """
    if samples < 16:
        raise ValueError("samples must be >= 16")
    if analytic:
        return _evaluate_analytic(path, params, samples)

    t, lams, svals = path.sample(samples)
    res = semiclassical.minimize_batch(lams, svals, params)
    theta = res.theta0
    classes = [_coarse(th) for th in theta]

    c1 = -(svals * lams)
    c2 = svals * (1.0 - lams)
    c3 = svals - 1.0
    delta, gamma = spinwave._coefficients(theta, c1, c2, c3, params.p, params.k)
    gaps = np.full(samples, np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        eps = np.where(delta != 0.0, -2.0 * gamma / delta, np.inf)
        ok = (delta > 0.0) & (np.abs(eps) < 1.0 - 1e-12)
        gaps[ok] = delta[ok] * np.sqrt(1.0 - eps[ok] ** 2)

    crossings: list[Crossing] = []
    for i in range(samples - 1):
        class_change = classes[i] != classes[i + 1]
        jump = abs(theta[i + 1] - theta[i])
        if not class_change and jump <= SCAN_TRIGGER:
            continue
        t_star = _refine(path, t[i], t[i + 1], params)
        jump_fine = _jump_across(path, t_star, REFINE_TOL, params)
        jump_coarse = _jump_across(path, t_star, 1e-4, params)
        persistent = jump_fine > JUMP_FLOOR and jump_fine >= 0.5 * jump_coarse
        if persistent:
            kind = LineKind.FIRST_ORDER
        elif class_change:
            kind = LineKind.SECOND_ORDER
        else:
            continue  # steep but smooth; not a transition
        lam_star, s_star = path.point_at(t_star)
        crossings.append(
            Crossing(
                kind=kind,
                position=t_star,
                point=AnnealPoint(lam_star, s_star),
                theta_jump=jump_fine,
                gap_nearby=_gap_near(path, t_star, params),
            )
        )

    crossings = _dedupe(crossings, 2.0 / samples)

    flags = []
    if path.touches(*_CORNER):
        flags.append(
            "meaningless-for-annealing: passes through (lambda, s) = (0, 1) "
            "where the Hamiltonian has no target term"
        )

    valid = np.isfinite(gaps)
    if valid.any():
        j = int(np.nanargmin(np.where(valid, gaps, np.inf)))
        min_gap, min_pos = float(gaps[j]), float(t[j])
    else:
        min_gap = min_pos = None

    return PathReport(
        crossings=crossings,
        min_gap=min_gap,
        min_gap_position=min_pos,
        breakdown_intervals=_invalid_runs(t, ~valid),
        flags=flags,
        samples=samples,
    )


def _dedupe(crossings: list[Crossing], min_sep: float) -> list[Crossing]:
    crossings = sorted(crossings, key=lambda c: c.position)
    out: list[Crossing] = []
    for c in crossings:
        if out and c.kind == out[-1].kind and c.position - out[-1].position < min_sep:
            continue
        out.append(c)
    return out


def _invalid_runs(t: np.ndarray, invalid: np.ndarray) -> list[tuple[float, float]]:
    runs = []
    start = None
    for i, bad in enumerate(invalid):
        if bad and start is None:
            start = t[i]
        elif not bad and start is not None:
            runs.append((float(start), float(t[i - 1])))
            start = None
    if start is not None:
        runs.append((float(start), float(t[-1])))
    return runs


# ---------------------------------------------------------------------------
# Large-p analytic mode
# ---------------------------------------------------------------------------

_ANALYTIC_THETA = {
    Phase.QP_PLUS: 0.0,
    Phase.QP_MINUS: math.pi,
    Phase.F: 0.5 * math.pi,
}


def _analytic_theta(phase: Phase, lam: float, s: float, k: int) -> float:
    if phase == Phase.F_PRIME:
        c = min(1.0, ((1.0 - s) / (k * s * (1.0 - lam))) ** (1.0 / (k - 1)))
        return math.acos(c)
    return _ANALYTIC_THETA[phase]


def _evaluate_analytic(path: AnnealPath, params: ModelParams, samples: int) -> PathReport:
    k = params.k
    t = np.linspace(0.0, 1.0, samples)

    def winner(x: float) -> Phase:
        lam, s = path.point_at(x)
        return semiclassical.pinfty_winner(AnnealPoint(lam, s), params)[0]

    phases = [winner(x) for x in t]
    crossings: list[Crossing] = []
    for i in range(samples - 1):
        if phases[i] == phases[i + 1]:
            continue
        lo, hi = t[i], t[i + 1]
        ph_lo = phases[i]
        while hi - lo > REFINE_TOL:
            mid = 0.5 * (lo + hi)
            if winner(mid) == ph_lo:
                lo = mid
            else:
                hi = mid
        t_star = 0.5 * (lo + hi)
        ph_hi = winner(hi)
        lam_star, s_star = path.point_at(t_star)
        pair = {ph_lo, ph_hi}
        kind = (
            LineKind.SECOND_ORDER
            if pair == {Phase.F_PRIME, Phase.QP_PLUS}
            else LineKind.FIRST_ORDER
        )
        jump = abs(
            _analytic_theta(ph_lo, lam_star, s_star, k)
            - _analytic_theta(ph_hi, lam_star, s_star, k)
        )
        crossings.append(
            Crossing(kind, t_star, AnnealPoint(lam_star, s_star), jump, None)
        )

    flags = []
    if path.touches(*_CORNER):
        flags.append(
            "meaningless-for-annealing: passes through (lambda, s) = (0, 1) "
            "where the Hamiltonian has no target term"
        )
    return PathReport(
        crossings=crossings,
        min_gap=None,
        min_gap_position=None,
        breakdown_intervals=[],
        flags=flags,
        samples=samples,
    )


def _rise_then_top(lam: float) -> AnnealPath:
    return AnnealPath(
        [AnnealPoint(lam, 0.0), AnnealPoint(lam, 1.0), AnnealPoint(1.0, 1.0)]
    )


def suggest_safe_lambda(
    params: ModelParams,
    analytic: bool = False,
    lam_grid: np.ndarray | None = None,
    samples: int = 256,
) -> float | None:
    """Largest lambda whose rise-then-top path avoids first-order crossings.

    Scans vertical-rise paths (lambda, 0) -> (lambda, 1) -> (1, 1) from
    large to small lambda and returns the first safe one, or None when
    every candidate crosses a first-order line (always the case in the
    large-p analytic mode, whose only safe path hugs the driver-only
    corner and is useless for annealing).
    """
    if lam_grid is None:
        lam_grid = np.arange(0.02, 1.0, 0.02)
    for lam in sorted((float(x) for x in lam_grid), reverse=True):
        report = evaluate_path(_rise_then_top(lam), params, samples, analytic=analytic)
        if report.count(LineKind.FIRST_ORDER) == 0 and not report.flags:
            return lam
    return None
