"""Infinite-range p-spin ferromagnet driven by a transverse field plus a
k-body transverse interaction.

The control space is a point (lambda, s) in the unit square: ``s``
interpolates between the drivers and the problem Hamiltonian, ``lambda``
mixes the ferromagnetic target against the k-body driver inside the
problem part.  In the large-N limit the state is a classical unit vector
in the xz plane, parameterized by the polar angle ``theta`` measured from
the x axis, and everything reduces to the energy per spin

    e(theta) = -s*lam*sin(theta)**p + s*(1-lam)*cos(theta)**k
               - (1-s)*cos(theta)

This module holds that landscape and its exact derivatives; every other
module evaluates these functions instead of re-deriving them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "AnnealPoint",
    "ModelParams",
    "Phase",
    "SemiClassicalState",
    "energy",
    "energy_coefficients",
    "energy_derivative",
    "powi",
    "stationarity_residual",
    "stationarity_residual_derivative",
]


class Phase(str, Enum):
    """Labels for the competing large-N phases."""

    QP_PLUS = "QP+"      # paramagnet polarized along +x
    QP_MINUS = "QP-"     # paramagnet polarized along -x (odd k only)
    F = "F"              # ferromagnet with mz ~ 1
    F_PRIME = "F'"       # ferromagnet with mx near its closed-form value
    INTERMEDIATE = "INT" # ferromagnet matching neither closed form
    QP2 = "QP2"          # static-approximation paramagnet with 0 < mx < 1

    def __str__(self) -> str:  # serialize as the short label
        return self.value


@dataclass(frozen=True)
class ModelParams:
    """Exponents of the target ferromagnet (p) and transverse driver (k).

    p must be odd and >= 3 (even p has a doubly degenerate target ground
    state).  k >= 2; k = 2 is the plain antiferromagnetic driver.
    """

    p: int
    k: int

    def __post_init__(self) -> None:
        for name in ("p", "k"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise TypeError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.p < 3 or self.p % 2 == 0:
            raise ValueError(f"p must be odd and >= 3, got {self.p}")
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")


@dataclass(frozen=True)
class AnnealPoint:
    """A position (lambda, s) in the two-parameter annealing square."""

    lam: float
    s: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "s", float(self.s))
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"s must lie in [0, 1], got {self.s}")


@dataclass(frozen=True)
class SemiClassicalState:
    """A minimizer of the classical energy at one annealing point.

    theta0 is the canonical coordinate; mx = cos(theta0) and
    mz = sin(theta0) are always derived from it.  ``coexistence`` marks
    points where a second minimum is degenerate to within 1e-12 (the
    reported branch is the one with larger mz).
    """

    theta0: float
    mx: float
    mz: float
    energy: float
    phase: Phase
    coexistence: bool = False

    @classmethod
    def from_theta(
        cls,
        theta0: float,
        pt: AnnealPoint,
        params: ModelParams,
        phase: Phase,
        coexistence: bool = False,
    ) -> "SemiClassicalState":
        theta0 = float(theta0)
        return cls(
            theta0=theta0,
            mx=math.cos(theta0),
            mz=math.sin(theta0),
            energy=float(energy(theta0, pt, params)),
            phase=phase,
            coexistence=coexistence,
        )


def powi(x, n: int):
    """x**n for integer n >= 0, safe against extreme exponents.

    For n > 64 the power is evaluated as exp(n*log|x|) so that sines and
    cosines just below 1 underflow gracefully to 0.0 in the large-p
    proxy runs; the sign is restored for odd n.
    """
    if n < 0:
        raise ValueError("exponent must be non-negative")
    if n <= 64:
        return x**n
    arr = np.asarray(x, dtype=float)
    ax = np.abs(arr)
    safe = np.where(ax > 0.0, ax, 1.0)
    out = np.where(ax > 0.0, np.exp(n * np.log(safe)), 0.0)
    if n % 2:
        out = np.where(arr < 0.0, -out, out)
    if np.isscalar(x) or arr.shape == ():
        return float(out)
    return out


def energy_coefficients(pt: AnnealPoint) -> tuple[float, float, float]:
    """Coefficients (c1, c2, c3) of e = c1*sin^p + c2*cos^k + c3*cos."""
    return -pt.s * pt.lam, pt.s * (1.0 - pt.lam), pt.s - 1.0


def energy(theta, pt: AnnealPoint, params: ModelParams):
    """Classical energy per spin at polar angle theta (from the x axis)."""
    c1, c2, c3 = energy_coefficients(pt)
    st = np.sin(theta)
    ct = np.cos(theta)
    return c1 * powi(st, params.p) + c2 * powi(ct, params.k) + c3 * ct


def energy_derivative(theta, pt: AnnealPoint, params: ModelParams):
    """d(energy)/d(theta); vanishes at theta = 0 and pi for any point."""
    c1, c2, c3 = energy_coefficients(pt)
    p, k = params.p, params.k
    st = np.sin(theta)
    ct = np.cos(theta)
    return (
        c1 * p * powi(st, p - 1) * ct
        - c2 * k * powi(ct, k - 1) * st
        - c3 * st
    )


def stationarity_residual(theta, pt: AnnealPoint, params: ModelParams):
    """The bracket whose zeros are the ferromagnetic stationary angles.

    energy_derivative(theta) == -sin(theta) * stationarity_residual(theta),
    so interior minima solve residual = 0 while the sin factor accounts
    for the boundary solutions at 0 and pi.
    """
    c1, c2, c3 = energy_coefficients(pt)
    p, k = params.p, params.k
    st = np.sin(theta)
    ct = np.cos(theta)
    return -c1 * p * powi(st, p - 2) * ct + c2 * k * powi(ct, k - 1) + c3


def stationarity_residual_derivative(theta, pt: AnnealPoint, params: ModelParams):
    """d(stationarity_residual)/d(theta), used by the Newton polish."""
    c1, c2, c3 = energy_coefficients(pt)
    p, k = params.p, params.k
    st = np.sin(theta)
    ct = np.cos(theta)
    return -c1 * p * (
        (p - 2) * powi(st, p - 3) * ct * ct - powi(st, p - 1)
    ) - c2 * k * (k - 1) * powi(ct, k - 2) * st
