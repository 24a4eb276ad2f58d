"""Kinetic scaling group, kinetic cylinders and the velocity-weight transform."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .coefficients import CoefficientField


class PhaseState(NamedTuple):
    """A point (or a batch of points) z = (t, x, v).

    ``x`` and ``v`` carry the spatial dimension on their last axis.
    """

    t: np.ndarray
    x: np.ndarray
    v: np.ndarray

    @classmethod
    def of(cls, t, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.ndim == 0:
            x = x[None]
        if v.ndim == 0:
            v = v[None]
        return cls(np.asarray(t, dtype=float), x, v)


def scale_map(z0: PhaseState, r: float, zt: PhaseState) -> PhaseState:
    """T_{z0,r}: (t, x, v) -> (t0 + r^2 t, x0 + r^3 x + r^2 t v0, v0 + r v)."""
    if r <= 0:
        raise ValueError("scale must be positive")
    t = z0.t + r**2 * zt.t
    x = z0.x + r**3 * zt.x + r**2 * np.asarray(zt.t)[..., None] * z0.v
    v = z0.v + r * zt.v
    return PhaseState(t, x, v)


def inverse_scale_map(z0: PhaseState, r: float, z: PhaseState) -> PhaseState:
    tt = (z.t - z0.t) / r**2
    xt = (z.x - z0.x - r**2 * np.asarray(tt)[..., None] * z0.v) / r**3
    vt = (z.v - z0.v) / r
    return PhaseState(tt, xt, vt)


@dataclass(frozen=True)
class KineticCylinder:
    """Q_r(z0): t0 - r^2 < t <= t0, |x - x0 - (t - t0) v0| < r^3, |v - v0| < r."""

    center: PhaseState
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError("cylinder radius must be positive")

    def contains(self, z: PhaseState):
        z0, r = self.center, self.r
        dt = np.asarray(z.t, dtype=float) - z0.t
        in_time = (dt > -(r**2)) & (dt <= 0)
        shift = z.x - z0.x - dt[..., None] * z0.v
        in_x = np.linalg.norm(shift, axis=-1) < r**3
        in_v = np.linalg.norm(z.v - z0.v, axis=-1) < r
        return in_time & in_x & in_v


def cylinder_contains(cyl: KineticCylinder, z: PhaseState):
    return cyl.contains(z)


@dataclass(frozen=True)
class WeightSpec:
    q: float

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("weight exponent must be nonnegative")

    def bracket(self, v):
        v = np.asarray(v, dtype=float)
        return (1.0 + v**2) ** (self.q / 2.0)


def bracket(v, q=1.0):
    """<v>^q with <v> = (1 + |v|^2)^(1/2); ``v`` is a d = 1 array."""
    v = np.asarray(v, dtype=float)
    return (1.0 + v**2) ** (q / 2.0)


def weight_bounds(q, Lambda):
    """Bounds on |B'| and |c' - c| that depend on q and Lambda only."""
    return q * Lambda / 2.0, q * q * Lambda / 4.0 + q * Lambda / 2.0


def weighted_coefficients(coeffs: CoefficientField, q: float) -> CoefficientField:
    """Coefficients of the equation solved by F = <v>^q f (d = 1).

    Returns the field with divergence drift Bdiv + B', transport drift
    B + B', zeroth order c' and source <v>^q s, where
    B' = -q A v / <v>^2 and c' = c + q^2 A v^2 / <v>^4 - q B v / <v>^2.
    """
    if q < 0:
        raise ValueError("weight exponent must be nonnegative")
    if q == 0:
        return coeffs
    if coeffs.dim != 1:
        raise NotImplementedError("velocity-weight transform is implemented for d = 1")
    A, B, c, s, Bd = coeffs.A, coeffs.B, coeffs.c, coeffs.s, coeffs.Bdiv

    def p(v):
        return q * v / (1.0 + v**2)

    def dp(v):
        return q * (1.0 - v**2) / (1.0 + v**2) ** 2

    def b_prime(t, x, v):
        return -p(v) * A(t, x, v)

    def new_bdiv(t, x, v):
        return Bd(t, x, v) + b_prime(t, x, v)

    def new_dbdiv(t, x, v):
        return coeffs.derivative_Bdiv(t, x, v) - dp(v) * A(t, x, v) - p(v) * coeffs.derivative_A(t, x, v)

    def new_b(t, x, v):
        return B(t, x, v) + b_prime(t, x, v)

    def new_c(t, x, v):
        pv = p(v)
        return c(t, x, v) + pv**2 * A(t, x, v) - pv * B(t, x, v) - pv * Bd(t, x, v)

    def new_s(t, x, v):
        return bracket(v, q) * s(t, x, v)

    lam = coeffs.Lambda + sum(weight_bounds(q, coeffs.Lambda))
    return replace(
        coeffs,
        B=new_b,
        c=new_c,
        s=new_s,
        Bdiv=new_bdiv,
        dBdiv_dv=new_dbdiv,
        Lambda=lam,
    )
