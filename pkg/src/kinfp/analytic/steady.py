"""Explicit steady solution of v f_x = f_vv on the half line with absorbing data.

f(x, v) = x^(1/6) Psi(tau),  tau = -v^3 / (9 x).

Near tau = 0 the cube-root branch of Psi is written through v directly,
tau^(1/3) = -v (9x)^(-1/3), which keeps every derivative finite across v = 0.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .special import (
    PSI_A,
    PSI_A2,
    PSI_B,
    PSI_B2,
    PSI_C1,
    PSI_C2,
    PSI_SERIES_LIMIT,
    _series,
    tricomi_psi,
)

EXPONENT_X = 1.0 / 6.0
EXPONENT_V = 0.5
WALL_LIMIT_COEFF = 3.0 ** (-1.0 / 3.0)


class SteadyValues(NamedTuple):
    f: np.ndarray
    fx: np.ndarray
    fv: np.ndarray
    fvv: np.ndarray


def similarity_variable(x, v):
    return -np.asarray(v, dtype=float) ** 3 / (9.0 * np.asarray(x, dtype=float))


def _near(x, v, tau):
    # f = c1 x^(1/6) M1(tau) - c2 9^(-1/3) v x^(-1/6) M2(tau)
    def m(a, b, k):
        coef = 1.0
        for j in range(k):
            coef *= (a + j) / (b + j)
        return coef * _series(a + k, b + k, tau)[0]

    m1, dm1, ddm1 = (m(PSI_A, PSI_B, k) for k in range(3))
    m2, dm2, ddm2 = (m(PSI_A2, PSI_B2, k) for k in range(3))
    tx = -tau / x
    tv = -v**2 / (3.0 * x)
    tvv = -2.0 * v / (3.0 * x)

    x16 = x ** (1.0 / 6.0)
    xm16 = x ** (-1.0 / 6.0)
    t1 = x16 * m1
    t1x = x ** (-5.0 / 6.0) * m1 / 6.0 + x16 * dm1 * tx
    t1v = x16 * dm1 * tv
    t1vv = x16 * (ddm1 * tv**2 + dm1 * tvv)

    t2 = v * xm16 * m2
    t2x = -v * x ** (-7.0 / 6.0) * m2 / 6.0 + v * xm16 * dm2 * tx
    t2v = xm16 * (m2 + v * dm2 * tv)
    t2vv = xm16 * (2.0 * dm2 * tv + v * (ddm2 * tv**2 + dm2 * tvv))

    k2 = -PSI_C2 * 9.0 ** (-1.0 / 3.0)
    return (
        PSI_C1 * t1 + k2 * t2,
        PSI_C1 * t1x + k2 * t2x,
        PSI_C1 * t1v + k2 * t2v,
        PSI_C1 * t1vv + k2 * t2vv,
    )


def _far(x, v, tau):
    p0 = tricomi_psi(tau, 0)
    p1 = tricomi_psi(tau, 1)
    p2 = tricomi_psi(tau, 2)
    tx = -tau / x
    tv = -v**2 / (3.0 * x)
    tvv = -2.0 * v / (3.0 * x)
    x16 = x ** (1.0 / 6.0)
    f = x16 * p0
    fx = x ** (-5.0 / 6.0) * p0 / 6.0 + x16 * p1 * tx
    fv = x16 * p1 * tv
    fvv = x16 * (p2 * tv**2 + p1 * tvv)
    return f, fx, fv, fvv


def steady_solution(x, v):
    """Value and partial derivatives (f, f_x, f_v, f_vv) for x > 0."""
    x, v = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
    if np.any(x <= 0):
        raise ValueError("steady solution is defined for x > 0 only")
    shape = x.shape
    x = x.ravel()
    v = v.ravel()
    tau = similarity_variable(x, v)
    out = [np.empty_like(x) for _ in range(4)]
    near = np.abs(tau) < PSI_SERIES_LIMIT
    for mask, fn in ((near, _near), (~near, _far)):
        if mask.any():
            parts = fn(x[mask], v[mask], tau[mask])
            for o, p in zip(out, parts):
                o[mask] = p
    return SteadyValues(*(o.reshape(shape) for o in out))


def steady_value(x, v):
    """f alone; cheaper than :func:`steady_solution` away from tau = 0."""
    x, v = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(v, dtype=float))
    if np.any(x <= 0):
        raise ValueError("steady solution is defined for x > 0 only")
    tau = similarity_variable(x, v)
    out = np.empty(x.shape)
    near = np.abs(tau) < PSI_SERIES_LIMIT
    if near.any():
        out[near] = _near(x[near], v[near], tau[near])[0]
    if (~near).any():
        out[~near] = x[~near] ** (1.0 / 6.0) * tricomi_psi(tau[~near], 0)
    return out


def wall_limit(v):
    """f(0+, v): 3^(-1/3) |v|^(1/2) for v < 0 and 0 for v >= 0."""
    v = np.asarray(v, dtype=float)
    return np.where(v < 0, WALL_LIMIT_COEFF * np.sqrt(np.abs(v)), 0.0)


def steady_residual(x, v):
    """Pointwise v f_x - f_vv and the scale 1 + |f| it is judged against."""
    s = steady_solution(x, v)
    return np.asarray(v) * s.fx - s.fvv, 1.0 + np.abs(s.f)
