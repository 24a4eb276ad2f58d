"""Manufactured solutions for solver order verification.

Each entry stores a smooth f(t, x, v) with its first time and space
derivatives and first two velocity derivatives in closed form, together
with the coefficients it is meant to be run with. The matching source is
the continuous residual of the equation with s = 0, so f is an exact
solution once that source is switched on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

from ..coefficients import CoefficientField, constant, residual


@dataclass(frozen=True)
class ManufacturedSolution:
    name: str
    derivatives: Callable  # (t, x, v) -> dict with f, ft, fx, fv, fvv
    coeffs: CoefficientField

    def value(self, t, x, v):
        return self.derivatives(t, x, v)["f"]

    def source(self, t, x, v):
        unforced = self.coeffs.with_source(constant(0.0))
        return residual(unforced, self.derivatives(t, x, v), t, x, v)

    def forced_coefficients(self) -> CoefficientField:
        return self.coeffs.with_source(self.source)


def _gauss_sine(t, x, v):
    e = np.exp(-t) * np.exp(-v**2)
    s, c = np.sin(np.pi * x), np.cos(np.pi * x)
    f = e * s
    return {
        "f": f,
        "ft": -f,
        "fx": np.pi * e * c,
        "fv": -2.0 * v * f,
        "fvv": (4.0 * v**2 - 2.0) * f,
    }


def _constant(t, x, v):
    one = np.ones(np.broadcast_shapes(np.shape(t), np.shape(x), np.shape(v)))
    zero = np.zeros_like(one)
    return {"f": one, "ft": zero, "fx": zero, "fv": zero, "fvv": zero}


def _linear_tv(t, x, v):
    t, x, v = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (t, x, v)))
    return {"f": t * v, "ft": v, "fx": np.zeros_like(x), "fv": t, "fvv": np.zeros_like(v)}


def _smooth_inflow(t, x, v):
    # nonzero on both walls so incoming traces carry data
    g = np.exp(-0.5 * v**2)
    h = 1.0 + 0.5 * np.cos(2.0 * x + t)
    hx = -np.sin(2.0 * x + t)
    ht = -0.5 * np.sin(2.0 * x + t)
    p = 1.0 + 0.25 * v
    gv = -v * g
    gvv = (v**2 - 1.0) * g
    f = h * p * g
    return {
        "f": f,
        "ft": ht * p * g,
        "fx": hx * p * g,
        "fv": h * (0.25 * g + p * gv),
        "fvv": h * (0.5 * gv + p * gvv),
    }


def _variable_coeffs():
    def A(t, x, v):
        return 1.0 + 0.3 * np.sin(x + v)

    def dA(t, x, v):
        return 0.3 * np.cos(x + v)

    def B(t, x, v):
        return 0.3 * np.cos(v) + 0.0 * x

    def c(t, x, v):
        return -0.2 + 0.0 * (x + v)

    return CoefficientField(A=A, B=B, c=c, dA_dv=dA, Lambda=2.0)


REGISTRY: Dict[str, ManufacturedSolution] = {
    "gauss_sine": ManufacturedSolution("gauss_sine", _gauss_sine, CoefficientField()),
    "constant": ManufacturedSolution("constant", _constant, CoefficientField()),
    "linear_tv": ManufacturedSolution("linear_tv", _linear_tv, CoefficientField()),
    "smooth_inflow": ManufacturedSolution("smooth_inflow", _smooth_inflow, _variable_coeffs()),
}


def manufactured_solution(name: str) -> ManufacturedSolution:
    try:
        return REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown manufactured solution {name!r}; known: {sorted(REGISTRY)}") from None
