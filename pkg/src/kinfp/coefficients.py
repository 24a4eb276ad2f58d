"""Coefficient fields A, B, c, s of the kinetic Fokker-Planck operator.

The operator is

    (d_t + v . grad_x) f = div_v(A grad_v f + Bdiv f) + B . grad_v f + c f + s

where the divergence-form drift ``Bdiv`` is zero for the plain equation and
appears only after the velocity-weight transform.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

Evaluator = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def constant(value) -> Evaluator:
    def fn(t, x, v):
        shape = np.broadcast_shapes(np.shape(t), np.shape(x), np.shape(v))
        return np.full(shape, float(value))

    fn.constant_value = float(value)
    return fn


def _zero(t, x, v):
    return np.zeros(np.broadcast_shapes(np.shape(t), np.shape(x), np.shape(v)))


_zero.constant_value = 0.0


@dataclass(frozen=True)
class CoefficientField:
    """Pointwise evaluators for one-dimensional (d = 1) coefficients.

    ``dA_dv`` and ``dBdiv_dv`` are only needed for continuous residuals; they
    default to central differences. ``time_dependent`` tells the solver
    whether the implicit velocity operator may be factored once.
    """

    A: Evaluator = field(default_factory=lambda: constant(1.0))
    B: Evaluator = _zero
    c: Evaluator = _zero
    s: Evaluator = _zero
    Lambda: float = 2.0
    Bdiv: Evaluator = _zero
    dA_dv: Optional[Evaluator] = None
    dBdiv_dv: Optional[Evaluator] = None
    time_dependent: bool = False
    dim: int = 1

    def with_source(self, s: Evaluator) -> "CoefficientField":
        return replace(self, s=s)

    def derivative_A(self, t, x, v):
        if self.dA_dv is not None:
            return self.dA_dv(t, x, v)
        return _central(self.A, t, x, v)

    def derivative_Bdiv(self, t, x, v):
        if self.dBdiv_dv is not None:
            return self.dBdiv_dv(t, x, v)
        return _central(self.Bdiv, t, x, v)

    def is_zero(self, name: str) -> bool:
        return getattr(getattr(self, name), "constant_value", None) == 0.0

    def check_bounds(self, box, samples=1000, seed=0):
        """Spot-check ellipticity and |B| + |c| <= Lambda on random samples.

        ``box`` is ((t0, t1), (x0, x1), (v0, v1)). Returns the worst observed
        values and raises ``ValueError`` when a bound is violated.
        """
        rng = np.random.default_rng(seed)
        t, x, v = (rng.uniform(lo, hi, samples) for lo, hi in box)
        a = np.broadcast_to(self.A(t, x, v), t.shape)
        lower = float(a.min())
        upper = float(a.max())
        drift = np.abs(self.B(t, x, v)) + np.abs(self.c(t, x, v))
        report = {"A_min": lower, "A_max": upper, "B_plus_c_max": float(np.max(drift))}
        lam = self.Lambda
        if lower < 1.0 / lam or upper > lam:
            raise ValueError(f"A outside [1/Lambda, Lambda]: {report}")
        if report["B_plus_c_max"] > lam:
            raise ValueError(f"|B| + |c| exceeds Lambda: {report}")
        return report


def _central(fn, t, x, v, h=1e-6):
    v = np.asarray(v, dtype=float)
    return (fn(t, x, v + h) - fn(t, x, v - h)) / (2.0 * h)


def residual(coeffs: CoefficientField, derivs, t, x, v):
    """Continuous residual of the equation for a d = 1 test function.

    ``derivs`` is a mapping with keys f, ft, fx, fv, fvv evaluated at
    (t, x, v).
    """
    f, ft, fx, fv, fvv = (derivs[k] for k in ("f", "ft", "fx", "fv", "fvv"))
    A = coeffs.A(t, x, v)
    Bd = coeffs.Bdiv(t, x, v)
    div = coeffs.derivative_A(t, x, v) * fv + A * fvv
    div = div + coeffs.derivative_Bdiv(t, x, v) * f + Bd * fv
    return ft + v * fx - div - coeffs.B(t, x, v) * fv - coeffs.c(t, x, v) * f - coeffs.s(t, x, v)
