"""Confluent hypergeometric functions used by the steady half-line solution.

Kummer's function M(a, b, tau) is summed from its power series for
``|tau| <= SERIES_LIMIT`` and from the large-argument expansion beyond.
Negative arguments always go through Kummer's transformation
``M(a, b, tau) = exp(tau) M(b - a, b, -tau)`` so the summed series has
terms of one sign.

Tricomi's function Psi(tau) = U(-1/6, 2/3, tau) is the recessive solution
of Kummer's equation on tau < 0 and is recovered from the two Kummer
branches only near the origin. Away from it the two branches cancel to all
significant digits, so Psi is evaluated from the Laplace integral of U with
generalized Gauss-Laguerre quadrature instead.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_genlaguerre, rgamma

SERIES_LIMIT = 30.0
CROSSCHECK_BAND = (25.0, 35.0)
OVERFLOW_LIMIT = 700.0
# |tau| below this uses the Kummer-branch combination for Psi
PSI_SERIES_LIMIT = 1.0
_LAGUERRE_NODES = 120

# Tricomi's function parameters and the two branch weights
PSI_A = -1.0 / 6.0
PSI_B = 2.0 / 3.0
PSI_C1 = math.gamma(1.0 / 3.0) / math.gamma(1.0 / 6.0)
PSI_C2 = math.gamma(-1.0 / 3.0) / math.gamma(-1.0 / 6.0)
# second branch: tau^(1/3) M(1/6, 4/3, tau)
PSI_A2 = 1.0 / 6.0
PSI_B2 = 4.0 / 3.0


class KummerPoleError(ValueError):
    """b is a nonpositive integer, where the series is undefined."""


class AccuracyError(ArithmeticError):
    """The requested accuracy could not be reached."""

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved relative bound {achieved:.3e})")
        self.achieved = achieved


def _check_params(b):
    if b <= 0 and float(b).is_integer():
        raise KummerPoleError(f"b={b} is a nonpositive integer")


def _series(a, b, z, max_terms=4000):
    """Power series of M(a, b, z); returns (value, last term magnitude)."""
    z = np.asarray(z, dtype=float)
    term = np.ones_like(z)
    total = np.ones_like(z)
    k = 0
    while k < max_terms:
        term = term * ((a + k) / (b + k)) * z / (k + 1)
        total = total + term
        k += 1
        small = np.abs(term) <= 1e-17 * np.abs(total)
        if k > 2 and np.all(small | (term == 0)):
            break
    return total, np.abs(term)


def _asymptotic_positive(a, b, z, damped=False):
    """Large positive z expansion of M(a, b, z); returns (value, error bound).

    With ``damped`` the result is exp(-z) M(a, b, z), formed without
    evaluating exp(z).
    """
    z = np.asarray(z, dtype=float)

    def divergent_sum(p, q, w):
        term = np.ones_like(z)
        total = np.ones_like(z)
        best = np.full_like(z, np.inf)
        active = np.ones(z.shape, dtype=bool)
        for s in range(400):
            nxt = term * (p + s) * (q + s) / ((s + 1) * w)
            grow = np.abs(nxt) >= np.abs(term)
            active &= ~grow
            term = np.where(active, nxt, term)
            total = np.where(active, total + nxt, total)
            best = np.where(active, np.abs(nxt), best)
            if not active.any() or np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        return total, np.minimum(best, np.abs(term))

    gb = math.gamma(b)
    exp_sum, exp_err = divergent_sum(b - a, 1.0 - a, z)
    exp_part = gb * rgamma(a) * z ** (a - b)
    alg_sum, alg_err = divergent_sum(a, a - b + 1.0, -z)
    alg_part = gb * rgamma(b - a) * math.cos(math.pi * a) * z ** (-a)
    with np.errstate(under="ignore"):
        if damped:
            alg_part = alg_part * np.exp(-z)
        else:
            exp_part = exp_part * np.exp(z)
    value = exp_part * exp_sum + alg_part * alg_sum
    err = np.abs(exp_part) * exp_err + np.abs(alg_part) * alg_err
    return value, err


def _m_nonnegative(a, b, z, method, damped=False):
    if method == "series":
        value, _ = _series(a, b, z)
        if damped:
            value = value * np.exp(-z)
        return value, np.zeros_like(value)
    return _asymptotic_positive(a, b, z, damped)


def _kummer_m(a, b, tau, method):
    tau = np.asarray(tau, dtype=float)
    neg = tau < 0
    z = np.abs(tau)
    # Kummer's transformation puts every argument on the positive axis
    out = np.empty_like(z)
    err = np.zeros_like(z)
    if (~neg).any():
        out[~neg], err[~neg] = _m_nonnegative(a, b, z[~neg], method)
    if neg.any():
        out[neg], err[neg] = _m_nonnegative(b - a, b, z[neg], method, damped=True)
    return out, err


def kummer_m(a, b, tau, rtol=1e-12):
    """Kummer's confluent hypergeometric function M(a, b, tau).

    Accepts scalars or arrays. Raises :class:`KummerPoleError` for
    nonpositive integer ``b`` and :class:`AccuracyError` when the large
    argument expansion cannot reach ``rtol``. Positive arguments above
    ``OVERFLOW_LIMIT`` are rejected since M grows like exp(tau); negative
    arguments of any size are fine.
    """
    _check_params(b)
    tau_arr = np.asarray(tau, dtype=float)
    if np.any(tau_arr > OVERFLOW_LIMIT):
        raise ValueError(f"tau must not exceed {OVERFLOW_LIMIT}")
    flat = np.atleast_1d(tau_arr).ravel()
    out = np.empty_like(flat)
    near = np.abs(flat) <= SERIES_LIMIT
    if near.any():
        out[near], _ = _kummer_m(a, b, flat[near], "series")
    if (~near).any():
        val, err = _kummer_m(a, b, flat[~near], "asymptotic")
        rel = err / np.maximum(np.abs(val), np.finfo(float).tiny)
        if np.any(rel > rtol):
            raise AccuracyError("asymptotic expansion of M too short", float(rel.max()))
        out[~near] = val
    out = out.reshape(tau_arr.shape)
    return float(out) if out.ndim == 0 else out


def kummer_m_crosscheck(a, b, tau):
    """Evaluate M by series and by asymptotics; returns (series, asymptotic, rel diff).

    Meant for the overlap band around the switchover.
    """
    _check_params(b)
    tau = np.asarray(tau, dtype=float)
    s, _ = _kummer_m(a, b, np.atleast_1d(tau), "series")
    asym, _ = _kummer_m(a, b, np.atleast_1d(tau), "asymptotic")
    rel = np.abs(s - asym) / np.abs(s)
    return s, asym, rel


@lru_cache(maxsize=None)
def _laguerre(alpha):
    return roots_genlaguerre(_LAGUERRE_NODES, alpha)


def hyperu(a, b, z):
    """Tricomi U(a, b, z) for a > 0 and z >= 1 from its Laplace integral.

    U = z^-a / Gamma(a) * int_0^inf exp(-w) w^(a-1) (1 + w/z)^(b-a-1) dw.
    """
    if a <= 0:
        raise ValueError("integral representation needs a > 0")
    z = np.asarray(z, dtype=float)
    nodes, weights = _laguerre(a - 1.0)
    zz = z[..., None]
    integral = np.sum(weights * (1.0 + nodes / zz) ** (b - a - 1.0), axis=-1)
    return z ** (-a) * integral / math.gamma(a)


def _psi_series(tau, derivative):
    # c1 M(a,b,tau) + c2 cbrt(tau) M(a2,b2,tau), differentiated termwise
    a, b, a2, b2 = PSI_A, PSI_B, PSI_A2, PSI_B2
    r = np.cbrt(tau)
    m = lambda p, q: _series(p, q, tau)[0]
    if derivative == 0:
        return PSI_C1 * m(a, b) + PSI_C2 * r * m(a2, b2)
    if derivative == 1:
        dm1 = a / b * m(a + 1, b + 1)
        dm2 = a2 / b2 * m(a2 + 1, b2 + 1)
        return PSI_C1 * dm1 + PSI_C2 * (m(a2, b2) / (3.0 * r**2) + r * dm2)
    ddm1 = a * (a + 1) / (b * (b + 1)) * m(a + 2, b + 2)
    dm2 = a2 / b2 * m(a2 + 1, b2 + 1)
    ddm2 = a2 * (a2 + 1) / (b2 * (b2 + 1)) * m(a2 + 2, b2 + 2)
    m2 = m(a2, b2)
    second = -2.0 * m2 / (9.0 * r**5) + 2.0 * dm2 / (3.0 * r**2) + r * ddm2
    return PSI_C1 * ddm1 + PSI_C2 * second


def _psi_positive(tau, derivative):
    # Psi = U(-1/6, 2/3, tau) = tau^(1/3) U(1/6, 4/3, tau); U' = -a U(a+1, b+1)
    if derivative == 0:
        return np.cbrt(tau) * hyperu(1.0 / 6.0, 4.0 / 3.0, tau)
    if derivative == 1:
        return hyperu(5.0 / 6.0, 5.0 / 3.0, tau) / 6.0
    return -5.0 / 36.0 * hyperu(11.0 / 6.0, 8.0 / 3.0, tau)


def _psi_negative(tau, derivative):
    # recessive branch: Psi(tau) = exp(tau) U(5/6, 2/3, -tau) / 6
    z = -tau
    scale = np.exp(tau) / 6.0
    u0 = hyperu(5.0 / 6.0, 2.0 / 3.0, z)
    if derivative == 0:
        return scale * u0
    u1 = -5.0 / 6.0 * hyperu(11.0 / 6.0, 5.0 / 3.0, z)
    if derivative == 1:
        return scale * (u0 - u1)
    u2 = 5.0 / 6.0 * 11.0 / 6.0 * hyperu(17.0 / 6.0, 8.0 / 3.0, z)
    return scale * (u0 - 2.0 * u1 + u2)


def tricomi_psi(tau, derivative=0):
    """Tricomi's function Psi(tau) = U(-1/6, 2/3, tau) on the real line.

    Uses the real cube root for tau < 0. ``derivative`` selects Psi, Psi'
    or Psi'' (the derivatives blow up like |tau|^(-2/3) at the origin).
    """
    if derivative not in (0, 1, 2):
        raise ValueError("derivative must be 0, 1 or 2")
    tau_arr = np.asarray(tau, dtype=float)
    flat = np.atleast_1d(tau_arr).ravel()
    out = np.empty_like(flat)
    near = np.abs(flat) < PSI_SERIES_LIMIT
    pos = (~near) & (flat > 0)
    neg = (~near) & (flat < 0)
    if near.any():
        out[near] = _psi_series(flat[near], derivative)
    if pos.any():
        out[pos] = _psi_positive(flat[pos], derivative)
    if neg.any():
        with np.errstate(under="ignore"):
            out[neg] = _psi_negative(flat[neg], derivative)
    out = out.reshape(tau_arr.shape)
    return float(out) if out.ndim == 0 else out


def psi_at_zero():
    return PSI_C1
