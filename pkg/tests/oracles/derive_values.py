"""Reference values frozen into the test suite.

Everything here is computed without importing kinfp: mpmath at 50 digits,
closed forms, or scipy quadrature. Run ``python3 tests/oracles/derive_values.py``
to regenerate; the printed numbers are pasted into the tests.
"""
import math

import mpmath
from scipy import integrate

mpmath.mp.dps = 50


def psi(tau):
    # Kummer combination with the real cube root
    t = mpmath.mpf(tau)
    c1 = mpmath.gamma(mpmath.mpf(1) / 3) / mpmath.gamma(mpmath.mpf(1) / 6)
    c2 = mpmath.gamma(-mpmath.mpf(1) / 3) / mpmath.gamma(-mpmath.mpf(1) / 6)
    root = mpmath.sign(t) * abs(t) ** (mpmath.mpf(1) / 3)
    return c1 * mpmath.hyp1f1(-mpmath.mpf(1) / 6, mpmath.mpf(2) / 3, t) + c2 * root * mpmath.hyp1f1(
        mpmath.mpf(1) / 6, mpmath.mpf(4) / 3, t
    )


def steady(x, v):
    x, v = mpmath.mpf(x), mpmath.mpf(v)
    return x ** (mpmath.mpf(1) / 6) * psi(-(v**3) / (9 * x))


def main():
    print("M(-1/6, 2/3, -1) =", mpmath.nstr(mpmath.hyp1f1(-mpmath.mpf(1) / 6, mpmath.mpf(2) / 3, -1), 20))
    print("Psi(0) =", mpmath.nstr(mpmath.gamma(mpmath.mpf(1) / 3) / mpmath.gamma(mpmath.mpf(1) / 6), 20))
    for t in (-20, -3, -0.5, 0.5, 3, 20):
        # cross-check against U for positive arguments
        extra = ""
        if t > 0:
            extra = f"  U: {mpmath.nstr(mpmath.hyperu(-mpmath.mpf(1) / 6, mpmath.mpf(2) / 3, t), 20)}"
        print(f"Psi({t}) =", mpmath.nstr(psi(t), 20), extra)
    for x, v in ((0.5, -1.0), (0.1, 0.3), (2.0, 1.5), (0.01, -0.2)):
        print(f"f({x}, {v}) =", mpmath.nstr(steady(x, v), 20))
    print("3^(-1/3) =", mpmath.nstr(mpmath.mpf(3) ** (-mpmath.mpf(1) / 3), 20))
    # parabola chart psi = y^2 at y = (0.1, -0.05): m(0.1) - 0.05 n(0.1), n = (-0.2, 1)/sqrt(1.04)
    s = math.sqrt(1.04)
    print("P(0.1, -0.05) =", repr(0.1 - 0.05 * (-0.2 / s)), repr(0.01 - 0.05 * (1.0 / s)))
    print("det P'(0.1, 0) =", repr(s))
    # 2D wall Maxwellian, unit normal e_2: int int (v2)_+ M dv
    flux2, _ = integrate.dblquad(
        lambda v2, v1: v2 * math.exp(-(v1**2 + v2**2) / 2) / math.sqrt(2 * math.pi), -12, 12, 0, 12, epsabs=1e-13
    )
    print("2D Maxwellian flux =", repr(flux2))
    flux4, _ = integrate.quad(lambda w: w * 4.0 ** (-1.0) * math.exp(-(w**2) / 8.0), 0, 60, epsabs=1e-14)
    print("1D Maxwellian flux, Theta=4 =", repr(flux4))
    # weighted coefficients, A = 1, B = c = 0, q = 2, v = 1: p = q v / <v>^2 = 1
    p = 2 * 1.0 / 2.0
    print("B' =", -p * 1.0, " c' =", p**2 * 1.0)
    # Gamma(2/3)/Gamma(5/6) * 1e4^(1/6) for the large negative argument of M(-1/6, 2/3, .)
    print("M(-1/6,2/3,-1e4) =", mpmath.nstr(mpmath.hyp1f1(-mpmath.mpf(1) / 6, mpmath.mpf(2) / 3, -10000), 20),
          " leading:", mpmath.nstr(mpmath.gamma(mpmath.mpf(2) / 3) / mpmath.gamma(mpmath.mpf(5) / 6) * mpmath.mpf(10000) ** (mpmath.mpf(1) / 6), 20))


if __name__ == "__main__":
    main()
