import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kinfp.analytic import steady_value
from kinfp.diagnostics import (
    CheckResult,
    GriddedField,
    euclidean_distance,
    fit_boundary_exponents,
    fit_exponent,
    holder_seminorm,
    kinetic_distance,
    ladder,
    max_principle_excess,
    oscillation_decay,
    verdict,
)


def log_grid_steady(k):
    """Steady solution on grids log-refined toward the wall point (0, 0) down to x = 10^-k."""
    x = np.geomspace(10.0**-k, 1, 15 * k)
    vp = np.geomspace(10.0 ** (-k / 3), 1, 5 * k)
    v = np.concatenate([-vp[::-1], [0.0], vp])
    return GriddedField.from_function(steady_value, x, v)


@pytest.fixture(scope="module")
def refined():
    return {k: log_grid_steady(k) for k in (6, 12)}


def test_distance_examples():
    assert kinetic_distance(0, 0, 0, 0, 0, 0) == 0.0
    assert kinetic_distance(-0.25, 0, 0, 0, 0, 0) == pytest.approx(0.5)
    assert kinetic_distance(0, 0.008, 0, 0, 0, 0) == pytest.approx(0.2)
    # transport along the characteristic costs only the time
    assert kinetic_distance(-1.0, -1.0, 1.0, 0.0, 0.0, 1.0) == pytest.approx(1.0)
    assert euclidean_distance(0, 0.3, -0.1, 0, 0, 0) == pytest.approx(0.3)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6))
def test_kinetic_distance_symmetric(z):
    a = kinetic_distance(*z)
    b = kinetic_distance(*z[3:], *z[:3])
    assert a == pytest.approx(b) and a >= 0


def test_constant_field_seminorm_zero():
    fld = GriddedField.from_function(lambda X, V: 3.0 + 0 * X, np.linspace(0, 1, 20), np.linspace(-1, 1, 21))
    for metric in ("kinetic", "euclidean"):
        assert holder_seminorm(fld, 0.5, metric=metric) == 0.0


def test_seminorm_deterministic_and_validated():
    fld = log_grid_steady(3)
    assert holder_seminorm(fld, 0.5, seed=4) == holder_seminorm(fld, 0.5, seed=4)
    with pytest.raises(ValueError):
        holder_seminorm(fld, 1.5)
    with pytest.raises(ValueError):
        holder_seminorm(fld, 0.5, metric="taxicab")
    with pytest.raises(ValueError):
        holder_seminorm(fld, 0.5, region={"x": (5.0, 6.0)})


def test_square_root_velocity_profile():
    def seminorm(n, alpha):
        vp = np.geomspace(10.0**-n, 1, 10 * n)
        v = np.concatenate([-vp[::-1], [0.0], vp])
        fld = GriddedField.from_function(lambda X, V: np.sqrt(np.abs(V)) + 0 * X, np.linspace(0, 1, 5), v)
        return holder_seminorm(fld, alpha, pairs=20000)

    assert seminorm(8, 0.5) <= 1.5 and seminorm(4, 0.5) <= 1.5
    assert seminorm(8, 0.6) > 2.0 * seminorm(4, 0.6)


def test_steady_solution_critical_euclidean(refined):
    a6 = holder_seminorm(refined[6], 1 / 6, metric="euclidean", pairs=20000)
    a12 = holder_seminorm(refined[12], 1 / 6, metric="euclidean", pairs=20000)
    assert a12 < 1.0 and a12 / a6 < 1.1
    b6 = holder_seminorm(refined[6], 0.25, metric="euclidean", pairs=20000)
    b12 = holder_seminorm(refined[12], 0.25, metric="euclidean", pairs=20000)
    assert b12 / b6 > 2.0


def test_steady_solution_critical_kinetic(refined):
    a6 = holder_seminorm(refined[6], 0.5, pairs=20000)
    a12 = holder_seminorm(refined[12], 0.5, pairs=20000)
    assert a12 < 1.0 and a12 / a6 < 1.1
    b6 = holder_seminorm(refined[6], 0.6, pairs=20000)
    b12 = holder_seminorm(refined[12], 0.6, pairs=20000)
    assert b12 / b6 > 1.4


def test_fit_exponent():
    x = np.geomspace(1e-3, 1, 20)
    fit = fit_exponent(x, x)
    assert fit.slope == pytest.approx(1.0, abs=1e-6)
    assert not fit.flagged
    assert fit_exponent(x, 2 * x**0.3).intercept == pytest.approx(np.log(2))
    with pytest.raises(ValueError):
        fit_exponent(x[:4], x[:4])
    noisy = fit_exponent(x, x * np.exp(np.random.default_rng(0).normal(0, 0.3, 20)))
    assert noisy.flagged and noisy.half_width > 0


def test_boundary_exponents():
    fx, fv = fit_boundary_exponents()
    assert fx.slope == pytest.approx(1 / 6, abs=1e-3)
    assert fv.slope == pytest.approx(0.5, abs=1e-3)


def test_ladder():
    np.testing.assert_allclose(ladder(1.0, 0.5, 4), [1, 0.5, 0.25, 0.125])
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            ladder(1.0, bad)


def grid_field(fn, nx=400, nv=401):
    return GriddedField.from_function(fn, np.linspace(-1, 1, nx), np.linspace(-1, 1, nv))


def test_oscillation_nested_monotone():
    fld = grid_field(lambda X, V: np.sin(3 * X) + V**2 + 0.1 * np.cos(7 * V))
    prof = oscillation_decay(fld, (0.0, 0.0, 0.1), ladder(0.9, 0.75, 8))
    assert np.all(np.diff(prof.counts) <= 0)
    assert np.all(np.diff(prof.oscillations) <= 0)


def test_oscillation_slope_of_velocity_field():
    prof = oscillation_decay(grid_field(lambda X, V: V + 0 * X), (0.0, 0.0, 0.0), ladder(0.8, 0.75, 8))
    assert prof.slope == pytest.approx(1.0, abs=0.05)


@pytest.mark.parametrize("beta", [0.3, 0.5, 0.8])
def test_oscillation_calibration(beta):
    prof = oscillation_decay(grid_field(lambda X, V: np.abs(V - 0.1) ** beta + 0 * X, nv=4001), (0.0, 0.0, 0.1), ladder(0.8, 0.75, 8))
    assert prof.slope == pytest.approx(beta, abs=0.05)


def test_oscillation_needs_three_cylinders():
    fld = grid_field(lambda X, V: V + 0 * X, nx=10, nv=11)
    with pytest.raises(ValueError):
        oscillation_decay(fld, (0.0, 0.0, 0.0), ladder(0.5, 0.1, 6))


def test_oscillation_time_dependent():
    t = np.linspace(-1, 0, 41)
    x = np.linspace(-1, 1, 81)
    v = np.linspace(-1, 1, 81)
    T, X, V = np.meshgrid(t, x, v, indexing="ij")
    fld = GriddedField(x, v, V + 0 * T, t=t)
    prof = oscillation_decay(fld, (0.0, 0.0, 0.0), ladder(0.8, 0.75, 6))
    assert prof.slope == pytest.approx(1.0, abs=0.1)


def test_gridded_field_shape_checked():
    with pytest.raises(ValueError):
        GriddedField(np.arange(3), np.arange(4), np.zeros((4, 3)))


def test_max_principle_excess():
    assert max_principle_excess(np.array([[-2.0, 1.0]]), 2.5) == pytest.approx(-0.5)
    assert max_principle_excess(np.array([3.0]), 2.0) == pytest.approx(1.0)


def test_verdict():
    ok = CheckResult("mass", True, 1e-9, 1e-6)
    bad = CheckResult("max_principle", False, 0.1, 1e-8)
    rep = verdict([ok], {"a": 1})
    assert rep.passed and rep.to_dict()["overall"] == "PASS"
    rep = verdict([ok, bad], {"a": 1})
    assert not rep.passed and rep.failing == ["max_principle"]
    json.dumps(rep.to_dict())
    assert verdict([ok], {"a": 1}).config_hash == rep.config_hash != verdict([ok], {"a": 2}).config_hash
    with pytest.raises(ValueError):
        verdict([])


def test_steady_solution_decays_at_characteristic_point():
    x = np.geomspace(1e-9, 1, 300)
    vp = np.geomspace(1e-3, 1, 100)
    v = np.concatenate([-vp[::-1], [0.0], vp])
    prof = oscillation_decay(GriddedField.from_function(steady_value, x, v), (0.0, 0.0, 0.0), ladder(1.0, 0.75, 8))
    assert prof.slope > 0.2


def test_rough_coefficient_solution_decays():
    from kinfp.boundary import Specular
    from kinfp.coefficients import CoefficientField
    from kinfp.solver import Grid, SolverConfig, initial_field, march

    g = Grid.with_cfl(1.0, 80, 4.0, 161, t_end=0.5)
    jump = CoefficientField(A=lambda t, x, v: np.where(x < 0.5, 0.5, 1.5) + 0 * v, dA_dv=lambda t, x, v: 0 * x * v)
    f0 = lambda t, x, v: np.exp(-(v**2) / 2) * (1 + 0.5 * np.sin(2 * np.pi * x))
    res = march(initial_field(g, f0), jump, Specular(), SolverConfig(), t_end=0.5)
    fld = GriddedField(g.x, g.v, res.field.f)
    for center in ((0.0, 0.5, 0.0), (0.0, 0.3, 1.0)):
        assert oscillation_decay(fld, center, ladder(1.0, 0.75, 6)).slope > 0.2
