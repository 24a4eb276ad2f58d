import math
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from kinfp.analytic import manufactured_solution, steady_value
from kinfp.benchmarks import run_steady_benchmark
from kinfp.boundary import DampedSpecular, Diffuse, Inflow, Maxwellian, Specular
from kinfp.coefficients import CoefficientField, constant
from kinfp.solver import (
    CFLViolation,
    ConfigurationError,
    Grid,
    SolverConfig,
    energy_ledger,
    extract_traces,
    initial_field,
    march,
    mass,
    mirror_extended_field,
    reflect_coefficients,
    step,
    step_viscous,
)

BUMP = lambda t, x, v: np.exp(-(v**2) / 2) * (1 + 0.5 * np.sin(2 * np.pi * x))


def test_grid_layout():
    g = Grid.with_cfl(2.0, 20, 4.0, 41, t_end=1.0)
    assert g.hx == pytest.approx(0.1)
    assert g.hv == pytest.approx(0.2)
    np.testing.assert_array_equal(g.v, -g.v[::-1])
    assert g.v[20] == 0.0
    assert g.cfl <= 0.9 + 1e-12
    assert 1.0 / g.dt == pytest.approx(round(1.0 / g.dt))
    assert np.sum(g.weights) == pytest.approx(8.0)
    r = g.refined()
    assert (r.nx, r.nv) == (40, 81) and r.dt == pytest.approx(g.dt / 2)


def test_bad_grids():
    with pytest.raises(ConfigurationError):
        Grid(1.0, 1, 1.0, 11, 0.1)
    with pytest.raises(ConfigurationError):
        Grid(1.0, 10, 1.0, 11, -0.1)


def test_cfl_violation():
    g = Grid(1.0, 10, 5.0, 11, 0.1)
    with pytest.raises(CFLViolation):
        march(initial_field(g), CoefficientField(), Specular(), SolverConfig(), n_steps=1)


def test_config_errors():
    with pytest.raises(ConfigurationError):
        SolverConfig(scheme="viscous", epsilon=0.0)
    with pytest.raises(ConfigurationError):
        SolverConfig(scheme="spectral")
    g = Grid.with_cfl(1.0, 10, 3.0, 11)
    with pytest.raises(ConfigurationError):
        march(initial_field(g), CoefficientField(), Specular(), SolverConfig(scheme="viscous", epsilon=0.1), n_steps=1)
    with pytest.raises(ConfigurationError):
        step_viscous(initial_field(g), CoefficientField(), Inflow(), SolverConfig())


def test_constant_state_preserved():
    g = Grid.with_cfl(1.0, 20, 3.0, 31)
    cfg = SolverConfig(velocity_wall=constant(1.0))
    start = initial_field(g, 1.0, cfg)
    res = march(start, CoefficientField(), Inflow(constant(1.0)), cfg, n_steps=50)
    np.testing.assert_allclose(res.field.f, 1.0, atol=1e-13)


def test_viscous_zero_data_stays_zero():
    g = Grid.with_cfl(1.0, 20, 3.0, 31)
    cfg = SolverConfig(scheme="viscous", epsilon=0.1)
    f = initial_field(g)
    for _ in range(10):
        f = step_viscous(f, CoefficientField(), Inflow(), cfg)
    assert np.max(np.abs(f.f)) == 0.0


def manufactured_error(name, nx, t_end=0.2, V=5.0):
    ms = manufactured_solution(name)
    g = Grid.with_cfl(1.0, nx, V, 2 * nx + 1, t_end=t_end)
    cfg = SolverConfig(velocity_wall=ms.value)
    res = march(initial_field(g, ms.value, cfg), ms.forced_coefficients(), Inflow(ms.value), cfg, t_end=t_end)
    X, Vv = g.mesh()
    err = res.field.f - ms.value(res.field.t, X, Vv)
    return math.sqrt(g.hx * np.sum(err**2 @ g.weights))


@pytest.mark.parametrize("name", ["gauss_sine", "smooth_inflow"])
def test_manufactured_convergence(name):
    errs = [manufactured_error(name, nx) for nx in (20, 40, 80)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 0.9, (errs, orders)


def test_steady_benchmark_coarse():
    out = run_steady_benchmark(50, 51)
    assert out["relative_l2_error"] < 0.05
    X, V = out["field"].grid.mesh()
    assert np.all(np.isfinite(steady_value(X, V)))


def test_energy_ledger_zero_and_constant():
    g = Grid.with_cfl(1.0, 10, 3.0, 21)
    zero = march(initial_field(g), CoefficientField(), Specular(), SolverConfig(), n_steps=1).field
    led = energy_ledger(zero, 1.0)
    assert all(val == 0.0 for val in led.values())
    one = march(initial_field(g, 1.0), CoefficientField(), Specular(), SolverConfig(), n_steps=1).field
    assert energy_ledger(one, 0.0)["boundary_flux"] == pytest.approx(0.0, abs=1e-13)
    with pytest.raises(ValueError):
        energy_ledger(initial_field(g))


def test_energy_nonincreasing_absorbing():
    g = Grid.with_cfl(1.0, 40, 5.0, 81)
    coeffs = CoefficientField(c=lambda t, x, v: -0.5 * (1 + np.cos(x * v)), B=lambda t, x, v: 0.3 * np.sin(x) + 0 * v)
    res = march(initial_field(g, BUMP), coeffs, Inflow(), SolverConfig(), t_end=0.5, ledger_q=0.0)
    energy = [h["energy"] for h in res.history]
    assert np.all(np.diff(energy) <= 1e-14)


def test_l2_stability_constant_bounded():
    ratios = []
    for nx in (20, 40, 80):
        g = Grid.with_cfl(1.0, nx, 5.0, 2 * nx + 1, t_end=0.5)
        start = initial_field(g, BUMP)
        res = march(start, CoefficientField(), Inflow(), SolverConfig(), t_end=0.5)
        l2 = lambda f: math.sqrt(g.hx * np.sum(f**2 @ g.weights))
        ratios.append(l2(res.field.f) / l2(start.f))
    assert max(ratios) <= 1.0 and np.ptp(ratios) < 0.1


def test_velocity_truncation_sensitivity():
    def run(V, nv):
        g = Grid.with_cfl(1.0, 40, V, nv, t_end=0.5)
        return march(initial_field(g, BUMP), CoefficientField(), Specular(), SolverConfig(), t_end=0.5).field

    a, b = run(6.0, 121), run(12.0, 241)
    inner = b.f[:, 60:181]
    assert np.max(np.abs(a.f - inner)) / np.max(np.abs(inner)) < 0.01


@pytest.mark.parametrize("spec,tol", [(Specular(), 1e-6), (Diffuse(Maxwellian(1.0)), 1e-4)], ids=["specular", "diffuse"])
def test_mass_conservation(spec, tol):
    g = Grid.with_cfl(1.0, 50, 10.0, 201, t_end=0.5)
    f0 = lambda t, x, v: BUMP(t, x, v) * (1 + 0.3 * v)
    start = initial_field(g, f0)
    res = march(start, CoefficientField(), spec, SolverConfig(), t_end=0.5)
    assert abs(mass(res.field) - mass(start)) / mass(start) / 0.5 < tol


@settings(max_examples=12, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    st.sampled_from(["inflow", "diffuse", "specular", "damped"]),
    st.floats(0.0, 0.5),
    st.floats(-1.0, 1.0),
    st.floats(0.0, 1.0),
    st.floats(-2.0, 2.0),
    st.floats(0.0, 2.0),
)
def test_maximum_principle_property(kind, a1, b1, c1, amp, g0):
    g = Grid.with_cfl(1.0, 16, 4.0, 33, t_end=0.3)
    coeffs = CoefficientField(
        A=lambda t, x, v: 1.0 + a1 * np.sin(3 * x + 2 * v),
        dA_dv=lambda t, x, v: 2 * a1 * np.cos(3 * x + 2 * v),
        B=lambda t, x, v: b1 * np.cos(2 * x) + 0 * v,
        c=lambda t, x, v: -0.5 * c1 * (1 + np.sin(v)) + 0 * x,
    )
    spec = {
        "inflow": Inflow(lambda t, x, v: g0 * np.exp(-0.1 * v**2) + 0 * x),
        "diffuse": Diffuse(Maxwellian(1.0)),
        "specular": Specular(),
        "damped": DampedSpecular(0.5),
    }[kind]
    start = initial_field(g, lambda t, x, v: amp * np.exp(-(v**2) / 4) * np.sin(2 * np.pi * x))
    res = march(start, coeffs, spec, SolverConfig(), t_end=0.3, keep_traces=True)
    bound = float(np.max(np.abs(start.f)))
    for tr in res.trace_log:
        for face in res.field.faces:
            bound = max(bound, float(np.max(np.abs(np.where(face.incoming(g.v), tr[face.name], 0.0)))))
    assert max(h["max_abs"] for h in res.history) <= bound + 1e-8


def test_monotonicity_warning():
    g = Grid.with_cfl(1.0, 10, 20.0, 11)
    coeffs = CoefficientField(B=constant(2.0), A=constant(0.5), Lambda=4.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        march(initial_field(g), coeffs, Specular(), SolverConfig(), n_steps=1)
    assert any("monoton" in str(w.message) for w in caught)


def test_extract_traces_examples():
    g = Grid.with_cfl(1.0, 10, 3.0, 21)
    interior = initial_field(g)
    interior.f[3:7, 5:15] = 1.0
    tr = extract_traces(interior)
    for face in tr.values():
        assert np.max(np.abs(face["outgoing"])) == 0.0
    one = march(initial_field(g, 1.0, SolverConfig(velocity_wall=constant(1.0))), CoefficientField(), Inflow(constant(1.0)),
                SolverConfig(velocity_wall=constant(1.0)), n_steps=1).field
    for name, face in zip(("left", "right"), one.faces):
        t = extract_traces(one)[name]
        np.testing.assert_allclose(t["outgoing"][face.outgoing(g.v)], 1.0)
        np.testing.assert_allclose(t["incoming"][face.incoming(g.v)], 1.0)
        assert t["measure"][10] == 0.0
    rnd = initial_field(g, np.random.default_rng(0).normal(size=(10, 21)))
    for face in extract_traces(rnd).values():
        assert np.max(np.abs(face["outgoing"])) <= np.max(np.abs(rnd.f))


def test_mirror_extension_even_field():
    g = Grid.with_cfl(1.0, 10, 3.0, 21)
    fld = initial_field(g, lambda t, x, v: np.cos(x) * np.exp(-(v**2)))
    for side in ("left", "right"):
        ext = mirror_extended_field(fld, Specular(), side)
        assert ext.interface_jump == 0.0 and ext.cell_jump == 0.0
        half = ext.f[: g.nx] if side == "left" else ext.f[g.nx :]
        np.testing.assert_array_equal(half, fld.f[::-1, ::-1])
    with pytest.raises(ValueError):
        mirror_extended_field(fld, Inflow())


def test_mirror_extension_solver_jump_below_discretization_error():
    f0 = lambda t, x, v: BUMP(t, x, v) * (1 + 0.3 * v)

    def run(nx):
        g = Grid.with_cfl(1.0, nx, 6.0, 2 * nx + 1, t_end=0.5)
        return march(initial_field(g, f0), CoefficientField(), Specular(), SolverConfig(), t_end=0.5).field

    c, fine = run(20), run(40)
    disc = np.max(np.abs(c.f - 0.5 * (fine.f[0::2] + fine.f[1::2])[:, ::2]))
    for side in ("left", "right"):
        assert mirror_extended_field(c, Specular(), side).interface_jump <= disc


def test_reflect_coefficients():
    coeffs = CoefficientField(A=lambda t, x, v: 1 + 0.1 * x + 0.2 * v, B=lambda t, x, v: x + 2 * v, c=lambda t, x, v: -(x**2) + 0 * v)
    r = reflect_coefficients(coeffs)
    assert r.A(0.0, 0.3, 0.5) == pytest.approx(coeffs.A(0.0, -0.3, -0.5))
    assert r.B(0.0, 0.3, 0.5) == pytest.approx(-coeffs.B(0.0, -0.3, -0.5))
    assert r.c(0.0, 0.3, 0.5) == pytest.approx(coeffs.c(0.0, -0.3, -0.5))


def test_check_bounds():
    with pytest.raises(ValueError):
        CoefficientField(A=constant(3.0), Lambda=2.0).check_bounds(((0, 1), (0, 1), (-1, 1)))
    rep = CoefficientField(B=constant(1.0), c=constant(-0.5)).check_bounds(((0, 1), (0, 1), (-1, 1)))
    assert rep["B_plus_c_max"] == 1.5
