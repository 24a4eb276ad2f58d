import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from kinfp.boundary import (
    GRAZING,
    INCOMING,
    OUTGOING,
    DampedSpecular,
    Diffuse,
    Inflow,
    Maxwellian,
    Specular,
    apply_boundary,
    boundary_maxwellian,
    boundary_measure,
    classify,
    classify_grid,
    diffuse_profile,
    interval_faces,
    macroscopic_flux,
    specular,
)
from kinfp.solver import Grid

LEFT, RIGHT = interval_faces(1.0)


def vgrid(V=8.0, nv=801):
    g = Grid(1.0, 10, V, nv, 0.01)
    return g.v, g.weights


def test_classify_examples():
    assert classify([1.0, 0.0], [1.0, 0.0]).tag == OUTGOING
    assert classify([1.0, 0.0], [-1.0, 0.0]).tag == INCOMING
    assert classify([1.0, 0.0], [0.0, 1.0]).tag == GRAZING


def test_classify_grid_marks_zero_velocity():
    v, _ = vgrid(nv=11)
    tags = classify_grid(1.0, v)
    assert tags[5] == 0 and tags[0] == -1 and tags[-1] == 1


def test_specular_examples():
    np.testing.assert_array_equal(specular([0.0, 1.0], [1.0, -3.0]), [1.0, 3.0])
    np.testing.assert_array_equal(specular([0.0, 1.0], [2.0, 0.0]), [2.0, 0.0])


vec2 = arrays(float, 2, elements=st.floats(-100, 100))


@given(vec2, st.floats(0, 2 * np.pi))
def test_specular_isometry_and_class_swap(v, theta):
    n = np.array([np.cos(theta), np.sin(theta)])
    w = specular(n, v)
    assert np.linalg.norm(w) == pytest.approx(np.linalg.norm(v), rel=1e-12, abs=1e-12)
    assert np.dot(n, w) == pytest.approx(-np.dot(n, v), abs=1e-9)
    tag = classify(n, v, tol=1e-9).tag
    swapped = {OUTGOING: INCOMING, INCOMING: OUTGOING, GRAZING: GRAZING}[tag]
    assert classify(n, w, tol=1e-9).tag == swapped


def test_maxwellian_d1_shape():
    v = np.linspace(-3, 3, 7)
    np.testing.assert_allclose(boundary_maxwellian(1.0)(v), np.exp(-(v**2) / 2))


@pytest.mark.parametrize("theta", [1.0, 4.0, 0.25])
def test_maxwellian_unit_flux_d1(theta):
    m = Maxwellian(theta)
    flux, _ = integrate.quad(lambda w: w * m(w), 0, 60 * np.sqrt(theta), epsabs=1e-14)
    assert flux == pytest.approx(1.0, abs=1e-10)


def test_maxwellian_unit_flux_d2():
    # frozen scipy quadrature value of the closed form: 1.0000000000000002
    m = Maxwellian(1.0, dim=2)
    flux, _ = integrate.dblquad(lambda v2, v1: v2 * m(np.array([v1, v2])), -12, 12, 0, 12, epsabs=1e-13)
    assert flux == pytest.approx(1.0, abs=1e-8)


def test_maxwellian_rejects_bad_temperature():
    with pytest.raises(ValueError):
        Maxwellian(0.0)
    with pytest.raises(ValueError):
        Maxwellian(lambda t, x: -1.0)(np.zeros(3))


def test_macroscopic_flux_examples():
    v, w = vgrid()
    assert macroscopic_flux(RIGHT, np.zeros_like(v), v, w) == 0.0
    assert macroscopic_flux(RIGHT, np.exp(-(v**2) / 2), v, w) == pytest.approx(1.0, abs=1e-4)
    assert macroscopic_flux(RIGHT, (v < 0).astype(float), v, w) == 0.0
    with pytest.raises(ValueError, match="left"):
        macroscopic_flux(LEFT, None, v, w)


def test_measure_vanishes_on_grazing_node():
    v, w = vgrid(nv=11)
    mu = boundary_measure(RIGHT, v, w)
    assert mu[5] == 0.0 and np.all(mu[v != 0] > 0)


def test_absorbing_inflow():
    v, w = vgrid(nv=21)
    out = apply_boundary(Inflow(), LEFT, None, v, w)
    np.testing.assert_array_equal(out, 0.0)


def test_inflow_per_face_and_missing_face():
    v, w = vgrid(nv=21)
    spec = Inflow({"left": lambda t, x, vv: 2.0 + 0 * vv})
    inc = apply_boundary(spec, LEFT, None, v, w)
    np.testing.assert_array_equal(inc[v > 0], 2.0)
    np.testing.assert_array_equal(inc[v <= 0], 0.0)
    with pytest.raises(KeyError, match="right"):
        apply_boundary(spec, RIGHT, None, v, w)


def test_inflow_rejects_nan():
    v, w = vgrid(nv=21)
    with pytest.raises(ValueError):
        apply_boundary(Inflow(lambda t, x, vv: np.nan * vv), LEFT, None, v, w)


def test_specular_example_left_wall():
    v, w = vgrid(V=2.0, nv=5)
    out = np.zeros_like(v)
    out[0] = 5.0  # gamma_+ f(-2) at the left wall
    inc = apply_boundary(Specular(), LEFT, out, v, w)
    assert inc[-1] == 5.0
    assert np.count_nonzero(inc) == 1


def test_damped_specular_scales():
    v, w = vgrid(nv=21)
    out = np.exp(-v**2)
    np.testing.assert_allclose(apply_boundary(DampedSpecular(0.3), RIGHT, out, v, w), 0.3 * apply_boundary(Specular(), RIGHT, out, v, w))
    with pytest.raises(ValueError):
        DampedSpecular(1.5)


@pytest.mark.parametrize("face", [LEFT, RIGHT], ids=["left", "right"])
def test_diffuse_flux_balance(face):
    v, w = vgrid(V=6.0, nv=61)
    m = Maxwellian(1.0)(v)
    inc = apply_boundary(Diffuse(), face, m, v, w)
    out_flux = macroscopic_flux(face, np.where(face.outgoing(v), m, 0.0), v, w)
    in_flux = float(np.sum(inc * np.abs(face.speed(v)) * w))
    assert in_flux == pytest.approx(out_flux, rel=1e-13)
    raw = apply_boundary(Diffuse(renormalize=False), face, m, v, w)
    assert float(np.sum(raw * np.abs(face.speed(v)) * w)) == pytest.approx(out_flux, rel=1e-2)


def test_diffuse_profile_unit_flux():
    v, w = vgrid(V=6.0, nv=31)
    prof = diffuse_profile(Diffuse(), LEFT, v, w)
    assert float(np.sum(prof * np.abs(LEFT.speed(v)) * w)) == pytest.approx(1.0, rel=1e-14)
    report = Diffuse().weight_report(v)
    assert all(np.isfinite(val) for val in report["sup_weighted"].values())


@given(arrays(float, 21, elements=st.floats(-10, 10)), arrays(float, 21, elements=st.floats(-10, 10)), st.floats(-3, 3))
def test_closures_linear(f1, f2, lam):
    v, w = vgrid(V=5.0, nv=21)
    for spec in (Specular(), DampedSpecular(0.4), Diffuse()):
        for face in (LEFT, RIGHT):
            lhs = apply_boundary(spec, face, f1 + lam * f2, v, w)
            rhs = apply_boundary(spec, face, f1, v, w) + lam * apply_boundary(spec, face, f2, v, w)
            np.testing.assert_allclose(lhs, rhs, atol=1e-9)
    g = Inflow(lambda t, x, vv: 1.0 + vv**2)
    # affine: the outgoing trace is ignored
    np.testing.assert_array_equal(apply_boundary(g, LEFT, f1, v, w), apply_boundary(g, LEFT, f2, v, w))
