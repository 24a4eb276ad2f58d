import numpy as np
import pytest

from kinfp.acceptance import reference_iteration_problem
from kinfp.boundary import Diffuse, Maxwellian
from kinfp.iteration import (
    IterationConfig,
    SlabFailure,
    diffuse_slab_iterate,
    specular_iterate,
)


@pytest.fixture(scope="module")
def small():
    return reference_iteration_problem(nx=20, nv=21, t_end=0.3)


@pytest.fixture(scope="module")
def undamped(small):
    return specular_iterate(small, 1.0)[0]


def test_zero_damping_single_iteration(small):
    _, tr = specular_iterate(small, 0.0)
    assert tr.iterations == 1 and tr.converged and tr.defects == [0.0]


@pytest.mark.parametrize("a", [0.3, 0.5, 0.8])
def test_defect_ratios_bounded_by_damping(small, a):
    _, tr = specular_iterate(small, a)
    assert tr.converged
    assert max(tr.ratios[1:]) <= 1.2 * a * a
    assert tr.isometry_error < 1e-12
    assert tr.boundary_residual < 1e-5


def test_damping_to_one_is_cauchy(small, undamped):
    gaps = []
    for a in (0.5, 0.9, 0.99):
        f, tr = specular_iterate(small, a)
        assert tr.converged
        gaps.append(np.max(np.abs(f.f - undamped.f)))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 0.02


def test_undamped_uses_direct_closure(small):
    _, tr = specular_iterate(small, 1.0)
    assert tr.converged and tr.iterations == 0 and "direct" in tr.note


def test_zero_data_gives_zero(small):
    prob = reference_iteration_problem(nx=20, nv=21, t_end=0.3)
    prob.f0 = None
    f, tr = specular_iterate(prob, 0.5)
    assert np.max(np.abs(f.f)) == 0.0 and tr.iterations == 1


def test_invalid_parameters(small):
    with pytest.raises(ValueError):
        specular_iterate(small, 1.5)
    with pytest.raises(ValueError):
        IterationConfig(a=-0.1)
    with pytest.raises(ValueError):
        IterationConfig(tau=0.0)
    with pytest.raises(ValueError):
        IterationConfig(tau=2.0)


def test_diffuse_slabs_chain_and_contract(small):
    f, st = diffuse_slab_iterate(small, 0.1)
    assert len(st.slabs) >= 3
    assert st.slabs[0].t_start == 0.0
    ends = [s.t_start + s.tau for s in st.slabs]
    np.testing.assert_allclose(ends[:-1], [s.t_start for s in st.slabs[1:]])
    assert f.t == pytest.approx(0.3)
    assert st.max_contraction <= 0.5
    assert st.boundary_residual < 1e-6
    for s in st.slabs:
        if len(s.flux_change) > 1:
            assert s.flux_change[-1] < s.flux_change[0]


def test_slab_length_does_not_change_limit(small):
    a, _ = diffuse_slab_iterate(small, 0.1)
    b, _ = diffuse_slab_iterate(small, 0.3)
    assert np.max(np.abs(a.f - b.f)) < 1e-5


def test_slab_failure_reported(small):
    cfg = IterationConfig(tau=0.3, target_contraction=1e-9, max_halvings=1)
    with pytest.raises(SlabFailure) as info:
        diffuse_slab_iterate(small, 0.3, cfg, Diffuse(Maxwellian(1.0)))
    assert "contraction" in info.value.diagnostics
