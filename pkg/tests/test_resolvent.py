import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from deltawell.grid import Grid, gaussian
from deltawell.resolvent import (
    PoleError,
    apply_resolvent,
    free_resolvent,
    lp_bound_probe,
    resolvent_bvp,
    resolvent_kernel,
)
from deltawell.spectrum import WellParams, eigenfunction, eigenvalues

PARAMS = [WellParams(1, 1), WellParams(1, -2), WellParams(0.5, 3), WellParams(2, -0.4)]


def test_closed_form_matches_boundary_value_problem():
    rng = np.random.default_rng(2024)
    for p in PARAMS:
        for _ in range(50):
            x, y = rng.uniform(-4, 4, 2)
            k = complex(rng.uniform(-3, 3), rng.uniform(0.5, 5))
            ref = resolvent_bvp(p, x, y, k)
            npt.assert_allclose(complex(resolvent_kernel(p, x, y, k)), ref, rtol=1e-8)


@settings(max_examples=80, deadline=None)
@given(
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(-3, 3),
    st.floats(0.2, 4),
)
def test_symmetry_and_parity(x, y, kr, ki):
    p = WellParams(1.0, -2.0)
    k = complex(kr, ki)
    v = resolvent_kernel(p, x, y, k)
    npt.assert_allclose(resolvent_kernel(p, y, x, k), v, rtol=1e-12, atol=1e-14)
    npt.assert_allclose(resolvent_kernel(p, -x, -y, k), v, rtol=1e-12, atol=1e-14)


def test_weak_coupling_limit():
    p = WellParams(1.0, 1e-12)
    k = 0.3 + 1.0j
    npt.assert_allclose(resolvent_kernel(p, 0.2, -1.5, k), free_resolvent(0.2, -1.5, k), rtol=1e-10)


def test_pole_at_bound_state():
    p = WellParams(1.0, -2.0)
    kappa = np.sqrt(-eigenvalues(p)[0])
    with pytest.raises(PoleError):
        resolvent_kernel(p, 0.0, 0.0, 1j * kappa)


def test_lower_half_plane_rejected():
    with pytest.raises(ValueError):
        resolvent_kernel(WellParams(1, 1), 0, 0, 1 - 0.5j)


def test_apply_resolvent_inverts_on_eigenfunction():
    # (H - k^2)^{-1} phi_1 = phi_1 / (E_1 - k^2)
    p = WellParams(1.0, -2.0)
    g = Grid.symmetric(12, 1200, 1.0)
    phi = eigenfunction(p, "E1", g)
    k = 0.4 + 1.5j
    out = apply_resolvent(p, phi, k)
    expected = phi * (1.0 / (eigenvalues(p)[0] - k * k))
    assert (out - expected).norm() < 1e-3 * expected.norm()


def test_lp_probe_is_bounded_by_one_for_positive_coupling():
    # for alpha > 0, -eps^{-1} (H + lam^2)^{-1} = lam^2 (H + lam^2)^{-1} has L2 norm <= 1
    p = WellParams(1.0, 1.0)
    g = Grid.symmetric(15, 600, 1.0)
    val = lp_bound_probe(p, 3.0, 2.0, g)
    assert 0.5 < val <= 1.0 + 1e-3


def test_lp_probe_validation():
    g = Grid.symmetric(5, 100, 1.0)
    with pytest.raises(ValueError):
        lp_bound_probe(WellParams(1.0, -2.0), 0.1, 2.0, g)


def test_apply_resolvent_needs_nodes():
    g = Grid(-5.0, 0.3, 34)
    with pytest.raises(ValueError):
        apply_resolvent(WellParams(1.0, 1.0), gaussian(g), 1j)
