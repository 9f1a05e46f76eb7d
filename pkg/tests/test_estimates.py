import math

import numpy as np
import numpy.testing as npt
import pytest

from deltawell.estimates import (
    DecayReport,
    continuous_projection,
    decay_grid,
    decay_scan,
    seed_family,
    strichartz_exponent,
    strichartz_probe,
)
from deltawell.grid import Grid, gaussian
from deltawell.spectrum import WellParams, eigenfunction

FREE = 1 / math.sqrt(4 * math.pi)


def coarse_grid(params, points=41):
    return decay_grid(params, points=points)


def test_decay_grid_shape():
    g = decay_grid(WellParams(1.0, 1.0))
    assert g.size == 201
    npt.assert_allclose([g.x[0], g.x[-1]], [-6.0, 6.0])


def test_weak_coupling_gives_free_value():
    p = WellParams(1.0, 1e-14)
    rep = decay_scan(p, [0.1, 1.0, 10.0], coarse_grid(p))
    npt.assert_allclose(rep.sup_values, FREE, rtol=1e-10)
    assert rep.constant == max(rep.sup_values)


def test_report_invariants():
    with pytest.raises(ValueError):
        DecayReport((1.0,), (), 0.0)
    p = WellParams(1.0, 1.0)
    with pytest.raises(ValueError):
        decay_scan(p, [1.0, 0.5], coarse_grid(p))
    with pytest.raises(ValueError):
        decay_scan(p, [0.0, 1.0], coarse_grid(p))


@pytest.mark.parametrize("alpha", [1.0, -2.0])
def test_bounded_and_locally_decaying(alpha):
    p = WellParams(1.0, alpha)
    rep = decay_scan(p, [0.1, 1.0, 10.0, 100.0], coarse_grid(p))
    assert np.all(np.isfinite(rep.sup_values))
    assert rep.constant < 1.0
    # on a fixed box the continuous part decays faster than t^{-1/2}
    assert rep.sup_values[-1] < FREE


def test_constant_stable_under_refinement():
    p = WellParams(1.0, 1.0)
    ts = [0.3, 3.0]
    c1 = decay_scan(p, ts, coarse_grid(p, 41)).constant
    c2 = decay_scan(p, ts, coarse_grid(p, 81)).constant
    assert abs(c2 - c1) <= 0.05 * c2


def test_strichartz_exponent():
    assert strichartz_exponent(4) == 8
    assert math.isinf(strichartz_exponent(2))
    with pytest.raises(ValueError):
        strichartz_exponent(1.5)


def test_seed_family_is_unit():
    p = WellParams(1.0, -2.0)
    g = Grid.symmetric(10.0, 200, p.a)
    fam = seed_family(g, p)
    assert len(fam) == 8
    for u in fam:
        npt.assert_allclose(u.norm((-1, 1)), 1.0, rtol=1e-12)


def test_probe_vanishes_on_bound_state():
    p = WellParams(1.0, -2.0)
    # short times need h well below sqrt(t) for the kernel quadrature
    g = Grid.symmetric(10.0, 800, p.a)
    phi = eigenfunction(p, "E1", g)
    assert continuous_projection(p, phi).norm() < 1e-10
    assert strichartz_probe(p, 4.0, 0.5, [phi], n_times=2) < 1e-3


def test_r2_is_unitarity_on_continuous_subspace():
    p = WellParams(1.0, 1.0)
    g = Grid.symmetric(12.0, 480, p.a)
    u = gaussian(g, 0.0, 1.0)
    val = strichartz_probe(p, 2.0, 1.0, [u], n_times=5)
    assert val <= u.norm((-1, 1)) + 1e-4
    assert val > 0.99


def test_free_probe_matches_analytic_norm():
    # free Gaussian under H = -d^2/dx^2: |psi_t|^2 is normal with variance s^2 = w^2 + t^2 / w^2,
    # so ||psi_t||_4^4 = 1 / (2 sqrt(pi) s) and the L^8_t L^4_x norm is a 1-D integral
    p = WellParams(1.0, 1e-14)
    w, T = 1.0, 1.0
    g = Grid.symmetric(20.0, 800, p.a)
    u = gaussian(g, 0.0, w)
    n = 10
    probe = strichartz_probe(p, 4.0, T, [u], n_times=n)
    ts = np.linspace(0, T, n + 1)
    s2 = w**2 * (1 + ts**2 / w**4)
    exact_samples = (2 * math.sqrt(math.pi) * np.sqrt(s2)) ** (-0.25)
    expected = np.trapezoid(exact_samples**8, ts) ** (1 / 8)
    npt.assert_allclose(probe, expected, rtol=1e-3)


def test_probe_stable_under_refinement():
    p = WellParams(1.0, -2.0)
    vals = []
    for N in (240, 480):
        g = Grid.symmetric(12.0, N, p.a)
        vals.append(strichartz_probe(p, 4.0, 0.5, seed_family(g, p)[2:4], n_times=4))
    assert abs(vals[1] - vals[0]) <= 0.2 * vals[1]
