import math
import struct

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from deltawell import propagator
from deltawell.grid import Grid, gaussian
from deltawell.propagator import (
    NonConvergenceError,
    apply_propagator,
    continuous_kernel,
    continuous_kernel_batch,
    free_kernel,
    full_kernel,
    kernel_matrix,
    oracle_kernel,
    r_term,
    read_cache_file,
    series_partial_sum,
)
from deltawell.spectrum import (
    ThresholdError,
    WellParams,
    eigenfunction,
    eigenfunction_values,
    eigenvalues,
)

# 30-digit mpmath contour integral of the resolvent representation, computed
# independently of the package (contour depth 0.3, breakpoints every 0.5 on [-20, 20]).
FROZEN_KERNEL = 0.1503779377356137 - 0.3539098649716432j


def test_frozen_kernel_value():
    p = WellParams(1.0, 1.0)
    ev = continuous_kernel(p, 1.0, 0.5, -0.3)
    assert ev.method == "series"
    assert abs(ev.value - FROZEN_KERNEL) < 1e-10
    assert abs(oracle_kernel(p, 1.0, 0.5, -0.3) - FROZEN_KERNEL) < 1e-9


def test_free_kernel_modulus():
    for t in (0.1, 1.0, 10.0):
        npt.assert_allclose(abs(free_kernel(t, 0.3, -2.0)), 1 / math.sqrt(4 * math.pi * t))


def test_weak_coupling_is_free():
    p = WellParams(1.0, 1e-14)
    v = continuous_kernel(p, 1.0, 0.7, -1.1).value
    assert abs(v - free_kernel(1.0, 0.7, -1.1)) < 1e-12


@pytest.mark.parametrize("a,alpha", [(1.0, 1.0), (1.0, -2.0), (0.5, 3.0)])
@pytest.mark.parametrize("t", [0.3, 1.0, 5.0])
def test_series_matches_quadrature(a, alpha, t):
    p = WellParams(a, alpha)
    for x, y in [(0.0, 0.0), (-3.0, 1.5), (2.0, 2.5)]:
        ev = continuous_kernel(p, t, x, y, method="series", m_max=300)
        q = oracle_kernel(p, t, x, y)
        assert abs(ev.value - q) <= 1e-7 * abs(q)


def test_near_threshold_needs_many_terms():
    p = WellParams(2.0, -0.4)
    with pytest.raises(NonConvergenceError):
        continuous_kernel(p, 1.0, 0.0, 0.0, method="series")
    auto = continuous_kernel(p, 1.0, 0.0, 0.0)
    assert auto.method == "quadrature"
    long = continuous_kernel(p, 1.0, 0.0, 0.0, method="series", m_max=1000)
    assert long.terms_used > 300
    assert abs(long.value - auto.value) < 1e-7 * abs(auto.value)


def test_tail_estimate_bounds_remainder():
    p = WellParams(1.0, -2.0)
    for t, x, y in [(0.3, 1.0, -2.0), (1.0, 0.0, 0.5), (5.0, -3.0, 3.0)]:
        ev = continuous_kernel(p, t, x, y, method="series", m_max=300)
        ref = series_partial_sum(p, t, x, y, 2 * ev.terms_used)
        assert abs(ev.value - ref) <= ev.tail_estimate


@settings(max_examples=25, deadline=None)
@given(st.floats(-4, 4), st.floats(-4, 4), st.floats(0.2, 5))
def test_kernel_symmetries(x, y, t):
    p = WellParams(1.0, 1.0)
    v = continuous_kernel(p, t, x, y).value
    assert abs(continuous_kernel(p, t, y, x).value - v) < 1e-10
    assert abs(continuous_kernel(p, t, -x, -y).value - v) < 1e-10


def test_batch_matches_scalar():
    p = WellParams(1.0, -2.0)
    xs = np.array([-1.0, 0.0, 2.0])
    evs = continuous_kernel_batch(p, 1.0, xs[:, None], xs[None, :])
    for i, x in enumerate(xs):
        for j, y in enumerate(xs):
            assert abs(evs[3 * i + j].value - continuous_kernel(p, 1.0, x, y).value) < 1e-12


def test_threshold_is_rejected():
    with pytest.raises(ThresholdError):
        continuous_kernel(WellParams(1.0, -1.0), 1.0, 0.0, 0.0)


def test_r_term_validation():
    p = WellParams(1.0, 1.0)
    with pytest.raises(ValueError):
        r_term(p, 0.25, 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        r_term(p, 1.0, -1.0, 0.0, 0.0)
    assert np.isfinite(r_term(p, 1.5, 1.0, 0.0, 0.0))


def test_kernel_matrix_matches_pointwise():
    p = WellParams(1.0, -2.0)
    g = Grid.symmetric(3.0, 12, p.a)
    mat = kernel_matrix(p, 0.7, g)
    x = g.x
    for i in (0, 4, 6, 11):
        for j in (1, 4, 8):
            assert abs(mat[i, j] - continuous_kernel(p, 0.7, x[i], x[j]).value) < 1e-9


def test_full_kernel_adds_bound_states():
    p = WellParams(1.0, -2.0)
    full = full_kernel(p, 1.0, 0.3, -0.8)
    cont = continuous_kernel(p, 1.0, 0.3, -0.8).value
    bound = sum(
        np.exp(-1j * e) * eigenfunction_values(p, idx, 0.3) * eigenfunction_values(p, idx, -0.8)
        for idx, e in zip(("E1", "E2"), eigenvalues(p))
    )
    npt.assert_allclose(full, cont + bound, atol=1e-12)


def test_cache_file_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("DELTAWELL_CACHE_DIR", str(tmp_path))
    propagator.clear_cache()
    p = WellParams(1.0, 1.0)
    g = Grid.symmetric(2.0, 8, p.a)
    mat = kernel_matrix(p, 0.5, g)
    files = list(tmp_path.glob("*.dwk1"))
    assert len(files) == 1
    raw = files[0].read_bytes()
    magic, a, al, t, size, h, origin = struct.unpack_from("<4sdddQdd", raw)
    assert (magic, a, al, t, size, h, origin) == (b"DWK1", 1.0, 1.0, 0.5, 9, g.spacing, g.origin)
    body = np.frombuffer(raw[struct.calcsize("<4sdddQdd"):], dtype="<f8")
    npt.assert_array_equal(body[0::2].reshape(9, 9), mat.real)
    npt.assert_array_equal(body[1::2].reshape(9, 9), mat.imag)
    propagator.clear_cache()
    again = kernel_matrix(p, 0.5, g)
    npt.assert_array_equal(again, mat)
    assert read_cache_file(files[0])[3] == 9
    propagator.clear_cache()


def test_truncated_cache_file_is_rejected(tmp_path):
    p = WellParams(1.0, 1.0)
    g = Grid.symmetric(2.0, 4, p.a)
    path = tmp_path / "m.dwk1"
    propagator.write_cache_file(str(path), p, 0.5, g, np.zeros((5, 5), dtype=complex))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError):
        read_cache_file(str(path))


def test_eigenstate_evolves_by_phase():
    p = WellParams(1.0, -2.0)
    g = Grid.symmetric(10.0, 400, p.a)
    phi = eigenfunction(p, "E1", g)
    out = apply_propagator(p, 0.5, phi)
    e1 = eigenvalues(p)[0]
    assert (out - phi * np.exp(-0.5j * e1)).norm((-1, 1)) < 1e-3
    assert apply_propagator(p, 0.5, phi, part="continuous").norm((-1, 1)) < 1e-3


def test_corrected_rule_beats_trapezoid():
    p = WellParams(1.0, -2.0)
    g = Grid.symmetric(10.0, 400, p.a)
    phi = eigenfunction(p, "E1", g)
    e1 = eigenvalues(p)[0]
    target = phi * np.exp(-0.5j * e1)
    err_c = (apply_propagator(p, 0.5, phi) - target).norm()
    err_t = (apply_propagator(p, 0.5, phi, rule="trapezoid") - target).norm()
    assert err_c < err_t


def test_apply_requires_nodes():
    g = Grid(-5.0, 0.3, 34)
    with pytest.raises(ValueError):
        apply_propagator(WellParams(1.0, 1.0), 1.0, gaussian(g))
