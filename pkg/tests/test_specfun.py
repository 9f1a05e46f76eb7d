import math

import mpmath as mp
import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import lambertw as scipy_lambertw

from deltawell.specfun import (
    M_LIMIT,
    AccuracyError,
    ScaledComplex,
    faddeeva,
    hermite,
    hermite_he,
    lambert_w,
    pcf_neg,
    pcf_scaled_product,
)


def mp_log_pcf(m, z):
    with mp.workdps(30):
        return complex(mp.log(mp.pcfd(-m - 1, z)))


def log_close(a, b):
    d = abs(a - b)
    return min(d, abs(d - 2 * math.pi))


# --- Lambert W ---------------------------------------------------------------


@pytest.mark.parametrize("x", [-1 / math.e + 1e-12, -0.3, -0.01, 0.0, 0.5, 3.0, 1e3])
def test_lambert_principal_matches_scipy(x):
    npt.assert_allclose(lambert_w("principal", x), scipy_lambertw(x, 0).real, rtol=1e-14, atol=1e-15)


@pytest.mark.parametrize("x", [-0.3, -0.1, -1e-4])
def test_lambert_lower_branch(x):
    w = lambert_w("minus_one", x)
    assert w <= -1
    npt.assert_allclose(w * math.exp(w), x, rtol=1e-13)
    npt.assert_allclose(w, scipy_lambertw(x, -1).real, rtol=1e-13)


def test_lambert_domain_errors():
    with pytest.raises(ValueError):
        lambert_w("principal", -1.0)
    with pytest.raises(ValueError):
        lambert_w("minus_one", 0.5)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-1 / math.e, max_value=1e6))
def test_lambert_inverse_property(x):
    w = lambert_w("principal", x)
    assert w >= -1
    npt.assert_allclose(w * math.exp(w), x, rtol=1e-12, atol=1e-15)


# --- Faddeeva, Hermite ----------------------------------------------------------


def test_faddeeva_against_mpmath():
    for z in [0.3 + 0.2j, -2 + 1j, 5 - 0.1j, 1j * 7]:
        ref = complex(mp.exp(-mp.mpc(z) ** 2) * mp.erfc(-1j * mp.mpc(z)))
        npt.assert_allclose(faddeeva(z), ref, rtol=1e-13)


def test_hermite_matches_numpy():
    z = np.array([0.3 + 0.1j, -1.2, 2.5j])
    for m in [0, 1, 2, 7, 20]:
        coeffs = np.zeros(m + 1)
        coeffs[-1] = 1
        npt.assert_allclose(hermite(m, z), np.polynomial.hermite.hermval(z, coeffs), rtol=1e-12)


def test_hermite_overflow_is_reported():
    with pytest.raises(OverflowError):
        hermite(200, 1e200)


def test_hermite_he_log_matches_numpy():
    x = np.array([0.5, -3.0 + 1j, 10j])
    for m in [1, 5, 30]:
        coeffs = np.zeros(m + 1)
        coeffs[-1] = 1
        ref = np.polynomial.hermite_e.hermeval(x, coeffs)
        npt.assert_allclose(np.exp(hermite_he(m, x)), ref, rtol=1e-11)


# --- ScaledComplex -----------------------------------------------------------------


def test_scaled_complex_arithmetic_without_overflow():
    big = ScaledComplex.from_log(800.0 + 0.3j)
    prod = big * ScaledComplex.from_log(-799.0)
    npt.assert_allclose(prod.value(), math.e * np.exp(0.3j), rtol=1e-13)
    s = big + big
    npt.assert_allclose(s.log(), 800 + math.log(2) + 0.3j, rtol=1e-14)


def test_scaled_complex_zero():
    z = ScaledComplex.from_complex(0.0)
    assert z.value() == 0


# --- parabolic cylinder functions ---------------------------------------------------


@pytest.mark.parametrize(
    "m,z",
    [
        (0, 0.5 + 0.5j),
        (0, -4 + 2j),
        (1, 2j),
        (2, -1 - 3j),
        (5, 10 + 0j),
        (17, -8 + 8j),
        (40, 12.649110640673518j),  # merging saddles, w = 2 i sqrt(m)
        (64, 0.01 + 40j),
        (64, -120 + 30j),
    ],
)
def test_pcf_against_mpmath(m, z):
    val = pcf_neg(m, z)
    assert log_close(val.log(), mp_log_pcf(m, z)) < 1e-11


def test_pcf_random_sweep_against_mpmath():
    rng = np.random.default_rng(12345)
    worst = 0.0
    for trial in range(150):
        m = int(rng.integers(0, 65))
        r = 10 ** rng.uniform(-2, math.log10(100))
        th = rng.uniform(-math.pi, math.pi)
        if trial % 3 == 0:
            th = math.copysign(math.pi / 2, th) + rng.normal(0, 0.02)
        z = r * np.exp(1j * th)
        worst = max(worst, log_close(pcf_neg(m, z).log(), mp_log_pcf(m, z)))
    assert worst < 1e-11


def test_pcf_vectorised_matches_scalar():
    z = np.array([0.3 + 2j, -5 + 1j, 4.0 - 4j])
    vec = pcf_neg(7, z)
    for k, zk in enumerate(z):
        npt.assert_allclose(vec.log()[k], pcf_neg(7, zk).log(), rtol=1e-14)


def test_pcf_recurrence():
    # D_{v+1} - z D_v + v D_{v-1} = 0 with v = -m-1
    z = 1.7 - 0.6j
    for m in [2, 10, 30]:
        d = [pcf_neg(k, z).value() for k in (m - 1, m, m + 1)]
        # D_{-m} - z D_{-m-1} - (m+1) D_{-m-2} = 0
        npt.assert_allclose(d[0] - z * d[1], (m + 1) * d[2], rtol=1e-11)


def test_pcf_scaled_product_handles_huge_prefactor():
    z = -30 + 5j
    lp = -700.0 + 0.1j
    direct = pcf_neg(3, z)
    got = pcf_scaled_product(3, z, lp)
    npt.assert_allclose(np.log(got), direct.log() + lp, rtol=1e-12)


def test_pcf_order_bounds():
    with pytest.raises(ValueError):
        pcf_neg(-1, 1.0)
    with pytest.raises(ValueError):
        pcf_neg(M_LIMIT + 1, 1.0)


def test_pcf_accuracy_error_is_raised_when_tolerance_unreachable():
    with pytest.raises(AccuracyError):
        pcf_neg(30, -90 + 1j, rtol=1e-20)
