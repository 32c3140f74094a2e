import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from levyx.errors import BranchError, JetError
from levyx.jets import Jet, gaussian_cf_jet, nig_unit_jump, nig_unit_jump_jet

D = 6
coef = st.floats(-2.0, 2.0, allow_nan=False)
poly = st.lists(coef, min_size=1, max_size=4)
center = st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False)


def taylor_fd(f, z0, D, r=0.25, n=64):
    """Normalized Taylor coefficients of an analytic ``f`` by the Cauchy integral (FFT)."""
    th = 2 * np.pi * np.arange(n) / n
    vals = f(z0 + r * np.exp(1j * th))
    c = np.fft.fft(vals) / n
    return c[: D + 1] / r ** np.arange(D + 1)


def pj(p, z0):
    return Jet.polynomial(p, z0, D)


@settings(max_examples=60, deadline=None)
@given(poly, poly, center)
def test_product_matches_polynomial_product(p, q, z0):
    lhs = (pj(p, z0) * pj(q, z0)).coeffs
    rhs = pj(np.polynomial.polynomial.polymul(p, q), z0).coeffs
    assert np.allclose(lhs, rhs, atol=1e-12, rtol=0)


@settings(max_examples=60, deadline=None)
@given(poly, center)
def test_exp_log_roundtrip_and_exp_addition(p, z0):
    f = pj(p, z0) * 0.3
    g = pj([0.1, -0.2, 0.05], z0)
    assert np.allclose((f + g).exp().coeffs, (f.exp() * g.exp()).coeffs, atol=1e-12, rtol=1e-12)
    assert np.allclose(f.exp().log().coeffs[1:], f.coeffs[1:], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(poly, center)
def test_reciprocal_and_sqrt(p, z0):
    f = pj(p, z0) * 0.2 + 2.0
    assert np.allclose((f * f.reciprocal()).coeffs, Jet.constant(1.0, z0, D).coeffs, atol=1e-12)
    s = f.sqrt()
    assert np.allclose((s * s).coeffs, f.coeffs, atol=1e-12)


def test_exp_against_cauchy_coefficients():
    z0 = 0.3 - 0.4j
    j = gaussian_cf_jet(-0.1, 0.4, z0, D)
    ref = taylor_fd(lambda z: np.exp(-0.1j * z - 0.08 * z * z), z0, D)
    assert np.allclose(j.coeffs, ref, atol=1e-12)


def test_derivative_and_evaluation():
    z0 = 0.5 + 0.1j
    f = pj([1.0, 2.0, -1.0, 0.5], z0)
    assert np.allclose(f.derivative().coeffs[:3], pj([2.0, -2.0, 1.5], z0).coeffs[:3])
    dz = 0.01
    assert abs(f(dz) - np.polynomial.polynomial.polyval(z0 + dz, [1.0, 2.0, -1.0, 0.5])) < 1e-13


def test_nig_jet_matches_symbol_and_branch_guard():
    z0 = np.array([0.3 + 0.5j, -1.0 + 0.0j])
    j = nig_unit_jump_jet(40.0, -10.0, z0, 4)
    assert np.allclose(j.value(), nig_unit_jump(40.0, -10.0, z0))
    ref = taylor_fd(lambda z: nig_unit_jump(40.0, -10.0, z), z0[0], 4)
    assert np.allclose(j.coeffs[:, 0], ref, atol=1e-10)
    with pytest.raises(BranchError):
        nig_unit_jump_jet(1.0, 0.0, np.array([1j]), 2)


def test_mismatched_jets_raise():
    a = Jet.variable(0.0, 3)
    with pytest.raises(JetError):
        a * Jet.variable(1.0, 3)
    with pytest.raises(JetError):
        a + Jet.variable(0.0, 2)
    with pytest.raises(JetError):
        Jet.constant(1.0, 0.0, 0).derivative()


def test_batched_jets_broadcast():
    z = np.linspace(-1, 1, 5) + 0.2j
    X = Jet.variable(z, 3)
    scal = np.arange(5.0)
    out = X * scal + scal
    assert out.batch_shape == (5,)
    assert np.allclose(out.value(), z * scal + scal)
    assert math.isclose(abs(out.coeffs[1, 3]), 3.0)
