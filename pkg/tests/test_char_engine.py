import math

import numpy as np
import pytest

from levyx import analytics, models
from levyx.char_engine import CharApprox, index_sets
from levyx.errors import DomainError
from levyx.expansion import expand_hermite, expand_taylor, expand_time_taylor

XI = np.array([0.0, -1j, 0.5 - 0.5j, 3.0 + 0.2j, -7.0 + 0.5j])


def test_index_sets_are_compositions():
    for n in range(1, 8):
        sets = index_sets(n)
        assert sum(len(v) for v in sets.values()) == 2 ** (n - 1)
        for h, comps in sets.items():
            assert all(len(c) == h and sum(c) == n and min(c) >= 1 for c in comps)
            assert len(comps) == math.comb(n - 1, h - 1)
    assert index_sets(3)[2] == [(1, 2), (2, 1)]
    with pytest.raises(DomainError):
        index_sets(0)


def test_order0_matches_black_scholes_cf():
    ch = CharApprox(expand_taylor(models.flat(sigma=0.3), 0.0, 0), 0)
    tau, x = 0.7, 0.2
    ref = np.exp(1j * XI * x + tau * (-(XI**2 + 1j * XI) * 0.045))
    assert np.allclose(ch.phat_total(0.0, x, tau, XI), ref, atol=1e-14)


def test_constant_model_corrections_vanish():
    ch = CharApprox(expand_taylor(models.flat(sigma=0.2, gamma=0.03, lam=0.4), 0.0, 3), 3)
    c = ch.corrections(0.0, 0.0, 1.0, XI)
    assert np.max(np.abs(c[1:])) < 1e-15


def test_jdcev_survival_closed_forms_single_point():
    p = analytics.JDCEVParams()
    m = models.jdcev()
    x, tau = 0.1, 2.0
    ch = CharApprox(expand_taylor(m, x, 2), 2)
    terms = ch.phat_terms(0.0, x, tau, np.array([0j]))[:, 0]
    ref = analytics.jdcev_expansion(p, 0.0, x, tau, 2)
    assert np.allclose(terms.real, ref, atol=1e-12, rtol=0)
    assert np.max(np.abs(terms.imag)) < 1e-15


def test_psi_inner_ordering_disagrees_with_closed_forms():
    m = models.jdcev()
    ch = CharApprox(expand_taylor(m, 0.0, 2), 2, ordering="psi_inner")
    u = ch.phat_terms(0.0, 0.0, 2.0, np.array([0j]))[:, 0].real
    ref = analytics.jdcev_expansion(analytics.JDCEVParams(), 0.0, 0.0, 2.0, 2)
    assert abs(u[2] - ref[2]) > 1e-6


@pytest.mark.parametrize("series", ["taylor", "time_taylor", "hermite"])
def test_martingale_and_normalization(series):
    m = models.cev_gauss()
    x = 0.15
    s = {"taylor": lambda: expand_taylor(m, x, 3),
         "time_taylor": lambda: expand_time_taylor(m, None, 3, x=x),
         "hermite": lambda: expand_hermite(m, x, 0.5, 3)}[series]()
    ch = CharApprox(s, 3)
    tot = ch.phat_terms(0.0, x, 1.0, np.array([0j, -1j])).sum(axis=0)
    assert abs(tot[0] - 1) < 1e-12
    assert abs(tot[1] - math.exp(x)) < 1e-8


def test_time_dependent_coefficients():
    """For a time-only model (a(t) = a0 (1 + t)) the order-0 term is exact."""
    from levyx.model import CallableCoefficient, ModelSpec
    a = CallableCoefficient(lambda t, x: 0.02 * (1 + t) + 0 * np.asarray(x, dtype=float),
                            derivatives=lambda k, t, x: 0.0)
    ch = CharApprox(expand_taylor(ModelSpec(a=a), 0.0, 2), 2)
    T = 1.5
    A = 0.02 * (T + T * T / 2)
    ref = np.exp(-(XI**2 + 1j * XI) * A)
    assert np.allclose(ch.phat_total(0.0, 0.0, T, XI), ref, atol=1e-13)


def test_validation_errors():
    s = expand_taylor(models.cev_gauss(), 0.0, 2)
    with pytest.raises(DomainError):
        CharApprox(s, 3)
    with pytest.raises(DomainError):
        CharApprox(s, 2).phat_total(1.0, 0.0, 1.0, XI)
    with pytest.raises(ValueError):
        CharApprox(s, 2, ordering="sideways")
