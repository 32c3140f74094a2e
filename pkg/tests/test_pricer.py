import math

import numpy as np
import pytest

from levyx import analytics, models, pricer
from levyx.char_engine import CharApprox
from levyx.errors import ArbitrageError, ContourError, DomainError
from levyx.expansion import expand_taylor


@pytest.fixture(scope="module")
def cev3():
    return CharApprox(expand_taylor(models.cev_gauss(), 0.0, 3), 3)


def test_black_scholes_put_oracle():
    ch = CharApprox(expand_taylor(models.flat(sigma=0.2), 0.0, 2), 2)
    for kind, K in (("put", 1.0), ("call", 1.1), ("put", 0.8)):
        r = pricer.invert(ch, pricer.payoff_transform(kind, K), 0.0, 0.0, 0.5)
        assert abs(r.total - pricer.black_scholes(kind, 1.0, K, 0.5, 0.2)) < 1e-10
    assert abs(pricer.black_scholes("put", 1.0, 1.0, 0.5, 0.2) - 0.0563720) < 5e-8


def test_digital_against_normal_cdf():
    ch = CharApprox(expand_taylor(models.flat(sigma=0.25), 0.0, 0), 0)
    K, tau = 1.05, 0.8
    r = pricer.invert(ch, pricer.payoff_transform("digital", K), 0.0, 0.0, tau)
    sd = 0.25 * math.sqrt(tau)
    from scipy.stats import norm
    assert abs(r.total - norm.cdf((math.log(K) + 0.5 * sd * sd) / sd)) < 1e-10


def test_put_call_parity_order_by_order(cev3):
    for K in (0.7, 1.0, 1.3):
        c = pricer.invert(cev3, pricer.payoff_transform("call", K), 0.0, 0.0, 1.0).cumulative
        p = pricer.invert(cev3, pricer.payoff_transform("put", K), 0.0, 0.0, 1.0).cumulative
        assert np.max(np.abs(c - p - (1.0 - K))) < 1e-8


def test_contour_invariance(cev3):
    for kind, omegas in (("put", (0.3, 0.5, 1.5)), ("call", (-1.3, -1.5, -2.5))):
        vals = [pricer.invert(cev3, pricer.payoff_transform(kind, 0.9, omega=w), 0.0, 0.0, 1.0).per_order
                for w in omegas]
        assert np.max(np.abs(vals[0] - vals[1])) < 1e-8
        assert np.max(np.abs(vals[2] - vals[1])) < 1e-8


def test_wrong_half_plane_rejected():
    with pytest.raises(ContourError):
        pricer.payoff_transform("put", 1.0, omega=-0.5)
    with pytest.raises(ContourError):
        pricer.payoff_transform("call", 1.0, omega=-0.5)
    with pytest.raises(DomainError):
        pricer.payoff_transform("straddle", 1.0)


def test_order0_density_equals_compound_poisson():
    m = models.cev_gauss()
    ch = CharApprox(expand_taylor(m, 0.2, 0), 0)
    y = np.linspace(-1.5, 1.5, 201)
    d = pricer.density(ch, 0.0, 0.2, 1.0, y)
    ref = analytics.cp_density(analytics.cp_params_from_model(m, 0.2), 0.0, 0.2, 1.0, y)
    assert np.max(np.abs(d.total - ref)) < 1e-8


def test_defective_density_integrates_to_survival():
    m = models.jdcev()
    ch = CharApprox(expand_taylor(m, 0.0, 2), 2)
    tau = 2.0
    y = np.linspace(-6.0, 4.0, 4001)
    d = pricer.density(ch, 0.0, 0.0, tau, y)
    mass = np.trapezoid(d.per_order, y, axis=1)
    surv = pricer.survival(ch, 0.0, 0.0, tau).per_order
    assert np.max(np.abs(mass - surv)) < 1e-10
    assert surv[0] < 1.0


def test_defaultable_price_adds_recovery():
    m = models.flat(sigma=0.2, gamma=0.05)
    ch = CharApprox(expand_taylor(m, 0.0, 0), 0)
    r = pricer.defaultable_price(ch, pricer.payoff_transform("put", 1.0), 0.0, 0.0, 1.0)
    # with constant killing the surviving law is BS with drift gamma
    S = math.exp(-0.05)
    bs = pricer.black_scholes("put", math.exp(0.05), 1.0, 1.0, 0.2)
    assert abs(r.total - (S * bs + 1.0 * (1 - S))) < 1e-10


def test_implied_vol_roundtrip_and_bounds():
    for kind, K, s in (("put", 0.8, 0.35), ("call", 1.2, 0.15), ("put", 1.0, 0.05)):
        v = pricer.black_scholes(kind, 1.0, K, 0.5, s)
        assert abs(pricer.implied_vol(v, 1.0, K, 0.5, kind) - s) < 1e-10
    with pytest.raises(ArbitrageError):
        pricer.implied_vol(0.15, 1.0, 1.2, 0.5, "put")
    with pytest.raises(ArbitrageError):
        pricer.implied_vol(1.0, 1.0, 1.2, 0.5, "call")


def test_smile_flat_model_is_flat():
    ch = CharApprox(expand_taylor(models.flat(sigma=0.22), 0.0, 1), 1)
    sm = pricer.smile(ch, [0.8, 1.0, 1.25], 0.0, 0.0, 0.5, "put")
    assert np.max(np.abs(sm.iv - 0.22)) < 1e-9
    assert np.allclose(sm.k, np.log([0.8, 1.0, 1.25]))
