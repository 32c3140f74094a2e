import math

import numpy as np
import pytest

from levyx import models, monte_carlo as mc, pricer
from levyx.char_engine import CharApprox
from levyx.errors import DomainError
from levyx.expansion import expand_taylor


def test_flat_model_contains_black_scholes():
    e = mc.simulate_price(models.flat(sigma=0.2), pricer.payoff_transform("put", 1.0), 0.0, 0.0, 0.5,
                          mc.SimConfig(paths=10**6, seed=11))
    lo, hi = e.ci95
    assert lo <= 0.0563720 <= hi
    assert e.ci95 == (e.mean - 1.96 * e.stderr, e.mean + 1.96 * e.stderr)


def test_constant_killing_survival():
    tau = 0.5
    e = mc.simulate_price(models.flat(sigma=0.2, gamma=0.05), pricer.payoff_transform("constant"), 0.0, 0.0,
                          tau, mc.SimConfig(paths=400_000, steps_per_year=50, seed=2))
    lo, hi = e.ci95
    assert lo <= math.exp(-0.05 * tau) <= hi
    assert e.n_defaulted > 0


def test_martingale_preserved_under_discretization():
    m = models.cev_gauss(delta=0.2, beta=0.5, lam=0.2, m=-0.1, eta=0.2)
    e = mc.simulate_price(m, np.exp, 0.0, 0.0, 0.5, mc.SimConfig(paths=10**6, steps_per_year=500, seed=5))
    assert abs(e.mean - 1.0) < 3.0 * e.stderr
    d = e.diagnostics
    assert abs(d["acceptance_ratio"] / d["mean_lam_over_bound"] - 1.0) < 0.02


def test_seeded_runs_are_bit_reproducible(monkeypatch):
    m = models.cev_gauss()
    cfg = mc.SimConfig(paths=5000, steps_per_year=50, seed=123, block=1024)
    pay = pricer.payoff_transform("call", 1.0)
    monkeypatch.setenv("LEVYX_THREADS", "1")
    a = mc.simulate_price(m, pay, 0.0, 0.0, 0.5, cfg)
    monkeypatch.setenv("LEVYX_THREADS", "4")
    b = mc.simulate_price(m, pay, 0.0, 0.0, 0.5, cfg)
    assert (a.mean, a.stderr, a.diagnostics) == (b.mean, b.stderr, b.diagnostics)
    c = mc.simulate_price(m, pay, 0.0, 0.0, 0.5, mc.SimConfig(paths=5000, steps_per_year=50, seed=124, block=1024))
    assert c.mean != a.mean


def test_antithetic_reduces_variance():
    m, pay = models.flat(sigma=0.2), pricer.payoff_transform("call", 1.0)
    plain = mc.simulate_price(m, pay, 0.0, 0.0, 0.5, mc.SimConfig(paths=100_000, steps_per_year=20, seed=1))
    anti = mc.simulate_price(m, pay, 0.0, 0.0, 0.5,
                             mc.SimConfig(paths=100_000, steps_per_year=20, seed=1, antithetic=True))
    assert anti.stderr < 0.8 * plain.stderr
    assert abs(anti.mean - pricer.black_scholes("call", 1.0, 1.0, 0.5, 0.2)) < 4 * anti.stderr


def test_lambda_max_validation_and_excursions():
    m = models.cev_gauss()
    pay = pricer.payoff_transform("put", 1.0)
    with pytest.raises(DomainError):
        mc.simulate_price(m, pay, 0.0, 0.0, 0.5, mc.SimConfig(paths=100, lambda_max=0.01))
    # a narrow domain makes paths leave the lattice; their bounds are doubled
    narrow = models.cev_gauss(domain=((0.0, 1.0), (-0.01, 0.01)))
    e = mc.simulate_price(narrow, pay, 0.0, 0.0, 0.5, mc.SimConfig(paths=2000, steps_per_year=50, seed=1))
    assert e.diagnostics["bound_doublings"] > 0


def test_nig_constant_scale_matches_fourier():
    m = models.nig_cev(gamma=1.0)  # scale delta0 e^0: a Levy process, exact per step
    ch = CharApprox(expand_taylor(m, 0.0, 0), 0)
    Ks = [0.9, 1.0, 1.1]
    ref = [pricer.invert(ch, pricer.payoff_transform("put", K), 0.0, 0.0, 0.25).total for K in Ks]
    est = mc.simulate_nig_frozen(m, [pricer.payoff_transform("put", K) for K in Ks], 0.0, 0.0, 0.25,
                                 mc.SimConfig(paths=400_000, steps_per_year=40, seed=8))
    for r, e in zip(ref, est):
        assert e.ci95[0] <= r <= e.ci95[1]


def test_nig_step_halving_within_one_stderr():
    h = mc.step_halving(models.nig_cev(), pricer.payoff_transform("put", 1.0), 0.0, 0.0, 0.25,
                        mc.SimConfig(paths=10**6, seed=3))
    assert abs(h.fine.mean - h.coarse.mean) < h.coarse.stderr
    assert h.difference.stderr < 0.1 * h.coarse.stderr


def test_nig_simulator_rejects_gaussian_model():
    with pytest.raises(DomainError):
        mc.simulate_nig_frozen(models.cev_gauss(), pricer.payoff_transform("put", 1.0), 0, 0, 1, mc.SimConfig(paths=10))
    with pytest.raises(DomainError):
        mc.simulate_price(models.nig_cev(), pricer.payoff_transform("put", 1.0), 0, 0, 1, mc.SimConfig(paths=10))


def test_iv_band_maps_interval_monotonically():
    e = mc.MCEstimate(0.06, 0.001, 1000)
    lo, mid, hi = mc.iv_band(e, 1.0, 1.0, 0.5, "put")
    assert lo < mid < hi
    deep = mc.MCEstimate(0.351, 0.01, 1000)
    assert mc.iv_band(deep, 1.0, 1.35, 0.25, "put")[0] == 0.0
