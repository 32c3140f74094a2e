import math

import numpy as np
import pytest

from levyx import models
from levyx.expansion import (ExpansionScheme, expand, expand_hermite, expand_taylor, expand_time_taylor,
                             order0_mean_trajectory)
from levyx.model import generator_symbol
from levyx.quadrature import hermite_rule

XI = np.array([0.0, -1j, 0.7 + 0.3j, -2.0 - 0.5j])


def test_hermite_basis_orthonormal():
    for sig in (0.5, 1.0, 2.0):
        s = expand_hermite(models.poly_diffusion(), 0.1, sig, 6)
        y, w = hermite_rule(64)
        P = np.array([np.polynomial.polynomial.polyval(sig * y, p) for p in s.basis])
        G = (P * w) @ P.T
        assert np.max(np.abs(G - np.eye(7))) < 1e-10


@pytest.mark.parametrize("kind", ["taylor", "hermite"])
def test_polynomial_model_reconstructed_exactly(kind):
    m = models.poly_diffusion((0.02, 0.005, 0.002))
    s = expand_taylor(m, 0.1, 2) if kind == "taylor" else expand_hermite(m, 0.1, 0.7, 3)
    for x in (-1.0, 0.1, 0.9):
        exact = generator_symbol(m, 0.0, x, XI)
        assert np.max(np.abs(s.symbol_truncated(0.0, x, XI) - exact)) < 1e-10


def test_taylor_truncation_error_order():
    m = models.cev_gauss()
    s = expand_taylor(m, 0.0, 4)
    errs = []
    for h in (0.1, 0.05):
        exact = generator_symbol(m, 0.0, h, XI)
        errs.append(np.max(np.abs(s.symbol_truncated(0.0, h, XI, upto=2) - exact)))
    # error of the quadratic truncation is O(h^3)
    assert 6.0 < errs[0] / errs[1] < 10.0


def test_order0_is_frozen_symbol():
    m = models.jdcev()
    s = expand_taylor(m, 0.3, 2)
    sl = s.at(0.0, XI, 1)
    assert np.allclose(sl.phi0.value(), generator_symbol(m, 0.0, 0.3, XI))
    assert math.isclose(sl.gamma0, float(m.gamma(0, 0.3)))


def test_time_taylor_trajectory_and_dispatch():
    m = models.cev_gauss()
    traj = order0_mean_trajectory(m, 0.0)
    drift = -float(m.a(0, 0.0)) - float(m.jumps.compensator(0, 0.0))
    assert abs(traj(0.5) - 0.5 * drift) < 1e-14
    s = expand_time_taylor(m, None, 2, x=0.0)
    assert not s.time_homogeneous and abs(s.xbar(1.0) - drift) < 1e-14
    assert expand(m, ExpansionScheme("hermite", order=2), 0.0).kind == "hermite"
    assert expand(m, ExpansionScheme("taylor", center=0.2), 0.0).xbar(0) == 0.2


def test_hermite_projection_converges_and_records_nodes():
    s = expand_hermite(models.cev_gauss(), 0.0, 0.5, 3)
    s.at(0.0, XI, 2)
    assert s.diagnostics["hermite_nodes"] in (64, 128, 256)
    assert not s.diagnostics["hermite_clamped"]


def test_bad_scheme_rejected():
    with pytest.raises(ValueError):
        ExpansionScheme("chebyshev")
    with pytest.raises(ValueError):
        ExpansionScheme("hermite", weight_std=0.0)
