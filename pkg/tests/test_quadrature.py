import math

import numpy as np

from levyx.quadrature import composite_legendre, gauss_legendre, hermite_rule, simplex_rule


def test_gauss_legendre_exactness():
    x, w = gauss_legendre(0.5, 2.0, 8)
    assert abs(np.dot(w, x**15) - (2.0**16 - 0.5**16) / 16) < 1e-11


def test_simplex_rule_nested_integrals():
    a, b, Q = 0.0, 1.5, 16
    x, w, I = simplex_rule(a, b, Q)
    # int_a^b int_a^{s2} int_a^{s1} 1 = (b-a)^3 / 3!
    v = np.ones(Q)
    for _ in range(2):
        v = I @ v
    assert abs(np.dot(w, v) - (b - a) ** 3 / 6) < 1e-14
    assert np.allclose(I @ (x**3), (x**4 - a**4) / 4, atol=1e-13)


def test_hermite_rule_moments():
    y, w = hermite_rule(32)
    assert abs(w.sum() - 1) < 1e-14
    assert abs(np.dot(w, y**4) - 3.0) < 1e-12
    assert abs(np.dot(w, np.exp(0.3 * y)) - math.exp(0.045)) < 1e-14


def test_composite_rule():
    x, w = composite_legendre(-1.0, 3.0, 7)
    assert abs(np.dot(w, np.sin(x)) - (math.cos(-1.0) - math.cos(3.0))) < 1e-14
