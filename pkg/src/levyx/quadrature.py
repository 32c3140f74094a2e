"""Quadrature rules shared by the expansion and pricing modules."""

from __future__ import annotations

import functools

import numpy as np
from numpy.polynomial import hermite_e, legendre


@functools.lru_cache(maxsize=64)
def _legendre_ref(Q):
    u, w = legendre.leggauss(Q)
    # I[q, r] = int_{-1}^{u_q} l_r(v) dv with l_r the Lagrange basis on the nodes
    V = legendre.legvander(u, Q - 1)
    Vinv = np.linalg.inv(V)
    Iref = np.empty((Q, Q))
    for r in range(Q):
        anti = legendre.legint(Vinv[:, r], lbnd=-1.0)
        Iref[:, r] = legendre.legval(u, anti)
    return u, w, Iref


def gauss_legendre(a, b, Q):
    """Nodes and weights of the Q-point Gauss-Legendre rule on [a, b]."""
    u, w, _ = _legendre_ref(Q)
    half = 0.5 * (b - a)
    return a + half * (u + 1.0), half * w


def simplex_rule(a, b, Q):
    """Gauss-Legendre nodes/weights on [a, b] plus the indefinite-integration matrix.

    ``I @ f(nodes)`` approximates ``int_a^{node_q} f`` at every node, exactly
    when ``f`` is a polynomial of degree < Q.  Iterating it evaluates the
    nested integrals over the time simplex ``a < s_1 < ... < s_h < b``.
    """
    u, w, Iref = _legendre_ref(Q)
    half = 0.5 * (b - a)
    return a + half * (u + 1.0), half * w, half * Iref


@functools.lru_cache(maxsize=16)
def hermite_rule(n):
    """Probabilists' Gauss-Hermite nodes and weights normalized to a probability."""
    y, w = hermite_e.hermegauss(n)
    return y, w / np.sqrt(2.0 * np.pi)


def composite_legendre(lo, hi, panels, per_panel=16):
    """Composite Gauss-Legendre rule on [lo, hi]."""
    u, w, _ = _legendre_ref(per_panel)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * u[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
