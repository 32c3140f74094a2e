"""Approximate characteristic functions.

For an expansion ``(P_n, psi_n)`` of the generator, the n-th order term of
the characteristic function is ``phat_n = phat_0 * c_n`` where ``phat_0`` is
the characteristic function of the order-0 (additive) process and

    c_n = e^{-ix xi} sum_h  int_{t < s_1 < ... < s_h < T}
              sum_{i in I_{n,h}} G_{i_h}(s_h) ... G_{i_1}(s_1) e^{ix xi}.

Each ``G_j(s)`` multiplies by ``psi_j(s, xi)`` and applies the polynomial
``P_j(M - xbar(s))`` of the operator ``M = x + F(xi, t, s) - i d/dxi`` to
the state.  States are held as ``e^{ix xi} R(xi)`` with ``R`` a xi-jet, so
``(M - xbar) R = (F + x - xbar) R - i R'``; every application of ``M``
consumes one jet order.

The nested time integrals are evaluated through the recursion

    V_0 = 1,   V_n(s) = sum_{j=1..n} int_t^s G_j(r)[V_{n-j}(r)] dr,

with all ``V_n`` sampled at the Gauss-Legendre nodes of ``[t, T]`` and the
indefinite integrals taken with the spectral integration matrix of
:func:`levyx.quadrature.simplex_rule`.  This is exact whenever the
integrands are polynomials of degree < Q in time, which covers
time-homogeneous Taylor expansions up to order ``(Q - 1) // 2``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegrationError, JetError
from .expansion import CoefficientSeries
from .jets import Jet
from .quadrature import gauss_legendre, simplex_rule

MAX_ORDER = 6
DEFAULT_Q = 16
ORDERINGS = ("psi_outer", "psi_inner")
_CHUNK = 1024


def index_sets(n):
    """``{h: [compositions of n into h positive parts]}``."""
    if not 1 <= n <= 12:
        raise DomainError(f"index sets are supported for 1 <= n <= 12, got {n}")
    out = {h: [] for h in range(1, n + 1)}
    # a composition is fixed by the set of cut points in 1..n-1
    for r in range(n):
        for cuts in itertools.combinations(range(1, n), r):
            edges = (0,) + cuts + (n,)
            out[r + 1].append(tuple(b - a for a, b in zip(edges, edges[1:])))
    for h in out:
        out[h].sort()
    return out


class Order0Exponent:
    """Time integrals of the order-0 symbol between ``t`` and ``s``.

    ``Phi(s) = i xi mv - Cv xi^2 / 2 + Psi - kill`` and ``F = -i dPhi/dxi``.
    """

    def __init__(self, series: CoefficientSeries, t, Q=DEFAULT_Q):
        self.series = series
        self.t = float(t)
        self.Q = Q

    def _rule(self, s):
        if s < self.t:
            raise DomainError("s must not precede t")
        return gauss_legendre(self.t, s, self.Q)

    def _integrate(self, s, f):
        if s == self.t:
            return 0.0
        nodes, weights = self._rule(s)
        return float(np.dot(weights, [f(self.series.at(r, 0.0, 0)) for r in nodes]))

    def mv(self, s):
        return self._integrate(s, lambda sl: sl.gamma0 - sl.a0 - sl.kappa0)

    def Cv(self, s):
        return 2.0 * self._integrate(s, lambda sl: sl.a0)

    def kill(self, s):
        return self._integrate(s, lambda sl: sl.gamma0)

    def Phi(self, s, xi, D=0):
        xi = np.asarray(xi, dtype=complex)
        if s == self.t:
            return Jet.constant(0.0, xi, D)
        nodes, weights = self._rule(s)
        acc = None
        for r, w in zip(nodes, weights):
            term = self.series.at(r, xi, max(D - 1, 0)).phi0.truncate(D) * w
            acc = term if acc is None else acc + term
        return acc

    def Psi(self, s, xi, D=0):
        X = Jet.variable(np.asarray(xi, dtype=complex), D)
        return self.Phi(s, xi, D) - X * (1j * self.mv(s)) + (X * X) * (0.5 * self.Cv(s)) + self.kill(s)

    def F(self, s, xi, D=0):
        return self.Phi(s, xi, D + 1).derivative() * (-1j)


def build_order0(series: CoefficientSeries, t, T, Q=DEFAULT_Q) -> Order0Exponent:
    if not T > t:
        raise DomainError(f"maturity T={T} must exceed t={t}")
    return Order0Exponent(series, t, Q)


def _apply_M(R, F, shift):
    """``(M - xbar) R`` for a state jet ``R`` (order drops by one)."""
    r = R.order
    if r == 0:
        raise JetError("jet budget exhausted applying M")
    return (F.truncate(r - 1) + shift) * R.truncate(r - 1) - R.derivative() * 1j


def _apply_poly(poly, R, F, shift):
    d = len(poly) - 1
    out_order = R.order - d
    if out_order < 0:
        raise JetError("jet budget exhausted applying the basis polynomial")
    acc = R.truncate(out_order) * poly[0]
    cur = R
    for k in range(1, d + 1):
        cur = _apply_M(cur, F, shift)
        if poly[k] != 0:
            acc = acc + cur.truncate(out_order) * poly[k]
    return acc


def apply_Ghat(psi, poly, F, shift, state, ordering="psi_outer"):
    """One factor ``G_i(t, s)`` applied to ``state`` (all arguments are jets/arrays at one s).

    ``psi`` is the xi-jet of ``psi_i(s, .)``, ``poly`` the coefficients of
    ``P_i`` in ``(x - xbar)``, ``F`` the jet of ``F(., t, s)`` and ``shift``
    the scalar ``x - xbar(s)``.
    """
    if ordering == "psi_outer":
        out = _apply_poly(poly, state, F, shift)
        return psi.truncate(out.order) * out
    if ordering == "psi_inner":
        inner = psi.truncate(state.order) * state
        return _apply_poly(poly, inner, F, shift)
    raise ValueError(f"unknown ordering {ordering!r}")


def _trim(poly):
    poly = np.asarray(poly, dtype=float)
    nz = np.nonzero(poly)[0]
    return poly[: nz[-1] + 1] if len(nz) else poly[:1]


class CharApprox:
    """Approximate characteristic function ``sum_n phat_0 c_n`` of an expansion."""

    def __init__(self, series: CoefficientSeries, N=None, Q=DEFAULT_Q, ordering="psi_outer"):
        N = series.N if N is None else int(N)
        if not 0 <= N <= min(series.N, MAX_ORDER):
            raise DomainError(f"order N={N} must be in 0..{min(series.N, MAX_ORDER)}")
        if ordering not in ORDERINGS:
            raise ValueError(f"unknown ordering {ordering!r}")
        self.series = series
        self.N = N
        self.Q = int(Q)
        self.ordering = ordering
        self.basis = [_trim(p) for p in series.basis]
        for n, p in enumerate(self.basis):
            if len(p) - 1 > n:
                raise DomainError("basis polynomial P_n must have degree <= n")

    @property
    def model(self):
        return self.series.model

    def exponent(self, t, T):
        return build_order0(self.series, t, T, self.Q)

    def check_contour(self, xi):
        if self.model.jumps is not None:
            self.model.jumps.check_contour(xi)

    # -- core evaluation ------------------------------------------------------
    def _slices(self, nodes, cen, D):
        """Per-node expansion data stacked along axis 1 of the jet coefficients."""
        series = self.series
        if series.time_homogeneous:
            sl = series.at(nodes[0], cen, D)
            xbar = np.full(len(nodes), sl.xbar)
            return sl.phi0.coeffs, [p.coeffs for p in sl.psi], xbar
        sls = [series.at(s, cen, D) for s in nodes]
        phi0 = np.concatenate([sl.phi0.coeffs for sl in sls], axis=1)
        psi = [np.concatenate([sl.psi[n].coeffs for sl in sls], axis=1) for n in range(series.N + 1)]
        return phi0, psi, np.array([sl.xbar for sl in sls])

    def _evaluate_chunk(self, t, x, T, xi):
        N, Q = self.N, self.Q
        cen = xi[None, :]  # jets carry batch (Q, n_xi)
        D = N
        nodes, weights, Imat = simplex_rule(t, T, Q)
        phi0, psi, xbar = self._slices(nodes, cen, D)
        phi0 = np.broadcast_to(phi0, (D + 2, Q, xi.size))
        Phi_T = np.einsum("r,kr...->k...", weights, phi0)[0]
        log_phat0 = 1j * xi * x + Phi_T
        out = np.zeros((N + 1, xi.size), dtype=complex)
        out[0] = 1.0
        if N == 0:
            return log_phat0, out
        Phi_nodes = Jet(cen, np.einsum("qr,kr...->kq...", Imat, phi0))
        F = Phi_nodes.derivative() * (-1j)
        shift = (x - xbar)[:, None]
        psi_jets = [Jet(cen, c) for c in psi]
        V = [Jet.constant(np.ones((Q, xi.size)), cen, D)]
        for n in range(1, N + 1):
            acc = None
            for j in range(1, n + 1):
                G = apply_Ghat(psi_jets[j], self.basis[j], F, shift,
                               V[n - j].truncate(D - n + j), self.ordering)
                G = G.truncate(D - n)
                acc = G.coeffs if acc is None else acc + G.coeffs
            acc = np.broadcast_to(acc, (D - n + 1, Q, xi.size))
            out[n] = weights @ acc[0]
            V.append(Jet(cen, np.einsum("qr,kr...->kq...", Imat, acc)))
        if not np.all(np.isfinite(out)):
            raise IntegrationError("non-finite correction values in the time integration")
        return log_phat0, out

    def _evaluate(self, t, x, T, xi):
        if not T > t:
            raise DomainError(f"maturity T={T} must exceed t={t}")
        xi = np.asarray(xi, dtype=complex)
        shape = xi.shape
        flat = xi.ravel()
        self.check_contour(flat)
        logs, cs = [], []
        for k in range(0, max(flat.size, 1), _CHUNK):
            lp, c = self._evaluate_chunk(float(t), float(x), float(T), flat[k:k + _CHUNK])
            logs.append(lp)
            cs.append(c)
        log_phat0 = np.concatenate(logs).reshape(shape)
        corr = np.concatenate(cs, axis=1).reshape((self.N + 1,) + shape)
        return log_phat0, corr

    # -- public API -------------------------------------------------------------
    def log_phat0(self, t, x, T, xi):
        return CharApprox(self.series, 0, self.Q)._evaluate(t, x, T, xi)[0]

    def phat0(self, t, x, T, xi):
        return np.exp(self.log_phat0(t, x, T, xi))

    def corrections(self, t, x, T, xi):
        """``c_0..c_N`` stacked along the first axis (``c_0 = 1``)."""
        return self._evaluate(t, x, T, xi)[1]

    def correction(self, n, t, x, T, xi):
        if not 0 <= n <= self.N:
            raise DomainError(f"correction order {n} outside 0..{self.N}")
        return self.corrections(t, x, T, xi)[n]

    def phat_terms(self, t, x, T, xi):
        """``phat_0..phat_N`` stacked along the first axis."""
        lp, c = self._evaluate(t, x, T, xi)
        return np.exp(lp)[None, ...] * c

    def phat(self, n, t, x, T, xi):
        return self.phat_terms(t, x, T, xi)[n]

    def phat_total(self, t, x, T, xi):
        return self.phat_terms(t, x, T, xi).sum(axis=0)


def correction(series, n, t, x, T, xi, Q=DEFAULT_Q):
    return CharApprox(series, n, Q).correction(n, t, x, T, xi)


def phat(series, n, t, x, T, xi, Q=DEFAULT_Q):
    return CharApprox(series, n, Q).phat(n, t, x, T, xi)
