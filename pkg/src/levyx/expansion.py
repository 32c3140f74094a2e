"""Polynomial expansions of the generator.

An N-th order expansion is a list of pairs ``(P_n, psi_n)``: a basis
polynomial ``P_n`` in ``y = x - xbar`` and a frozen symbol coefficient
``psi_n(t, xi)``, such that

    phi(t, x, xi) ~ sum_n P_n(x - xbar) psi_n(t, xi).

``P_0 = 1`` always, so the order-0 pieces ``(a_0, gamma_0, chi_0)`` do not
depend on x and generate an additive process.  Taylor uses monomials,
Hermite the orthonormal Hermite polynomials of a Gaussian weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import hermite_e

from .errors import ExpansionError
from .jets import Jet
from .model import ModelSpec
from .quadrature import gauss_legendre, hermite_rule

SCHEMES = ("taylor", "time_taylor", "hermite")


@dataclass(frozen=True)
class ExpansionScheme:
    kind: str = "taylor"
    center: Optional[float] = None  # None means "spot"
    order: int = 2
    weight_std: float = 1.0

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ValueError(f"unknown expansion scheme {self.kind!r}")
        if self.weight_std <= 0:
            raise ValueError("weight_std must be positive")


@dataclass
class SeriesSlice:
    """All expansion data at one time ``s`` for one batch of jet centers."""

    s: float
    xbar: float
    a0: float
    gamma0: float
    kappa0: float  # order-0 compensator chi_0(-i)
    phi0: Jet  # order-0 symbol, jet order D + 1
    psi: list  # psi[n], n = 0..N, jet order D
    basis: list  # basis[n]: polynomial coefficients in (x - xbar)


def _symbol_jet(a, g, kap, chi, X):
    """``-(X^2 + iX) a + (iX - 1) g - iX kap + chi`` with scalar/array a, g, kap."""
    X2 = X * X
    return X2 * (-a) + X * (-1j * a) + X * (1j * g) - g + X * (-1j * kap) + chi


class CoefficientSeries:
    """Lazy N-th order expansion of a model's generator symbol."""

    def __init__(self, model: ModelSpec, N: int, kind: str, center_fn: Callable,
                 weight_std: float = 1.0):
        if N < 0:
            raise ExpansionError("expansion order must be >= 0")
        self.model = model
        self.N = int(N)
        self.kind = kind
        self.center_fn = center_fn
        self.weight_std = float(weight_std)
        self.diagnostics = {
            "fd_fallback": not all(
                getattr(f, "exact_derivatives", True) for f in self._coefficient_fns()
            ),
            "hermite_clamped": False,
            "hermite_nodes": None,
        }
        if kind == "hermite":
            self.basis = [self._hermite_basis(n) for n in range(self.N + 1)]
        else:
            self.basis = [np.eye(n + 1)[n] for n in range(self.N + 1)]

    def _coefficient_fns(self):
        fns = [self.model.a, self.model.gamma]
        j = self.model.jumps
        if j is not None:
            fns += [getattr(j, k) for k in ("lam", "m", "delta", "scale") if hasattr(j, k)]
        return fns

    @property
    def time_homogeneous(self):
        return self.model.time_homogeneous and self.kind != "time_taylor"

    @property
    def basis_degrees(self):
        return [len(np.trim_zeros(p, "b")) - 1 if np.any(p) else 0 for p in self.basis]

    def xbar(self, s):
        return float(self.center_fn(s))

    # -- Hermite helpers ------------------------------------------------------
    def _hermite_basis(self, n):
        """Coefficients in powers of y of ``He_n(y / sigma) / sqrt(n!)``."""
        c = hermite_e.herme2poly(np.eye(n + 1)[n])
        return c / self.weight_std ** np.arange(n + 1) / math.sqrt(math.factorial(n))

    # -- evaluation ------------------------------------------------------------
    def at(self, s, center, D):
        center = np.asarray(center, dtype=complex)
        if self.kind == "hermite":
            return self._at_hermite(s, center, D)
        return self._at_taylor(s, center, D)

    def _at_taylor(self, s, center, D):
        m, N = self.model, self.N
        xb = self.xbar(s)
        a = m.a.taylor(s, xb, N)
        g = m.gamma.taylor(s, xb, N)
        X = Jet.variable(center, D + 1)
        if m.jumps is not None:
            chis = m.jumps.chi_series(s, xb, center, N, D + 1)
            kap = [float(np.real(c.value())) for c in m.jumps.chi_series(s, xb, -1j, N, 0)]
        else:
            chis = [Jet.constant(0.0, center, D + 1)] * (N + 1)
            kap = [0.0] * (N + 1)
        syms = [_symbol_jet(a[n], g[n], kap[n], chis[n], X) for n in range(N + 1)]
        return SeriesSlice(
            s=s, xbar=xb, a0=float(a[0]), gamma0=float(g[0]), kappa0=kap[0], phi0=syms[0],
            psi=[j.truncate(D) for j in syms], basis=self.basis,
        )

    def _project(self, s, center, D, nodes):
        m, N, sig = self.model, self.N, self.weight_std
        xb = self.xbar(s)
        y, w = hermite_rule(nodes)
        xq = xb + sig * y
        a = np.asarray(m.a(s, xq), dtype=float) * np.ones_like(xq)
        g = np.asarray(m.gamma(s, xq), dtype=float) * np.ones_like(xq)
        bshape = (nodes,) + (1,) * center.ndim
        X = Jet.variable(center, D + 1)
        if m.jumps is not None:
            kap = np.asarray(m.jumps.compensator(s, xq), dtype=float) * np.ones_like(xq)
            chi = m.jumps.chi_jet(s, xq.reshape(bshape), center, D + 1)
        else:
            kap = np.zeros_like(xq)
            chi = Jet.constant(0.0, center, D + 1)
        full = _symbol_jet(a.reshape(bshape), g.reshape(bshape), kap.reshape(bshape), chi, X)
        He = hermite_e.hermevander(y, N) / np.sqrt(
            [math.factorial(n) for n in range(N + 1)]
        )  # (nodes, N+1)
        coeffs = np.broadcast_to(full.coeffs, (D + 2, nodes) + center.shape)
        proj = np.einsum("kq...,qn->nk...", coeffs, He * w[:, None])
        lam0 = None
        if m.jumps is not None and hasattr(m.jumps, "lam"):
            lam0 = float(np.dot(w, np.asarray(m.jumps.lam(s, xq)) * np.ones_like(xq)))
        return proj, lam0

    def _at_hermite(self, s, center, D):
        prev = None
        for nodes in (32, 64, 128, 256):
            proj, lam0 = self._project(s, center, D, nodes)
            if prev is not None:
                scale = max(1.0, float(np.max(np.abs(proj))))
                if np.max(np.abs(proj - prev)) <= 1e-10 * scale:
                    break
            prev = proj
        else:
            raise ExpansionError("Hermite projections did not converge with 256 nodes")
        self.diagnostics["hermite_nodes"] = nodes
        m = self.model
        sig = self.weight_std
        xb = self.xbar(s)
        y, w = hermite_rule(nodes)
        xq = xb + sig * y
        a0 = float(np.dot(w, np.asarray(m.a(s, xq)) * np.ones_like(xq)))
        g0 = float(np.dot(w, np.asarray(m.gamma(s, xq)) * np.ones_like(xq)))
        kap0 = 0.0
        if m.jumps is not None:
            kap0 = float(np.dot(w, np.asarray(m.jumps.compensator(s, xq)) * np.ones_like(xq)))
        phi0 = Jet(center, proj[0])
        if lam0 is not None and lam0 < 0.0:
            # order-0 jump measure must be nonnegative; drop it and record the clamp
            self.diagnostics["hermite_clamped"] = True
            X = Jet.variable(center, D + 1)
            phi0 = _symbol_jet(a0, g0, 0.0, Jet.constant(0.0, center, D + 1), X)
            kap0 = 0.0
        psi = [Jet(center, proj[n, : D + 1]) for n in range(self.N + 1)]
        psi[0] = phi0.truncate(D)
        return SeriesSlice(s=s, xbar=xb, a0=a0, gamma0=g0, kappa0=kap0, phi0=phi0,
                           psi=psi, basis=self.basis)

    # -- diagnostics --------------------------------------------------------------
    def symbol_truncated(self, s, x, xi, upto=None):
        """``sum_{n <= upto} P_n(x - xbar) psi_n(s, xi)`` evaluated pointwise."""
        upto = self.N if upto is None else upto
        sl = self.at(s, np.asarray(xi, dtype=complex), 0)
        y = x - sl.xbar
        total = 0.0
        for n in range(upto + 1):
            total = total + np.polynomial.polynomial.polyval(y, self.basis[n]) * sl.psi[n].value()
        return total


def expand_taylor(model: ModelSpec, xbar: float, N: int) -> CoefficientSeries:
    xbar = float(xbar)
    return CoefficientSeries(model, N, "taylor", lambda s: xbar)


def order0_mean_trajectory(model: ModelSpec, x: float, t: float = 0.0, Q: int = 16):
    """``s -> x + m(t, s)`` with the order-0 drift of the Taylor expansion at ``x``."""
    comp = (lambda s: float(model.jumps.compensator(s, x))) if model.jumps is not None else (lambda s: 0.0)

    def traj(s):
        if s <= t:
            return float(x)
        nodes, weights = gauss_legendre(t, s, Q)
        drift = [float(model.gamma(r, x)) - float(model.a(r, x)) - comp(r) for r in nodes]
        return float(x) + float(np.dot(weights, drift))

    return traj


def expand_time_taylor(model: ModelSpec, traj: Optional[Callable], N: int,
                       x: Optional[float] = None, t: float = 0.0) -> CoefficientSeries:
    """Taylor expansion about a moving center ``traj(s)``.

    Without ``traj`` the center follows the order-0 mean ``x + m(t, s)``.
    """
    if traj is None:
        if x is None:
            raise ExpansionError("default trajectory needs the spot x")
        traj = order0_mean_trajectory(model, x, t)
    return CoefficientSeries(model, N, "time_taylor", traj)


def expand_hermite(model: ModelSpec, xbar: float, weight_std: float, N: int) -> CoefficientSeries:
    xbar = float(xbar)
    return CoefficientSeries(model, N, "hermite", lambda s: xbar, weight_std=weight_std)


def expand(model: ModelSpec, scheme: ExpansionScheme, x: float, t: float = 0.0) -> CoefficientSeries:
    """Build the series selected by ``scheme``; ``center=None`` means the spot ``x``."""
    xbar = x if scheme.center is None else scheme.center
    if scheme.kind == "taylor":
        return expand_taylor(model, xbar, scheme.order)
    if scheme.kind == "time_taylor":
        return expand_time_taylor(model, None, scheme.order, x=xbar, t=t)
    return expand_hermite(model, xbar, scheme.weight_std, scheme.order)
