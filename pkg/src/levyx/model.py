"""Defaultable local Levy-type models.

A model is the triple (a, gamma, jumps) with ``a = sigma^2 / 2`` the
diffusion coefficient, ``gamma`` the default intensity and ``jumps`` either
a state-dependent Gaussian compound Poisson family, a closed-form Levy
symbol family (NIG-like), or ``None``.  The drift is never stored: it is
fixed by the martingale condition, see :func:`martingale_drift`.

The generator symbol used throughout is

    phi(t, x, xi) = -(xi^2 + i xi) a + (i xi - 1) gamma - i xi chi(-i) + chi(xi)

where ``chi(t, x, xi) = int (e^{i z xi} - 1 - i z xi) nu(t, x, dz)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContourError, EvaluationError
from .jets import Jet, gaussian_cf_jet, nig_strip, nig_unit_jump, nig_unit_jump_jet

_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Coefficient functions
# ---------------------------------------------------------------------------

class CoefficientFn:
    """A real coefficient ``f(t, x)`` with access to its x-Taylor coefficients.

    Subclasses implement ``__call__`` and ``taylor``; ``taylor(t, x, order)``
    returns ``[f, f', f''/2!, ...]`` at ``x`` (normalized coefficients).
    """

    time_homogeneous = True
    exact_derivatives = True
    #: (bounded below by a positive constant, bounded above) or None if unknown
    bounds_hint = None

    def __call__(self, t, x):
        raise NotImplementedError

    def taylor(self, t, x, order):
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(CoefficientFn):
    c: float

    def __call__(self, t, x):
        return np.full(np.shape(x), float(self.c)) if np.ndim(x) else float(self.c)

    def taylor(self, t, x, order):
        out = np.zeros(order + 1)
        out[0] = self.c
        return out

    @property
    def bounds_hint(self):
        return "bounded"


@dataclass(frozen=True)
class ExpCoefficient(CoefficientFn):
    """``offset + scale * exp(rate * x)``."""

    scale: float
    rate: float
    offset: float = 0.0

    def __call__(self, t, x):
        return self.offset + self.scale * np.exp(self.rate * np.asarray(x, dtype=float))

    def taylor(self, t, x, order):
        k = np.arange(order + 1)
        fact = np.array([math.factorial(int(i)) for i in k], dtype=float)
        out = self.scale * math.exp(self.rate * x) * self.rate**k / fact
        out[0] += self.offset
        return out

    @property
    def bounds_hint(self):
        if self.rate == 0 or self.scale == 0:
            return "bounded"
        # value grows without bound towards +inf when rate > 0, -inf when rate < 0
        return "unbounded as x->+inf" if self.rate > 0 else "unbounded as x->-inf"


@dataclass(frozen=True)
class Polynomial(CoefficientFn):
    """``sum_k coeffs[k] * x**k``."""

    coeffs: tuple

    def __call__(self, t, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coeffs)

    def taylor(self, t, x, order):
        p = np.polynomial.Polynomial(self.coeffs)
        out = np.zeros(order + 1)
        for k in range(order + 1):
            out[k] = p(x) / math.factorial(k)
            p = p.deriv()
        return out


def fd_taylor(f, x, order):
    """Normalized Taylor coefficients by central differences + one Richardson step.

    Step for derivative ``k`` is ``eps**(1/(k+2)) * max(1, |x|)``.
    """
    out = np.empty(order + 1)
    out[0] = f(x)
    for k in range(1, order + 1):
        h = _EPS ** (1.0 / (k + 2)) * max(1.0, abs(x))

        def central(step):
            # k-th central difference with unit spacing scaled by step
            j = np.arange(k + 1)
            w = np.array([(-1) ** int(i) * math.comb(k, int(i)) for i in j], dtype=float)
            pts = x + (k / 2.0 - j) * step
            return float(np.dot(w, [f(p) for p in pts])) / step**k

        d_h, d_h2 = central(h), central(h / 2)
        out[k] = (4.0 * d_h2 - d_h) / 3.0 / math.factorial(k)
    return out


@dataclass(frozen=True)
class CallableCoefficient(CoefficientFn):
    """Arbitrary ``fn(t, x)``; ``derivatives(k, t, x)`` optional (k-th x-derivative)."""

    fn: Callable
    derivatives: Optional[Callable] = None
    time_homogeneous: bool = False

    @property
    def exact_derivatives(self):
        return self.derivatives is not None

    def __call__(self, t, x):
        return self.fn(t, x)

    def taylor(self, t, x, order):
        if self.derivatives is None:
            return fd_taylor(lambda z: float(self.fn(t, z)), float(x), order)
        return np.array(
            [self.derivatives(k, t, x) / math.factorial(k) if k else self.fn(t, x)
             for k in range(order + 1)],
            dtype=float,
        )


def _taylor_product(p, q):
    n = len(p)
    return np.convolve(p, q)[:n]


# ---------------------------------------------------------------------------
# Jump families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianJumpFamily:
    """``nu(t, x, dz) = lam(t, x) * Normal(m(x), delta(x)^2)(dz)``."""

    lam: CoefficientFn
    m: CoefficientFn
    delta: CoefficientFn
    strip = (-math.inf, math.inf)

    @property
    def time_homogeneous(self):
        return self.lam.time_homogeneous

    def chi(self, t, x, xi):
        xi = np.asarray(xi, dtype=complex)
        lam, m, d = self.lam(t, x), self.m(t, x), self.delta(t, x)
        return lam * (np.exp(1j * m * xi - 0.5 * d * d * xi * xi) - 1.0 - 1j * m * xi)

    def compensator(self, t, x):
        """``int (e^z - 1 - z) nu(dz)``, i.e. ``chi(-i)``."""
        lam, m, d = self.lam(t, x), self.m(t, x), self.delta(t, x)
        return lam * (np.exp(m + 0.5 * d * d) - 1.0 - m)

    def chi_jet(self, t, x, center, order):
        """xi-jet of ``chi(t, x, .)``; ``x`` may be an array (broadcast with center)."""
        x = np.asarray(x, dtype=float)
        lam, m, d = (np.asarray(f(t, x), dtype=float) for f in (self.lam, self.m, self.delta))
        X = Jet.variable(center, order)
        return (gaussian_cf_jet(m, d, center, order) - 1.0 - X * (1j * m)) * lam

    def chi_series(self, t, xbar, center, N, order):
        """x-Taylor coefficients about ``xbar`` of ``chi``, each as a xi-jet."""
        lam = self.lam.taylor(t, xbar, N)
        m = self.m.taylor(t, xbar, N)
        d = self.delta.taylor(t, xbar, N)
        d2 = _taylor_product(d, d)
        X = Jet.variable(center, order)
        X2 = X * X
        E = [X * (1j * m[n]) - X2 * (0.5 * d2[n]) for n in range(N + 1)]
        g = [E[0].exp()]
        for n in range(1, N + 1):
            acc = E[1] * g[n - 1]
            for k in range(2, n + 1):
                acc = acc + (E[k] * g[n - k]) * k
            g.append(acc / n)
        inner = [g[0] - 1.0 - X * (1j * m[0])] + [g[n] - X * (1j * m[n]) for n in range(1, N + 1)]
        out = []
        for n in range(N + 1):
            acc = inner[n] * lam[0]
            for p in range(1, n + 1):
                acc = acc + inner[n - p] * lam[p]
            out.append(acc)
        return out

    def check_contour(self, xi):
        return None

    def describe(self):
        return {"family": "gaussian"}


@dataclass(frozen=True)
class NIGSymbolFamily:
    """NIG-like jump part ``scale(x) * chi_NIG(xi; alpha, beta)``.

    With ``a = gamma = 0`` the generator symbol equals the NIG-like Feller
    symbol ``i mu(x) xi - scale(x) (sqrt(alpha^2-(beta+i xi)^2) - sqrt(alpha^2-beta^2))``
    with ``mu`` fixed by the martingale condition.
    """

    scale: CoefficientFn
    alpha: float
    beta: float

    def __post_init__(self):
        if not self.alpha > abs(self.beta):
            raise ValueError("NIG requires alpha > |beta|")

    @property
    def strip(self):
        return nig_strip(self.alpha, self.beta)

    @property
    def time_homogeneous(self):
        return self.scale.time_homogeneous

    def check_contour(self, xi):
        im = np.imag(np.asarray(xi, dtype=complex))
        lo, hi = self.strip
        if np.any(im <= lo) or np.any(im >= hi):
            raise ContourError(f"Im(xi) must lie in ({lo}, {hi}) for this NIG family")

    def chi(self, t, x, xi):
        self.check_contour(xi)
        return self.scale(t, x) * nig_unit_jump(self.alpha, self.beta, xi)

    def compensator(self, t, x):
        return self.scale(t, x) * float(nig_unit_jump(self.alpha, self.beta, -1j).real)

    def chi_jet(self, t, x, center, order):
        self.check_contour(center)
        s = np.asarray(self.scale(t, np.asarray(x, dtype=float)), dtype=float)
        return nig_unit_jump_jet(self.alpha, self.beta, center, order) * s

    def chi_series(self, t, xbar, center, N, order):
        self.check_contour(center)
        unit = nig_unit_jump_jet(self.alpha, self.beta, center, order)
        return [unit * c for c in self.scale.taylor(t, xbar, N)]

    def describe(self):
        return {"family": "nig", "alpha": self.alpha, "beta": self.beta}


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    a: CoefficientFn
    gamma: CoefficientFn = Constant(0.0)
    jumps: object = None
    domain: tuple = ((0.0, 10.0), (-2.0, 2.0))
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    @property
    def time_homogeneous(self):
        ok = self.a.time_homogeneous and self.gamma.time_homogeneous
        return ok and (self.jumps is None or self.jumps.time_homogeneous)

    @property
    def strip(self):
        return (-math.inf, math.inf) if self.jumps is None else self.jumps.strip

    @property
    def killing_free(self):
        return isinstance(self.gamma, Constant) and self.gamma.c == 0.0

    def compensator(self, t, x):
        if self.jumps is None:
            return 0.0 * np.asarray(x, dtype=float)
        return self.jumps.compensator(t, x)

    def chi(self, t, x, xi):
        if self.jumps is None:
            return 0.0 * np.asarray(xi, dtype=complex)
        return self.jumps.chi(t, x, xi)


def _finite(what, value, t, x):
    if not np.all(np.isfinite(value)):
        raise EvaluationError(what, t, x, value)
    return value


def martingale_drift(model: ModelSpec, t, x):
    """``mu = gamma - a - chi(-i)``, making ``exp(X)`` a martingale up to default."""
    a = _finite("a", model.a(t, x), t, x)
    g = _finite("gamma", model.gamma(t, x), t, x)
    comp = _finite("jump compensator", model.compensator(t, x), t, x)
    return g - a - comp


def generator_symbol(model: ModelSpec, t, x, xi):
    xi = np.asarray(xi, dtype=complex)
    if model.jumps is not None:
        model.jumps.check_contour(xi)
    a = _finite("a", model.a(t, x), t, x)
    g = _finite("gamma", model.gamma(t, x), t, x)
    comp = model.compensator(t, x)
    return -(xi * xi + 1j * xi) * a + (1j * xi - 1.0) * g - 1j * xi * comp + model.chi(t, x, xi)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    M: float
    a_range: tuple
    gamma_range: tuple
    lambda_range: Optional[tuple] = None
    delta2_range: Optional[tuple] = None
    parabolic: bool = True
    nondegenerate: bool = True
    gamma_nonnegative: bool = True
    exp_moments_finite: bool = True
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return self.parabolic and self.nondegenerate and self.gamma_nonnegative


def validate(model: ModelSpec, M: float, n_t: int = 5, n_x: int = 81) -> ValidationReport:
    """Lattice scan of the standing assumptions; never raises."""
    (t0, t1), (x0, x1) = model.domain
    ts = np.linspace(t0, t1, n_t)
    xs = np.linspace(x0, x1, n_x)
    T, X = np.meshgrid(ts, xs, indexing="ij")
    # coefficients are vectorized in x; evaluate per time row
    a = np.array([np.broadcast_to(model.a(t, xs), xs.shape) for t in ts])
    g = np.array([np.broadcast_to(model.gamma(t, xs), xs.shape) for t in ts])
    rep = ValidationReport(M=M, a_range=(float(a.min()), float(a.max())),
                           gamma_range=(float(g.min()), float(g.max())))
    rep.parabolic = bool(a.min() >= 1.0 / M and a.max() <= M)
    if not rep.parabolic:
        rep.warnings.append(
            f"parabolicity violated on lattice: a in [{a.min():.6g}, {a.max():.6g}], "
            f"required [{1.0 / M:.6g}, {M:.6g}]"
        )
    rep.gamma_nonnegative = bool(g.min() >= 0.0)
    if not rep.gamma_nonnegative:
        rep.warnings.append("default intensity gamma takes negative values")
    for label, fn in (("a", model.a), ("gamma", model.gamma)):
        hint = fn.bounds_hint
        if hint and hint.startswith("unbounded"):
            rep.warnings.append(f"{label} {hint} (off-lattice); lattice bounds reported only")
    jumps = model.jumps
    if isinstance(jumps, GaussianJumpFamily):
        lam = np.array([np.broadcast_to(jumps.lam(t, xs), xs.shape) for t in ts])
        d2 = np.array([np.broadcast_to(jumps.delta(t, xs), xs.shape) ** 2 for t in ts])
        rep.lambda_range = (float(lam.min()), float(lam.max()))
        rep.delta2_range = (float(d2.min()), float(d2.max()))
        degenerate = d2.min() <= 0.0
        rep.nondegenerate = bool(
            not degenerate and d2.min() >= 1.0 / M and d2.max() <= M
            and lam.min() >= 0.0 and lam.max() <= M
        )
        if degenerate:
            rep.warnings.append("non-degeneracy violated: delta(x) = 0 on the lattice")
        elif not rep.nondegenerate:
            rep.warnings.append("non-degeneracy bounds on delta^2 or lambda violated")
        # Gaussian jumps have exponential moments of every order
        rep.exp_moments_finite = True
        for label, fn in (("lambda", jumps.lam),):
            hint = fn.bounds_hint
            if hint and hint.startswith("unbounded"):
                rep.warnings.append(f"{label} {hint} (off-lattice)")
    elif isinstance(jumps, NIGSymbolFamily):
        s = np.array([np.broadcast_to(jumps.scale(t, xs), xs.shape) for t in ts])
        rep.lambda_range = (float(s.min()), float(s.max()))
        rep.nondegenerate = bool(s.min() > 0.0)
        # exponential moments exist for |theta + beta| < alpha
        rep.exp_moments_finite = abs(jumps.beta + 1.0) < jumps.alpha
    return rep
