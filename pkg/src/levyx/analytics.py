"""Closed-form oracles: order-0 compound-Poisson density, parametrix envelopes,
JDCEV survival probabilities and the exponential-eta reference series."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy import special, stats

from .errors import DegeneracyError, DomainError, InconclusiveError
from .quadrature import composite_legendre, gauss_legendre

Number = Union[float, Callable]


def _integral(f: Number, t, T, Q=16):
    if not callable(f):
        return float(f) * (T - t)
    nodes, weights = gauss_legendre(t, T, Q)
    return float(np.dot(weights, [f(s) for s in nodes]))


def _poisson_cutoff(mean, tail=1e-15):
    if mean <= 0:
        return 0
    return int(stats.poisson.isf(tail, mean)) + 1


# ---------------------------------------------------------------------------
# order-0 density
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompoundPoissonDensity:
    """Order-0 Gaussian-jump density: diffusion ``a0``, jumps ``lambda0 Normal(m0, delta0^2)``,
    killing ``gamma0``.  ``a0``, ``lambda0``, ``gamma0`` are constants or functions of time."""

    a0: Number
    lambda0: Number = 0.0
    gamma0: Number = 0.0
    m0: float = 0.0
    delta0: float = 0.0
    tail: float = 1e-15

    def terms(self, t, T):
        A = _integral(self.a0, t, T)
        L = _integral(self.lambda0, t, T)
        G = _integral(self.gamma0, t, T)
        comp = math.exp(self.m0 + 0.5 * self.delta0**2) - 1.0
        drift = G - A - comp * L
        n = np.arange(_poisson_cutoff(L, self.tail) + 1)
        weights = stats.poisson.pmf(n, L) if L > 0 else (n == 0).astype(float)
        mean = drift + n * self.m0
        var = 2.0 * A + n * self.delta0**2
        return math.exp(-G), weights, mean, var


def cp_density(params: CompoundPoissonDensity, t, x, T, y):
    """Order-0 transition density, a Poisson mixture of Gaussians times ``e^{-int gamma0}``."""
    if not T > t:
        raise DomainError("T must exceed t")
    kill, w, mean, var = params.terms(t, T)
    y = np.asarray(y, dtype=float)
    z = y[..., None] - x - mean
    dens = np.exp(-0.5 * z * z / var) / np.sqrt(2.0 * math.pi * var)
    return kill * np.sum(w * dens, axis=-1)


def cp_params_from_model(model, xbar, t=0.0):
    """Order-0 Taylor data (frozen at ``xbar``) of a Gaussian-jump model."""
    from .model import GaussianJumpFamily

    a0 = lambda s: float(model.a(s, xbar))
    g0 = lambda s: float(model.gamma(s, xbar))
    if model.jumps is None:
        return CompoundPoissonDensity(a0, 0.0, g0)
    j = model.jumps
    if not isinstance(j, GaussianJumpFamily):
        raise DomainError("compound-Poisson density needs Gaussian jumps")
    return CompoundPoissonDensity(a0, lambda s: float(j.lam(s, xbar)), g0,
                                  float(j.m(t, xbar)), float(j.delta(t, xbar)))


# ---------------------------------------------------------------------------
# parametrix envelopes
# ---------------------------------------------------------------------------

def default_mbar(M, c=1.5):
    return max(float(M), 1.0) * c


def envelope_ck_gamma_bar(Mbar, k, t, x, T, y, tol=1e-12):
    """``C^k Gamma_bar``: Gaussian convolutions of the constant-coefficient fundamental solution."""
    if not Mbar > 0 or not T > t:
        raise DomainError("need Mbar > 0 and T > t")
    tau = T - t
    lam = Mbar * tau
    n = np.arange(_poisson_cutoff(lam, tol) + 1)
    w = stats.poisson.pmf(n, lam)
    var = Mbar * (tau + n + k)
    z = np.asarray(x - y, dtype=float)[..., None] + Mbar * (n + k)
    return np.sum(w * np.exp(-0.5 * z * z / var) / np.sqrt(2.0 * math.pi * var), axis=-1)


def envelope_gamma_bar(Mbar, t, x, T, y, tol=1e-12):
    return envelope_ck_gamma_bar(Mbar, 0, t, x, T, y, tol)


def envelope_gamma_tilde(Mbar, t, x, T, y, tol=1e-12):
    """``sum_k (Mbar tau)^{k/2} / sqrt(k!) C^{k+1} Gamma_bar``."""
    tau = T - t
    out = 0.0
    k = 0
    while True:
        coef = math.exp(0.5 * k * math.log(Mbar * tau) - 0.5 * math.lgamma(k + 1))
        out = out + coef * envelope_ck_gamma_bar(Mbar, k + 1, t, x, T, y, tol)
        # each C^{k+1} Gamma_bar is bounded by 1/sqrt(2 pi Mbar (k+1))
        if k > Mbar * tau and coef / math.sqrt(2.0 * math.pi * Mbar * (k + 1)) < tol:
            return out
        k += 1


# ---------------------------------------------------------------------------
# JDCEV
# ---------------------------------------------------------------------------

def kummer_1f1(a, b, z, rtol=1e-16, max_terms=10000):
    """Confluent hypergeometric ``1F1(a; b; z)`` by its power series."""
    term = 1.0
    total = 1.0
    for n in range(max_terms):
        term *= (a + n) / (b + n) * z / (n + 1)
        total += term
        if term == 0.0 or abs(term) < rtol * abs(total):
            return total
    raise DomainError(f"1F1({a}; {b}; {z}) series did not converge")


@dataclass(frozen=True)
class JDCEVParams:
    b: float = 0.01
    c: float = 2.0
    delta: float = 0.3
    beta: float = -1.0 / 3.0

    def __post_init__(self):
        if not (self.beta < 0 and self.b > 0 and self.c >= 0 and self.delta > 0):
            raise DomainError("JDCEV needs beta < 0, b > 0, c >= 0, delta > 0")


def _kummer_down(a0, b, z, n):
    """``1F1(a0 - k; b; z)`` for k = 0..n-1.

    The power series loses all accuracy once ``a`` is large and negative
    (terms reach ``e^{2 sqrt(|a| z)}`` before cancelling), and the plain
    contiguous recurrence in ``a`` is unstable because 1F1 is its minimal
    solution.  Instead we recur on generalized Laguerre functions
    ``L_mu = Gamma(mu+b)/(Gamma(mu+1)Gamma(b)) 1F1(-mu; b; z)``, ``mu = k - a0``:

        (mu+1) L_{mu+1} = (2 mu + b - z) L_mu - (mu + b - 1) L_{mu-1},

    seeded by the series where ``|a|`` is still small.
    """
    out = np.empty(n)
    k0 = max(0, int(math.ceil(a0 + 1.0)))  # first k with mu >= 1
    for k in range(min(n, k0 + 2)):
        out[k] = kummer_1f1(a0 - k, b, z)
    if n <= k0 + 2:
        return out
    mu = np.arange(n) - a0
    logfac = special.gammaln(mu + b) - special.gammaln(mu + 1.0) - special.gammaln(b)
    L_prev, L = out[k0] * math.exp(logfac[k0]), out[k0 + 1] * math.exp(logfac[k0 + 1])
    for k in range(k0 + 2, n):
        m = mu[k - 1]
        L_prev, L = L, ((2.0 * m + b - z) * L - (m + b - 1.0) * L_prev) / (m + 1.0)
        out[k] = L * math.exp(-logfac[k])
    return out


_JDCEV_CACHE = {}


def _jdcev_coeffs(p: JDCEVParams, x, n):
    """Time-independent factors ``c_n`` of the survival series, cached per (p, x)."""
    key = (p, float(x))
    have = _JDCEV_CACHE.get(key)
    if have is not None and have.size >= n:
        return have[:n]
    ab = abs(p.beta)
    nu = (1.0 + 2.0 * p.c) / (2.0 * ab)
    z = p.b / (p.delta**2 * ab) * math.exp(-2.0 * p.beta * x)
    # A^{1/(2|beta|)} e^x = z^{1/(2|beta|)}
    log_pref = (math.lgamma(1.0 + p.c / ab) - math.lgamma(nu + 1.0) - math.lgamma(1.0 / (2.0 * ab))
                + math.log(z) / (2.0 * ab) - z)
    k = np.arange(n)
    lg = special.gammaln(k + 1.0 / (2.0 * ab)) - special.gammaln(k + 1.0)
    c = np.exp(log_pref + lg) * _kummer_down(1.0 + p.c / ab, nu + 1.0, z, n)
    if len(_JDCEV_CACHE) > 64:
        _JDCEV_CACHE.clear()
    _JDCEV_CACHE[key] = c
    return c


def jdcev_exact(p: JDCEVParams, t, x, T, truncN=None, tol=1e-16, max_terms=2_000_000):
    """Exact survival probability of the JDCEV model (series in n).

    Term n is ``c_n e^{-(b + 2|beta| b n) tau}``.  With ``truncN=None`` terms are
    added until 50 consecutive ones stay below ``tol`` relative to the partial
    sum; the decay rate ``2|beta| b`` is small, so short maturities need many
    terms.
    """
    tau = T - t
    if not tau > 0:
        raise DomainError("T must exceed t")
    om = 2.0 * abs(p.beta) * p.b
    if truncN is not None:
        c = _jdcev_coeffs(p, x, truncN + 1)
        return float(np.sum(c * np.exp(-(p.b + om * np.arange(truncN + 1)) * tau)))
    n = 1024
    while True:
        c = _jdcev_coeffs(p, x, n)
        terms = c * np.exp(-(p.b + om * np.arange(n)) * tau)
        total = np.cumsum(terms)
        quiet = np.abs(terms) < tol * np.abs(total)
        # first index ending a run of 50 quiet terms
        run = np.convolve(quiet.astype(int), np.ones(50, dtype=int), "valid")
        hit = np.nonzero(run == 50)[0]
        if hit.size:
            return float(total[hit[0] + 49])
        if n >= max_terms:
            raise DomainError("JDCEV survival series did not converge")
        n = min(2 * n, max_terms)


def jdcev_expansion(p: JDCEVParams, t, x, T, order=2):
    """``[u_0, u_1, u_2][:order+1]`` of the second-order Taylor expansion about ``x``."""
    if not 0 <= order <= 2:
        raise DomainError("closed forms are available up to order 2")
    tau = T - t
    b, c, d, be = p.b, p.c, p.delta, p.beta
    E = math.exp(2.0 * x * be)
    u0 = math.exp(-(b + d**2 * c * E) * tau)
    u1 = u0 * be * tau**2 * (-d**2 * b * c * E + 0.5 * d**4 * c * E**2 - d**4 * c**2 * E**2)
    B = be**2
    u2 = u0 * B * (
        tau**2 * (-d**4 * c * E**2)
        + tau**3 * (-2.0 / 3.0 * d**2 * b**2 * c * E + d**4 * b * c * E**2 - 2.0 * d**4 * b * c**2 * E**2
                    - 1.0 / 3.0 * d**6 * c * E**3 + 2.0 * d**6 * c**2 * E**3 - 4.0 / 3.0 * d**6 * c**3 * E**3)
        + tau**4 * (0.5 * d**4 * b**2 * c**2 * E**2 - 0.5 * d**6 * b * c**2 * E**3 + d**6 * b * c**3 * E**3
                    + 1.0 / 8.0 * d**8 * c**2 * E**4 - 0.5 * d**8 * c**3 * E**4 + 0.5 * d**8 * c**4 * E**4)
    )
    return [u0, u1, u2][: order + 1]


@dataclass
class YieldPoint:
    tau: float
    Y: float
    Y_approx: list  # Y^(0), Y^(1), ...

    @property
    def gaps(self):
        return [self.Y - y for y in self.Y_approx]


def yields(p: JDCEVParams, x, taus, order=2, approx=None, truncN=None):
    """Exact and approximate yields ``-log u / tau``.

    ``approx(tau)`` may supply per-order survival terms (e.g. from the engine);
    by default the closed forms are used.
    """
    out = []
    for tau in taus:
        Y = -math.log(jdcev_exact(p, 0.0, x, tau, truncN)) / tau
        terms = approx(tau) if approx is not None else jdcev_expansion(p, 0.0, x, tau, order)
        cum = np.cumsum(terms)
        out.append(YieldPoint(float(tau), Y, [float(-math.log(u) / tau) for u in cum]))
    return out


# ---------------------------------------------------------------------------
# exponential-eta reference series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpEtaParams:
    beta: float = -2.0
    b0: float = 0.15
    b1: float = 0.15
    c0: float = 0.0
    c1: float = 0.0
    eps: float = 1.0
    lam: float = 0.2
    m: float = -0.2
    s: float = 0.2


def _levy_symbol(b, c, lam, m, s, xi):
    """``b^2/2 (-xi^2 - i xi) + c (i xi - 1) - i xi int(e^z-1-z) + int(e^{i xi z}-1-i xi z)`` with
    Gaussian ``lam Normal(m, s^2)``."""
    comp = lam * (math.exp(m + 0.5 * s * s) - 1.0 - m)
    jump = lam * (np.exp(1j * m * xi - 0.5 * s * s * xi * xi) - 1.0 - 1j * m * xi)
    return 0.5 * b * b * (-xi * xi - 1j * xi) + c * (1j * xi - 1.0) - 1j * xi * comp + jump


def _exp_eta_integrand(p: ExpEtaParams, payoff, tau, x, truncN, omega):
    pi = lambda xi: _levy_symbol(p.b0, p.c0, p.lam, p.m, p.s, xi)
    chi = lambda xi: _levy_symbol(p.b1, p.c1, p.lam, p.m, p.s, xi)

    def integrand(u):
        xi = u + 1j * omega
        hh = payoff.hhat(-xi) / (2.0 * math.pi)
        total = np.zeros_like(xi)
        for n in range(truncN + 1):
            shifted = [xi - 1j * k * p.beta for k in range(n + 1)]
            pis = [pi(z) for z in shifted]
            acc = np.zeros_like(xi)
            for k in range(n + 1):
                den = np.ones_like(xi)
                for j in range(n + 1):
                    if j != k:
                        diff = pis[k] - pis[j]
                        scale = np.maximum(1.0, np.abs(pis[k]))
                        if np.any(np.abs(diff) < 1e-10 * scale):
                            raise DegeneracyError(
                                "near-degenerate eigenvalue differences in the reference series; "
                                "perturb beta slightly"
                            )
                        den = den * diff
                acc = acc + np.exp(tau * pis[k]) / den
            prod = np.ones_like(xi)
            for k in range(n):
                prod = prod * chi(shifted[k])
            total = total + p.eps**n * math.exp(n * p.beta * x) * acc * prod
        return total * hh * np.exp(1j * xi * x)

    return integrand


def _auto_contour(p: ExpEtaParams, truncN):
    """Base contour ``Im xi`` centering the shifted lines ``Im xi - k beta`` on the valley
    of ``Re pi(i v)``; far from it the Gaussian jump transform overflows."""
    v = np.linspace(-60.0, 60.0, 4801)
    vstar = float(v[np.argmin(_levy_symbol(p.b0, p.c0, p.lam, p.m, p.s, 1j * v).real)])
    return vstar + 0.5 * truncN * p.beta


def exp_eta_reference(p: ExpEtaParams, payoff, tau, x, truncN=8, omega=None, rtol=1e-12):
    """Price of a put or call (a :class:`levyx.pricer.PayoffTransform`) by the
    eta = e^{beta x} series truncated at ``truncN``.

    Without ``omega`` the contour is placed by :func:`_auto_contour`; when that
    lands on the other side of the payoff poles the price is obtained from the
    opposite option by put-call parity (valid term by term for ``c0 = c1 = 0``).
    """
    from .pricer import payoff_transform

    parity_sign = 0.0
    if omega is None:
        omega = _auto_contour(p, truncN)
        if payoff.kind in ("put", "call") and p.c0 == 0 and p.c1 == 0:
            want = "call" if omega < -1.0 else "put"
            if omega < -1.0 or omega > 0.0:
                if want != payoff.kind:
                    parity_sign = 1.0 if payoff.kind == "put" else -1.0
                payoff = payoff_transform(want, payoff.K, omega)
            else:
                omega = payoff.omega
        else:
            omega = payoff.omega
    integrand = _exp_eta_integrand(p, payoff, tau, x, truncN, omega)
    Xi = math.sqrt(80.0 / max(p.b0**2 * tau, 1e-12))
    panels, prev = 8, None
    for _ in range(14):
        u, w = composite_legendre(-Xi, Xi, panels)
        val = np.dot(w, integrand(u))
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1.0):
            price = float(val.real)
            # put = call - (e^x - K); call = put + (e^x - K)
            return price - parity_sign * (math.exp(x) - payoff.K)
        prev, panels = val, panels * 2
    raise DomainError("reference series quadrature did not converge")


# ---------------------------------------------------------------------------
# convergence-rate study
# ---------------------------------------------------------------------------

@dataclass
class RateEstimate:
    slope: float
    stderr: float
    taus: np.ndarray
    errors: np.ndarray


def rate_study(approx: Callable, exact: Callable, taus, noise_ratio=3.0) -> RateEstimate:
    """Log-log slope of ``|exact(tau) - approx(tau)|`` against ``tau``.

    ``exact(tau)`` returns a value or ``(value, standard_error)``.
    """
    taus = np.asarray(taus, dtype=float)
    errs, noise = [], []
    for tau in taus:
        ref = exact(tau)
        val, se = (ref if isinstance(ref, tuple) else (ref, 0.0))
        errs.append(abs(val - approx(tau)))
        noise.append(se)
    errs, noise = np.array(errs), np.array(noise)
    if np.any(errs <= noise_ratio * noise) or np.any(errs == 0):
        raise InconclusiveError("reference noise dominates the approximation error")
    fit = stats.linregress(np.log(taus), np.log(errs))
    return RateEstimate(float(fit.slope), float(fit.stderr), taus, errs)
