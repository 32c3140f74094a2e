"""Fourier inversion of approximate characteristic functions.

Conventions: ``hhat(zeta) = int e^{i y zeta} h(y) dy`` and

    u = (1 / 2 pi) int_{Im xi = omega} phat(xi) hhat(-xi) dxi,

so ``omega`` is the imaginary part of the characteristic-function argument.
Puts and digitals need ``omega > 0``, calls ``omega < -1``.  With killing ``gamma > 0`` the value
of a claim paying ``H(S_T)`` is ``H(0) + E[e^{-int gamma} (h(X_T) - H(0))]``
(see :func:`defaultable_price`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .char_engine import CharApprox
from .errors import ArbitrageError, ContourError, DomainError, QuadratureError
from .quadrature import composite_legendre

KINDS = ("put", "call", "digital", "density", "constant")
DEFAULT_OMEGA = {"put": 0.5, "call": -1.5, "digital": 0.5, "density": 0.0, "constant": 0.0}
#: value of the claim after default, H(0)
DEFAULT_VALUE = {"put": lambda K: K, "call": lambda K: 0.0, "digital": lambda K: 1.0}


@dataclass(frozen=True)
class PayoffTransform:
    kind: str
    K: float | None = None
    omega: float = 0.0
    y: float | None = None  # density point

    @property
    def strike_log(self):
        return None if self.K is None else math.log(self.K)

    def hhat(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        if self.kind in ("put", "call"):
            return np.exp((1.0 + 1j * zeta) * math.log(self.K)) / (1j * zeta - zeta * zeta)
        if self.kind == "digital":
            return np.exp(1j * zeta * math.log(self.K)) / (1j * zeta)
        if self.kind == "density":
            return np.exp(1j * self.y * zeta)
        raise DomainError("the constant payoff has no contour transform; evaluate phat at 0")

    @property
    def default_value(self):
        return DEFAULT_VALUE[self.kind](self.K) if self.kind in DEFAULT_VALUE else 0.0


def payoff_transform(kind, K=None, omega=None, y=None) -> PayoffTransform:
    kind = kind.lower()
    if kind not in KINDS:
        raise DomainError(f"unknown payoff kind {kind!r}")
    omega = DEFAULT_OMEGA[kind] if omega is None else float(omega)
    if kind in ("put", "call", "digital"):
        if K is None or not K > 0:
            raise DomainError(f"{kind} needs a positive strike")
        if kind in ("put", "digital") and not omega > 0:
            raise ContourError(f"{kind} inversion requires Im(xi) > 0, got {omega}")
        if kind == "call" and not omega < -1:
            raise ContourError(f"call inversion requires Im(xi) < -1, got {omega}")
    elif kind == "density":
        if y is None:
            raise DomainError("density payoff needs the point y")
        omega = 0.0 if omega is None else omega
    else:
        omega = 0.0
    return PayoffTransform(kind, None if K is None else float(K), omega, None if y is None else float(y))


@dataclass
class PriceResult:
    total: float
    per_order: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    contour: float = 0.0

    @property
    def cumulative(self):
        return np.cumsum(self.per_order)


@dataclass
class DensitySlice:
    y: np.ndarray
    per_order: np.ndarray  # (N+1, len(y))
    diagnostics: dict = field(default_factory=dict)

    @property
    def total(self):
        return self.per_order.sum(axis=0)

    @property
    def cumulative(self):
        return np.cumsum(self.per_order, axis=0)


# ---------------------------------------------------------------------------
# Quadrature driver
# ---------------------------------------------------------------------------

class _Inverter:
    """Adaptive truncated Gauss-Legendre along ``Im xi = omega``.

    ``weights_fn(xi)`` returns an array ``(n_out, n_nodes)`` multiplying the
    ``phat`` terms; the result is ``(N+1, n_out)``.
    """

    def __init__(self, char: CharApprox, t, x, T, omega, rtol=1e-9, atol=1e-13,
                 per_panel=16, max_iter=12):
        self.char, self.t, self.x, self.T, self.omega = char, t, x, T, omega
        self.rtol, self.atol, self.per_panel, self.max_iter = rtol, atol, per_panel, max_iter
        self.char.check_contour(np.array([1j * omega]))

    def _terms(self, u):
        xi = u + 1j * self.omega
        return xi, self.char.phat_terms(self.t, self.x, self.T, xi)

    def _initial_cutoff(self, weights_fn):
        ex = self.char.exponent(self.t, self.T)
        Cv = ex.Cv(self.T)
        if Cv > 1e-6:
            return math.sqrt(80.0 / Cv), "gaussian"
        # empirical truncation on |phat_0 * hhat|
        u = np.geomspace(1.0, 1e5, 120)
        xi = u + 1j * self.omega
        lp = CharApprox(self.char.series, 0, self.char.Q).phat_terms(self.t, self.x, self.T, xi)[0]
        mag = np.max(np.abs(weights_fn(xi) * lp[None, :]), axis=0)
        peak = max(float(np.max(mag)), 1e-300)
        small = np.nonzero(mag < 1e-14 * peak)[0]
        if not len(small):
            raise QuadratureError(
                "integrand does not decay along the contour (no diffusion and a flat jump "
                "symbol); smooth the payoff or the density before inverting"
            )
        return float(u[small[0]]), "empirical"

    def _quad(self, Xi, panels, weights_fn):
        u, w = composite_legendre(-Xi, Xi, panels, self.per_panel)
        xi, terms = self._terms(u)
        vals = np.einsum("nq,oq,q->no", terms, weights_fn(xi), w) / (2.0 * math.pi)
        return vals

    def run(self, weights_fn):
        Xi, how = self._initial_cutoff(weights_fn)
        panels = 8
        prev = self._quad(Xi, panels, weights_fn)
        converged, tail = False, float("nan")
        for it in range(self.max_iter):
            refined = self._quad(Xi, 2 * panels, weights_fn)
            if np.all(np.abs(refined - prev) <= self.rtol * np.abs(refined) + self.atol):
                wider = self._quad(2 * Xi, 4 * panels, weights_fn)
                tail = float(np.max(np.abs(wider - refined)))
                if np.all(np.abs(wider - refined) <= self.rtol * np.abs(wider) + self.atol):
                    prev, converged = wider, True
                    Xi, panels = 2 * Xi, 4 * panels
                    break
                prev, Xi, panels = wider, 2 * Xi, 4 * panels
            else:
                prev, panels = refined, 2 * panels
        if not converged:
            raise QuadratureError(
                f"Fourier inversion did not converge (cutoff {Xi:g}, {panels * self.per_panel} nodes)"
            )
        diag = {"cutoff": Xi, "nodes": panels * self.per_panel, "tail": tail, "cutoff_rule": how}
        return prev, diag


def _check_residue(vals, diag):
    re = vals.real
    resid = float(np.max(np.abs(vals.imag.sum(axis=0)) / np.maximum(1.0, np.abs(re.sum(axis=0)))))
    diag["imag_residue"] = resid
    if resid > 1e-9:
        raise QuadratureError(f"inversion left an imaginary residue of {resid:.2e}")
    return re


def invert(char: CharApprox, payoff: PayoffTransform, t, x, T, **kw) -> PriceResult:
    """``u_n = (1/2pi) int phat_n(xi) hhat(-xi) dxi`` for n = 0..N."""
    if not T > t:
        raise DomainError(f"maturity T={T} must exceed t={t}")
    if payoff.kind == "constant":
        terms = char.phat_terms(t, x, T, np.array([0j]))[:, 0]
        diag = {"cutoff": 0.0, "nodes": 1, "tail": 0.0, "imag_residue": float(np.max(np.abs(terms.imag)))}
        return PriceResult(float(terms.real.sum()), terms.real.copy(), diag, 0.0)
    inv = _Inverter(char, t, x, T, payoff.omega, **kw)
    vals, diag = inv.run(lambda z: payoff.hhat(-z)[None, :])
    re = _check_residue(vals, diag)[:, 0]
    return PriceResult(float(re.sum()), re, diag, payoff.omega)


def invert_many(char: CharApprox, payoffs, t, x, T, **kw):
    """Invert several payoffs that share one contour (e.g. a strike strip)."""
    omegas = {p.omega for p in payoffs}
    if len(omegas) != 1:
        raise ContourError("invert_many needs payoffs on a common contour")
    inv = _Inverter(char, t, x, T, omegas.pop(), **kw)
    vals, diag = inv.run(lambda z: np.stack([p.hhat(-z) for p in payoffs]))
    re = _check_residue(vals, diag)
    return [PriceResult(float(re[:, i].sum()), re[:, i].copy(), dict(diag), p.omega)
            for i, p in enumerate(payoffs)]


def density(char: CharApprox, t, x, T, y, **kw) -> DensitySlice:
    """Per-order densities ``p_n(t, x; T, y)`` on a grid of ``y``."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    inv = _Inverter(char, t, x, T, 0.0, **kw)
    vals, diag = inv.run(lambda z: np.exp(-1j * y[:, None] * z[None, :]))
    return DensitySlice(y, _check_residue(vals, diag), diag)


def survival(char: CharApprox, t, x, T) -> PriceResult:
    return invert(char, payoff_transform("constant"), t, x, T)


def defaultable_price(char: CharApprox, payoff: PayoffTransform, t, x, T, **kw) -> PriceResult:
    """``H(0) + E[e^{-int gamma}(h(X_T) - H(0))]``, order by order."""
    res = invert(char, payoff, t, x, T, **kw)
    H0 = payoff.default_value
    if H0 == 0.0 or char.model.killing_free:
        return res
    surv = survival(char, t, x, T).per_order
    per = res.per_order - H0 * surv
    per[0] += H0
    return PriceResult(float(per.sum()), per, res.diagnostics, res.contour)


# ---------------------------------------------------------------------------
# Black-Scholes and implied volatility (zero rates, forward quoting)
# ---------------------------------------------------------------------------

def black_scholes(kind, forward, K, tau, sigma):
    kind = kind.lower()
    if sigma <= 0 or tau <= 0:
        intrinsic = forward - K if kind == "call" else K - forward
        return max(intrinsic, 0.0)
    sd = sigma * math.sqrt(tau)
    d1 = (math.log(forward / K) + 0.5 * sd * sd) / sd
    d2 = d1 - sd
    if kind == "call":
        return float(forward * ndtr(d1) - K * ndtr(d2))
    if kind == "put":
        return float(K * ndtr(-d2) - forward * ndtr(-d1))
    raise DomainError(f"Black-Scholes supports call/put, not {kind!r}")


def bs_vega(forward, K, tau, sigma):
    sd = sigma * math.sqrt(tau)
    d1 = (math.log(forward / K) + 0.5 * sd * sd) / sd
    return forward * math.sqrt(tau) * math.exp(-0.5 * d1 * d1) / math.sqrt(2.0 * math.pi)


def implied_vol(price, forward, K, tau, kind="put"):
    """Black-Scholes implied volatility by bracketed bisection plus Newton polish."""
    kind = kind.lower()
    if kind == "call":
        lower, upper = max(forward - K, 0.0), forward
    elif kind == "put":
        lower, upper = max(K - forward, 0.0), K
    else:
        raise DomainError(f"implied volatility needs a call or put, not {kind!r}")
    if not lower < price < upper:
        raise ArbitrageError(price, lower, upper)
    lo, hi = 1e-8, 1.0
    while black_scholes(kind, forward, K, tau, hi) < price:
        hi *= 2.0
        if hi > 1e4:
            raise ArbitrageError(price, lower, upper)
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if black_scholes(kind, forward, K, tau, mid) < price:
            lo = mid
        else:
            hi = mid
    sigma = 0.5 * (lo + hi)
    for _ in range(3):
        vega = bs_vega(forward, K, tau, sigma)
        if vega < 1e-300:
            break
        step = (black_scholes(kind, forward, K, tau, sigma) - price) / vega
        if not abs(step) < 1e-6:
            break
        sigma -= step
    return sigma


@dataclass
class Smile:
    k: np.ndarray  # log-strikes
    iv: np.ndarray  # (N+1, len(k)): IV of the cumulative price u^(n)
    prices: np.ndarray  # (N+1, len(k)) cumulative prices


def smile(char: CharApprox, strikes, t, x, T, kind="put", **kw) -> Smile:
    """Implied volatilities of ``u^(0)..u^(N)`` across ``strikes`` on one shared contour."""
    strikes = np.asarray(strikes, dtype=float)
    payoffs = [payoff_transform(kind, K) for K in strikes]
    res = invert_many(char, payoffs, t, x, T, **kw)
    if not char.model.killing_free:
        surv = survival(char, t, x, T).per_order
        for r, p in zip(res, payoffs):
            r.per_order = r.per_order - p.default_value * surv
            r.per_order[0] += p.default_value
    cum = np.array([np.cumsum(r.per_order) for r in res]).T
    fwd = math.exp(x)
    iv = np.full_like(cum, np.nan)
    for n in range(cum.shape[0]):
        for i, K in enumerate(strikes):
            try:
                iv[n, i] = implied_vol(cum[n, i], fwd, K, T - t, kind)
            except ArbitrageError:
                pass
    return Smile(np.log(strikes) - x, iv, cum)
