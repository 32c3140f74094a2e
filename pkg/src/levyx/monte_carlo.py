"""Monte Carlo verification by Euler path simulation.

Paths are simulated in fixed-size blocks; block ``b`` draws from a Philox
generator keyed by ``(seed, b)``, so results do not depend on how blocks are
spread over threads (``LEVYX_THREADS`` caps the worker count).

Gaussian jumps.  With coefficients frozen at the start of each step::

    X += (gamma - a - lam (e^{m + delta^2/2} - 1)) dt + sqrt(2 a dt) Z + J

The whole jump compensator is folded into the drift and ``J`` is the sum of
the raw jump sizes accepted in the step.  Candidates arrive at rate
``lambda_max`` (Poisson count per step), each is accepted when an
independent uniform falls below ``lam / lambda_max``, and given ``k``
accepted jumps ``J = k m + sqrt(k) delta Z'``.

NIG-like jumps.  The increment over a step is drawn from the NIG law with
the scale frozen at the step start: ``V ~ IG(d dt / g, (d dt)^2)`` with
``g = sqrt(alpha^2 - beta^2)`` and jump ``beta V + sqrt(V) Z'``; the drift
``d (sqrt(alpha^2 - (beta+1)^2) - g)`` makes the frozen step a martingale.
The scheme is exact in law per step when the scale is constant and biased
(bias -> 0 with the step) otherwise.

Default.  The hazard ``int gamma`` is accumulated with the trapezoid rule at
the step grid and compared with one Exp(1) draw per path; defaulted paths
pay ``H(0)``.

Step halving.  ``freeze=2`` on a grid of half steps refreshes the frozen
coefficients every second substep, which is exactly the coarse scheme in law
(Poisson counts, Gaussian and inverse-Gaussian increments all add up with
frozen parameters).  Running it next to ``freeze=1`` on the same random
numbers gives a tightly coupled estimate of the discretization bias.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ArbitrageError, DomainError
from .model import GaussianJumpFamily, ModelSpec, NIGSymbolFamily


@dataclass(frozen=True)
class SimConfig:
    paths: int = 100_000
    steps_per_year: int = 250
    seed: int = 0
    lambda_max: float | None = None  # None: sup of lam over the model domain lattice
    antithetic: bool = False
    block: int = 1 << 15

    def __post_init__(self):
        if self.paths < 2 or self.steps_per_year <= 0 or self.block < 2:
            raise ValueError("paths and block must be >= 2 and steps_per_year positive")
        if self.antithetic and self.block % 2:
            raise ValueError("antithetic sampling needs an even block size")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class MCEstimate:
    mean: float
    stderr: float
    n_paths: int
    n_defaulted: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def ci95(self):
        return (self.mean - 1.96 * self.stderr, self.mean + 1.96 * self.stderr)


def n_threads():
    try:
        return max(1, int(os.environ.get("LEVYX_THREADS", os.cpu_count() or 1)))
    except ValueError:
        return 1


def _generator(seed, block):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(block)])))


def _normals(rng, n, antithetic):
    if not antithetic:
        return rng.standard_normal(n)
    z = rng.standard_normal(n // 2)
    return np.concatenate([z, -z])


def inverse_gaussian(rng, mean, shape):
    """IG(mean, shape) draws by the Michael-Schucany-Haas transformation.

    Always consumes one normal and one uniform per draw, which keeps coupled
    runs on the same random stream.
    """
    y = rng.standard_normal(mean.shape) ** 2
    u = rng.random(mean.shape)
    my = mean * y
    v = mean + mean * my / (2.0 * shape) - mean / (2.0 * shape) * np.sqrt(4.0 * shape * my + my * my)
    return np.where(u <= mean / (mean + v), v, mean * mean / v)


def _lattice_sup(f, model, t, T):
    (_, _), (x0, x1) = model.domain
    xs = np.linspace(x0, x1, 401)
    ts = np.linspace(t, T, 5)
    return max(float(np.max(np.asarray(f(s, xs)) * np.ones_like(xs))) for s in ts)


def _as_payoff_fn(payoff):
    """``(h(x), H0)`` for a :class:`levyx.pricer.PayoffTransform`, a callable ``h`` (H0 = 0)
    or an explicit ``(h, H0)`` pair."""
    if callable(payoff):
        return payoff, 0.0
    if isinstance(payoff, tuple):
        return payoff
    kind, K = payoff.kind, payoff.K
    if kind == "put":
        return (lambda x: np.maximum(K - np.exp(x), 0.0)), K
    if kind == "call":
        return (lambda x: np.maximum(np.exp(x) - K, 0.0)), 0.0
    if kind == "digital":
        return (lambda x: (x < math.log(K)).astype(float)), 1.0
    if kind == "constant":
        return (lambda x: np.ones_like(x)), 0.0
    raise DomainError(f"Monte Carlo does not support payoff kind {kind!r}")


def _estimate(blocks, antithetic, n_def, diag):
    """Mean and standard error from per-block values (antithetic halves averaged first)."""
    if antithetic:
        flat = np.concatenate([0.5 * (v[: v.size // 2] + v[v.size // 2:]) for v in blocks])
    else:
        flat = np.concatenate(blocks)
    n = sum(v.size for v in blocks)
    sd = float(flat.std(ddof=1)) if flat.size > 1 else float("nan")
    return MCEstimate(float(flat.mean()), sd / math.sqrt(flat.size), n, n_def, dict(diag))


def _coef(f, s, X):
    return np.asarray(f(s, X), dtype=float) * np.ones(X.shape)


class _Simulator:
    """Blockwise terminal-state sampler shared by both schemes."""

    def __init__(self, model, t, x, T, cfg, substeps=1, freeze=1):
        if not T > t:
            raise DomainError("T must exceed t")
        if substeps % freeze:
            raise ValueError("freeze must divide substeps")
        self.model, self.t, self.x, self.T, self.cfg = model, float(t), float(x), float(T), cfg
        self.n_steps = max(1, int(math.ceil(cfg.steps_per_year * (T - t)))) * substeps
        self.dt = (T - t) / self.n_steps
        self.freeze = freeze

    def block_sizes(self):
        sizes, left = [], self.cfg.paths
        while left > 0:
            sizes.append(min(self.cfg.block, left))
            left -= sizes[-1]
        if self.cfg.antithetic and sizes[-1] % 2:
            sizes[-1] += 1
        return sizes

    def run(self):
        sizes = self.block_sizes()
        with ThreadPoolExecutor(max_workers=min(n_threads(), len(sizes))) as ex:
            parts = list(ex.map(lambda ib: self.block(*ib), enumerate(sizes)))
        diag = {}
        for p in parts:  # merged in block order, independent of scheduling
            for k, v in p[2].items():
                diag[k] = diag.get(k, 0) + v
        return [p[0] for p in parts], [p[1] for p in parts], diag

    def block(self, index, n):
        rng = _generator(self.cfg.seed, index)
        X = np.full(n, self.x)
        E = rng.standard_exponential(n)
        H = np.zeros(n)
        diag = self.new_diag()
        g_prev, s_prev = _coef(self.model.gamma, self.t, X), self.t
        state = None
        for i in range(self.n_steps):
            s = self.t + i * self.dt
            if i % self.freeze == 0:
                if i:
                    g = _coef(self.model.gamma, s, X)
                    H += 0.5 * (g_prev + g) * (s - s_prev)
                    g_prev, s_prev = g, s
                state = self.freeze_state(s, X, diag)
            X = X + self.increment(rng, state, n, diag)
        H += 0.5 * (g_prev + _coef(self.model.gamma, self.T, X)) * (self.T - s_prev)
        return X, H <= E, diag

    def new_diag(self):
        return {}


class _GaussianSimulator(_Simulator):
    def __init__(self, model, t, x, T, cfg, substeps=1, freeze=1):
        super().__init__(model, t, x, T, cfg, substeps, freeze)
        j = model.jumps
        if not isinstance(j, (GaussianJumpFamily, type(None))):
            raise DomainError("simulate_price needs a Gaussian jump family (or no jumps)")
        if j is None:
            self.lam_max = 0.0
        else:
            sup = _lattice_sup(j.lam, model, t, T)
            if cfg.lambda_max is not None and cfg.lambda_max < sup:
                raise DomainError(f"lambda_max={cfg.lambda_max} below sup lambda={sup:.6g} on the domain")
            self.lam_max = float(cfg.lambda_max if cfg.lambda_max is not None else sup)

    def new_diag(self):
        return {"candidates": 0, "accepted": 0, "bound_doublings": 0, "lam_sum": 0.0, "bound_sum": 0.0}

    def freeze_state(self, s, X, diag):
        m = self.model
        a = _coef(m.a, s, X)
        drift = _coef(m.gamma, s, X) - a
        st = {"a": a, "drift": drift}
        if m.jumps is not None:
            j = m.jumps
            lam, jm, jd = _coef(j.lam, s, X), _coef(j.m, s, X), _coef(j.delta, s, X)
            st["drift"] = drift - lam * (np.exp(jm + 0.5 * jd * jd) - 1.0)
            bound = np.full(X.shape, self.lam_max)
            over = lam > bound
            if np.any(over):
                # path left the validated lattice: double its bound until it covers lam
                base = self.lam_max if self.lam_max > 0 else float(lam[over].min())
                bound[over] = base * 2.0 ** np.ceil(np.log2(lam[over] / base))
                diag["bound_doublings"] += int(over.sum())
            st.update(lam=lam, jm=jm, jd=jd, bound=bound)
        return st

    def increment(self, rng, st, n, diag):
        dt, anti = self.dt, self.cfg.antithetic
        dX = st["drift"] * dt + np.sqrt(2.0 * st["a"] * dt) * _normals(rng, n, anti)
        if self.model.jumps is None:
            return dX
        bound, lam = st["bound"], st["lam"]
        cand = rng.poisson(bound * dt)
        total = int(cand.sum())
        marks = rng.random(total) * np.repeat(bound, cand)
        owner = np.repeat(np.arange(n), cand)
        acc = np.bincount(owner[marks < lam[owner]], minlength=n)
        diag["candidates"] += total
        diag["accepted"] += int(acc.sum())
        diag["lam_sum"] += float(lam.sum())
        diag["bound_sum"] += float(bound.sum())
        return dX + acc * st["jm"] + np.sqrt(acc) * st["jd"] * _normals(rng, n, anti)


class _NIGSimulator(_Simulator):
    def __init__(self, model, t, x, T, cfg, substeps=1, freeze=1):
        super().__init__(model, t, x, T, cfg, substeps, freeze)
        j = model.jumps
        if not isinstance(j, NIGSymbolFamily):
            raise DomainError("simulate_nig_frozen needs a NIG symbol family")
        if not abs(j.beta + 1.0) < j.alpha:
            raise DomainError("NIG martingale drift needs |beta + 1| < alpha")
        self.g = math.sqrt(j.alpha**2 - j.beta**2)
        self.mu_unit = math.sqrt(j.alpha**2 - (j.beta + 1.0) ** 2) - self.g

    def freeze_state(self, s, X, diag):
        m = self.model
        d = _coef(m.jumps.scale, s, X)
        if np.any(d <= 0) or not np.all(np.isfinite(d)):
            raise DomainError("NIG scale must stay positive and finite along paths")
        a = _coef(m.a, s, X)
        return {"a": a, "d": d, "drift": _coef(m.gamma, s, X) - a + d * self.mu_unit}

    def increment(self, rng, st, n, diag):
        dt, anti, be = self.dt, self.cfg.antithetic, self.model.jumps.beta
        ddt = st["d"] * dt
        V = inverse_gaussian(rng, ddt / self.g, ddt * ddt)
        return (st["drift"] * dt + np.sqrt(2.0 * st["a"] * dt) * _normals(rng, n, anti)
                + be * V + np.sqrt(V) * _normals(rng, n, anti))


def _values(sim, payoffs):
    """Per-payoff lists of per-block discounted payoff samples, plus default count and diagnostics."""
    X, alive, diag = sim.run()
    if diag.get("candidates"):
        diag["acceptance_ratio"] = diag["accepted"] / diag["candidates"]
    if diag.get("bound_sum"):
        diag["mean_lam_over_bound"] = diag["lam_sum"] / diag["bound_sum"]
    diag["steps"] = sim.n_steps // sim.freeze
    n_def = int(sum((~a).sum() for a in alive))
    out = []
    for p in payoffs:
        h, H0 = _as_payoff_fn(p)
        out.append([np.where(a, h(x), H0) for x, a in zip(X, alive)])
    return out, n_def, diag


def _finish(sim, payoffs):
    single = not isinstance(payoffs, list)
    vals, n_def, diag = _values(sim, [payoffs] if single else payoffs)
    res = [_estimate(v, sim.cfg.antithetic, n_def, diag) for v in vals]
    return res[0] if single else res


def _simulator_for(model):
    return _NIGSimulator if isinstance(model.jumps, NIGSymbolFamily) else _GaussianSimulator


def simulate_price(model: ModelSpec, payoff, t, x, T, cfg: SimConfig = SimConfig()):
    """MC estimate(s) of ``H(0) + E[1_{no default}(h(X_T) - H(0))]`` for one payoff or a list
    of payoffs sharing the same paths."""
    return _finish(_GaussianSimulator(model, t, x, T, cfg), payoff)


def simulate_nig_frozen(model: ModelSpec, payoff, t, x, T, cfg: SimConfig = SimConfig()):
    return _finish(_NIGSimulator(model, t, x, T, cfg), payoff)


@dataclass
class HalvingResult:
    coarse: MCEstimate
    fine: MCEstimate
    difference: MCEstimate  # fine - coarse, paired on common random numbers


def step_halving(model: ModelSpec, payoff, t, x, T, cfg: SimConfig = SimConfig()) -> HalvingResult:
    """Coupled estimates at ``steps_per_year`` and twice that."""
    cls = _simulator_for(model)
    (coarse,), n_c, d_c = _values(cls(model, t, x, T, cfg, substeps=2, freeze=2), [payoff])
    (fine,), n_f, d_f = _values(cls(model, t, x, T, cfg, substeps=2, freeze=1), [payoff])
    anti = cfg.antithetic
    diff = [f - c for f, c in zip(fine, coarse)]
    return HalvingResult(_estimate(coarse, anti, n_c, d_c), _estimate(fine, anti, n_f, d_f),
                         _estimate(diff, anti, 0, {}))


def iv_band(est: MCEstimate, forward, K, tau, kind):
    """Implied volatilities of (ci_lo, mean, ci_hi).

    The price-to-vol map is increasing, so a bound below the no-arbitrage
    floor maps to 0 and one above the cap to inf; containment in the band is
    then equivalent to containment of the price in the interval.
    """
    from .pricer import implied_vol

    out = []
    for v in (est.ci95[0], est.mean, est.ci95[1]):
        try:
            out.append(implied_vol(v, forward, K, tau, kind))
        except ArbitrageError as e:
            out.append(0.0 if v <= e.lower else math.inf)
    return tuple(out)
