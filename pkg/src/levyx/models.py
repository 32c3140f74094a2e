"""Ready-made models and the JSON model loader.

JSON documents carry a ``kind`` plus the parameters listed in
:data:`SCHEMAS`; unknown keys are rejected.  Example::

    {"kind": "cev_gauss", "delta": 0.2, "beta": 0.5,
     "lambda": 0.3, "m": -0.1, "eta": 0.4}
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import (
    Constant,
    ExpCoefficient,
    GaussianJumpFamily,
    ModelSpec,
    NIGSymbolFamily,
    Polynomial,
)

DEFAULT_DOMAIN = ((0.0, 10.0), (-2.0, 2.0))


def flat(sigma=0.2, gamma=0.0, lam=0.0, m=0.0, eta=0.1, domain=DEFAULT_DOMAIN):
    """Constant coefficients: Black-Scholes, optionally with Merton jumps and killing."""
    jumps = None
    if lam:
        jumps = GaussianJumpFamily(Constant(lam), Constant(m), Constant(eta))
    return ModelSpec(
        a=Constant(0.5 * sigma**2), gamma=Constant(gamma), jumps=jumps, domain=domain,
        name="flat", params=dict(sigma=sigma, gamma=gamma, **{"lambda": lam}, m=m, eta=eta),
    )


def cev_gauss(delta=0.2, beta=0.5, lam=0.3, m=-0.1, eta=0.4, domain=DEFAULT_DOMAIN):
    """CEV-like volatility and jump intensity, ``a = delta^2 e^{2(beta-1)x}/2``,
    ``nu = lam e^{2(beta-1)x} Normal(m, eta^2)``, no default."""
    rate = 2.0 * (beta - 1.0)
    jumps = None
    if lam:
        jumps = GaussianJumpFamily(ExpCoefficient(lam, rate), Constant(m), Constant(eta))
    return ModelSpec(
        a=ExpCoefficient(0.5 * delta**2, rate), jumps=jumps, domain=domain, name="cev_gauss",
        params=dict(delta=delta, beta=beta, **{"lambda": lam}, m=m, eta=eta),
    )


def jdcev(b=0.01, c=2.0, delta=0.3, beta=-1.0 / 3.0, domain=DEFAULT_DOMAIN):
    """Jump-to-default CEV: ``a = delta^2 e^{2 beta x}/2``, ``gamma = b + c delta^2 e^{2 beta x}``."""
    return ModelSpec(
        a=ExpCoefficient(0.5 * delta**2, 2.0 * beta),
        gamma=ExpCoefficient(c * delta**2, 2.0 * beta, offset=b),
        domain=domain, name="jdcev", params=dict(b=b, c=c, delta=delta, beta=beta),
    )


def nig_cev(delta0=2.0, gamma=0.5, alpha=40.0, beta=-10.0, domain=DEFAULT_DOMAIN):
    """NIG-like Feller process with scale ``delta0 e^{2(gamma-1)x}`` and no diffusion."""
    scale = ExpCoefficient(delta0, 2.0 * (gamma - 1.0))
    return ModelSpec(
        a=Constant(0.0), jumps=NIGSymbolFamily(scale, alpha, beta), domain=domain,
        name="nig_cev", params=dict(delta0=delta0, gamma=gamma, alpha=alpha, beta=beta),
    )


def exp_eta(beta=-2.0, b0=0.15, b1=0.15, c0=0.0, c1=0.0, eps=1.0,
            lam=0.2, m=-0.2, s=0.2, domain=DEFAULT_DOMAIN):
    """Time-homogeneous model with exponential state dependence ``eta(x) = e^{beta x}``.

    ``a = (b0^2 + eps b1^2 eta)/2``, ``gamma = c0 + eps c1 eta``,
    ``nu = (1 + eps eta) lam Normal(m, s^2)`` (both Levy measures equal).
    """
    jumps = None
    if lam:
        jumps = GaussianJumpFamily(ExpCoefficient(eps * lam, beta, offset=lam), Constant(m), Constant(s))
    return ModelSpec(
        a=ExpCoefficient(0.5 * eps * b1**2, beta, offset=0.5 * b0**2),
        gamma=ExpCoefficient(eps * c1, beta, offset=c0) if c1 else Constant(c0),
        jumps=jumps, domain=domain, name="exp_eta",
        params=dict(beta=beta, b0=b0, b1=b1, c0=c0, c1=c1, eps=eps, **{"lambda": lam}, m=m, s=s),
    )


def poly_diffusion(coeffs=(0.02, 0.005, 0.002), domain=DEFAULT_DOMAIN):
    """Pure diffusion with polynomial ``a(x)``."""
    return ModelSpec(a=Polynomial(tuple(coeffs)), domain=domain, name="poly_diffusion",
                     params=dict(a=list(coeffs)))


SCHEMAS = {
    "flat": ({"sigma"}, {"gamma", "lambda", "m", "eta"}),
    "cev_gauss": ({"delta", "beta"}, {"lambda", "m", "eta"}),
    "cev": ({"delta", "beta"}, set()),
    "jdcev": ({"b", "c", "delta", "beta"}, set()),
    "nig_cev": ({"delta0", "gamma", "alpha", "beta"}, set()),
    "exp_eta": (set(), {"beta", "b0", "b1", "c0", "c1", "eps", "lambda", "m", "s"}),
    "poly_diffusion": ({"a"}, set()),
}

_BUILDERS = {
    "flat": flat, "cev_gauss": cev_gauss, "jdcev": jdcev, "nig_cev": nig_cev,
    "exp_eta": exp_eta, "poly_diffusion": poly_diffusion,
    "cev": lambda **kw: cev_gauss(lam=0.0, **kw),
}


def model_from_dict(doc: dict) -> ModelSpec:
    doc = dict(doc)
    kind = doc.pop("kind", None)
    if kind not in SCHEMAS:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(SCHEMAS)}")
    required, optional = SCHEMAS[kind]
    domain = doc.pop("domain", None)
    missing = required - doc.keys()
    unknown = doc.keys() - required - optional
    if missing:
        raise ValueError(f"model {kind!r} missing keys {sorted(missing)}")
    if unknown:
        raise ValueError(f"model {kind!r} has unknown keys {sorted(unknown)}")
    kwargs = {("lam" if k == "lambda" else k): v for k, v in doc.items()}
    if kind == "poly_diffusion":
        kwargs["coeffs"] = tuple(kwargs.pop("a"))
    if domain is not None:
        (t0, t1), (x0, x1) = domain
        kwargs["domain"] = ((float(t0), float(t1)), (float(x0), float(x1)))
    return _BUILDERS[kind](**kwargs)


def load_model(source) -> ModelSpec:
    """Load from a dict, a JSON string, or a path to a JSON file."""
    if isinstance(source, dict):
        return model_from_dict(source)
    text = str(source)
    if text.lstrip().startswith("{"):
        return model_from_dict(json.loads(text))
    return model_from_dict(json.loads(Path(text).read_text()))
