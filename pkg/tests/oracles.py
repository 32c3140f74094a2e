"""Independent finite-difference solvers used as reference values in tests."""

import math

import numpy as np
import scipy.linalg as sl
from scipy.sparse import diags, identity
from scipy.sparse.linalg import splu
from scipy.stats import norm


def jdcev_survival_fd(b, c, delta, beta, x0, taus, lo=-12.0, hi=12.0, n=6001, dt=1e-3):
    """Crank-Nicolson solve of ``u_t = a u'' + (gamma - a) u' - gamma u``, ``u(0) = 1``.

    Returns the survival probability at ``x0`` for each maturity in ``taus``
    (multiples of ``dt``).
    """
    x = np.linspace(lo, hi, n)
    h = x[1] - x[0]
    a = 0.5 * delta**2 * np.exp(2 * beta * x)
    g = b + c * delta**2 * np.exp(2 * beta * x)
    dr = g - a
    L = diags([a[1:] / h**2 - dr[1:] / (2 * h), -2 * a / h**2 - g, a[:-1] / h**2 + dr[:-1] / (2 * h)],
              [-1, 0, 1], format="csc")
    I = identity(n, format="csc")
    lu = splu((I - 0.5 * dt * L).tocsc())
    B = I + 0.5 * dt * L
    u = np.ones(n)
    steps = {int(round(t / dt)): t for t in taus}
    out = {}
    for k in range(1, max(steps) + 1):
        u = lu.solve(B @ u)
        u[0] = 0.0  # high variance side: default is immediate
        u[-1] = math.exp(-b * k * dt)
        if k in steps:
            out[steps[k]] = float(np.interp(x0, x, u))
    return [out[t] for t in taus]


def exp_eta_put_fd(K, tau, beta=-2.0, b0=0.15, b1=0.15, lam=0.2, m=-0.2, s=0.2,
                   n=1601, lo=-5.0, hi=3.0, steps=400):
    """Put on the exponential-eta model by a dense Crank-Nicolson PIDE solve (Rannacher start)."""
    x = np.linspace(lo, hi, n)
    h = x[1] - x[0]
    a = 0.5 * (b0**2 + b1**2 * np.exp(beta * x))
    L = lam * (1.0 + np.exp(beta * x))
    drift = -a - L * (math.exp(m + 0.5 * s * s) - 1.0)
    A = np.zeros((n, n))
    i = np.arange(1, n - 1)
    A[i, i - 1] += a[i] / h**2 - drift[i] / (2 * h)
    A[i, i] += -2 * a[i] / h**2
    A[i, i + 1] += a[i] / h**2 + drift[i] / (2 * h)
    edges = np.concatenate([[-np.inf], 0.5 * (x[:-1] + x[1:]), [np.inf]])
    W = np.diff(norm.cdf(edges[None, :] - x[i, None], m, s), axis=1)
    A[i, :] += L[i, None] * W
    A[i, i] -= L[i]
    u = np.maximum(K - np.exp(x), 0.0)
    dt = tau / steps
    I = np.eye(n)

    def bc(v):
        v[0], v[-1] = K - math.exp(x[0]), 0.0
        return v

    imp = sl.lu_factor(I - 0.5 * dt * A)
    for _ in range(4):
        u = bc(sl.lu_solve(imp, u))
    B = I + 0.5 * dt * A
    for _ in range(steps - 2):
        u = bc(sl.lu_solve(imp, B @ u))
    return float(np.interp(0.0, x, u))
