"""Truncated Taylor series ("jets") in a complex variable.

A :class:`Jet` of order ``D`` about ``center`` stores the normalized Taylor
coefficients ``c_k = f^(k)(center) / k!`` for ``k = 0..D``.  Coefficients
carry an optional batch shape so that one jet can describe the same
function at many centers at once (e.g. every node of a Fourier contour);
``coeffs`` has shape ``(D + 1, *batch)``.

Non-jet operands in arithmetic are treated as batch-shaped constants.
"""

from __future__ import annotations

import numpy as np

from .errors import BranchError, JetError


def _align(coeffs, other):
    """Reshape ``coeffs`` (order axis first) and a batch-shaped ``other`` so that
    batch dimensions broadcast numpy-style, aligned from the right."""
    other = np.asarray(other)
    b, o = coeffs.shape[1:], other.shape
    n = max(len(b), len(o))
    coeffs = coeffs.reshape(coeffs.shape[:1] + (1,) * (n - len(b)) + b)
    return coeffs, other.reshape((1,) * (n - len(o) + 1) + o)


class Jet:
    __slots__ = ("center", "coeffs")

    def __init__(self, center, coeffs):
        self.center = np.asarray(center, dtype=complex)
        self.coeffs = np.asarray(coeffs, dtype=complex)
        if self.coeffs.ndim == 0:
            self.coeffs = self.coeffs[None]

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, center, order):
        center = np.asarray(center, dtype=complex)
        value = np.asarray(value, dtype=complex)
        shape = np.broadcast_shapes(value.shape, center.shape)
        coeffs = np.zeros((order + 1,) + shape, dtype=complex)
        coeffs[0] = value
        return cls(center, coeffs)

    @classmethod
    def variable(cls, center, order):
        """Jet of the identity map ``xi -> xi``."""
        center = np.asarray(center, dtype=complex)
        coeffs = np.zeros((order + 1,) + center.shape, dtype=complex)
        coeffs[0] = center
        if order >= 1:
            coeffs[1] = 1.0
        return cls(center, coeffs)

    @classmethod
    def polynomial(cls, poly, center, order):
        """Jet of ``sum_k poly[k] * xi**k`` (coefficients in increasing degree)."""
        var = cls.variable(center, order)
        out = cls.constant(0.0, center, order)
        for c in reversed(list(poly)):
            out = out * var + c
        return out

    # -- basic properties ---------------------------------------------------
    @property
    def order(self):
        return self.coeffs.shape[0] - 1

    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]

    def value(self):
        return self.coeffs[0]

    def __repr__(self):
        return f"Jet(order={self.order}, batch={self.batch_shape})"

    def _check(self, other):
        if self.center is not other.center:
            try:
                same = bool(np.all(self.center == other.center))
            except ValueError:
                same = False
            if not same:
                raise JetError("jets expanded about different centers")
        if self.order != other.order:
            raise JetError(f"jet order mismatch: {self.order} vs {other.order}")

    def truncate(self, order):
        if order > self.order:
            raise JetError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.center, self.coeffs[: order + 1])

    def derivative(self):
        if self.order == 0:
            raise JetError("derivative of an order-0 jet exhausts the budget")
        k = np.arange(1, self.order + 1).reshape((-1,) + (1,) * len(self.batch_shape))
        return Jet(self.center, self.coeffs[1:] * k)

    def __call__(self, dxi):
        """Evaluate the truncated series at ``center + dxi``."""
        out = np.zeros(np.broadcast_shapes(self.batch_shape, np.shape(dxi)), dtype=complex)
        for c in self.coeffs[::-1]:
            out = out * dxi + c
        return out

    # -- arithmetic ---------------------------------------------------------
    def __neg__(self):
        return Jet(self.center, -self.coeffs)

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            a = _align(self.coeffs, other.coeffs[0])[0]
            return Jet(self.center, a + _align(other.coeffs, a[0])[0])
        coeffs, o = _align(self.coeffs, other)
        coeffs = coeffs + np.zeros_like(o, dtype=complex)
        coeffs[0] = coeffs[0] + o[0]
        return Jet(self.center, coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            c, o = _align(self.coeffs, other)
            return Jet(self.center, c * o)
        self._check(other)
        a, b = _align(self.coeffs, other.coeffs[0])[0], other.coeffs
        b = _align(b, a[0])[0]
        D = a.shape[0] - 1
        out = np.zeros((D + 1,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]), dtype=complex)
        for j in range(D + 1):
            out[j:] += a[j] * b[: D + 1 - j]
        return Jet(self.center, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            c, o = _align(self.coeffs, other)
            return Jet(self.center, c / o)
        return self * other.reciprocal()

    def reciprocal(self):
        g = self.coeffs
        D = g.shape[0] - 1
        r = np.zeros_like(g)
        r[0] = 1.0 / g[0]
        for k in range(1, D + 1):
            acc = np.zeros_like(g[0])
            for j in range(1, k + 1):
                acc = acc + g[j] * r[k - j]
            r[k] = -acc * r[0]
        return Jet(self.center, r)

    def exp(self):
        # g' = g f'  =>  k g_k = sum_{j=1..k} j f_j g_{k-j}
        f = self.coeffs
        D = f.shape[0] - 1
        g = np.zeros_like(f)
        g[0] = np.exp(f[0])
        for k in range(1, D + 1):
            acc = np.zeros_like(f[0])
            for j in range(1, k + 1):
                acc = acc + j * f[j] * g[k - j]
            g[k] = acc / k
        return Jet(self.center, g)

    def log(self):
        g = self.coeffs
        D = g.shape[0] - 1
        f = np.zeros_like(g)
        f[0] = np.log(g[0])
        for k in range(1, D + 1):
            acc = np.zeros_like(g[0])
            for j in range(1, k):
                acc = acc + j * f[j] * g[k - j]
            f[k] = (g[k] - acc / k) / g[0]
        return Jet(self.center, f)

    def sqrt(self):
        """Principal-branch square root; the caller guards the branch cut."""
        g = self.coeffs
        D = g.shape[0] - 1
        s = np.zeros_like(g)
        s[0] = np.sqrt(g[0])
        for k in range(1, D + 1):
            acc = np.zeros_like(g[0])
            for j in range(1, k):
                acc = acc + s[j] * s[k - j]
            s[k] = (g[k] - acc) / (2.0 * s[0])
        return Jet(self.center, s)

    def polyval(self, poly):
        """Compose ``sum_k poly[k] * f**k`` with this jet (Horner)."""
        out = Jet.constant(0.0, self.center, self.order)
        for c in reversed(list(poly)):
            out = out * self + c
        return out


# -- elementary families ----------------------------------------------------

def gaussian_cf_jet(m, delta, center, order):
    """Jet of ``exp(i m xi - delta^2 xi^2 / 2)``; ``m``/``delta`` may be batch arrays."""
    X = Jet.variable(center, order)
    m = np.asarray(m, dtype=float)
    d2 = np.asarray(delta, dtype=float) ** 2
    return (X * (1j * m) - (X * X) * (0.5 * d2)).exp()


def exp_linear_jet(c, center, order):
    """Jet of ``exp(c xi)``."""
    return (Jet.variable(center, order) * c).exp()


def nig_strip(alpha, beta):
    """Open interval of admissible ``Im xi`` for the NIG symbol."""
    return (beta - alpha, beta + alpha)


def nig_unit_jump_jet(alpha, beta, center, order, tol=1e-10):
    """Jet of the NIG jump part per unit scale ``delta = 1``.

    ``chi(xi) = -(sqrt(alpha^2 - (beta + i xi)^2) - sqrt(alpha^2 - beta^2))
    - i xi beta / sqrt(alpha^2 - beta^2)``, which vanishes to second order at
    ``xi = 0`` and is of the form ``int (e^{i z xi} - 1 - i z xi) nu(dz)``.
    """
    X = Jet.variable(center, order)
    inner = alpha**2 - (X * 1j + beta) * (X * 1j + beta)
    v = inner.value()
    if np.any(np.abs(v) < tol) or np.any((v.real <= 0) & (np.abs(v.imag) <= tol * np.abs(v))):
        raise BranchError(
            f"NIG symbol evaluated within {tol:g} of its branch cut "
            f"(alpha={alpha}, beta={beta})"
        )
    g = np.sqrt(alpha**2 - beta**2)
    return -(inner.sqrt() - g) - X * (1j * beta / g)


def nig_unit_jump(alpha, beta, xi):
    """Scalar NIG jump symbol per unit scale (principal branch)."""
    xi = np.asarray(xi, dtype=complex)
    g = np.sqrt(alpha**2 - beta**2)
    return -(np.sqrt(alpha**2 - (beta + 1j * xi) ** 2) - g) - 1j * xi * beta / g
