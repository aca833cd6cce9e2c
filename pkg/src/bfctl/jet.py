"""Truncated Taylor arithmetic (dual numbers of arbitrary order).

A :class:`Jet` holds the expansion ``f(z0 + e) = sum_k c[k] e**k`` truncated
after ``order`` terms.  Order 1 is the classic dual number (value and first
derivative).  Coefficients are complex numpy arrays of shape
``(order + 1, *batch)`` so a single jet can carry many expansion points, or
a whole vector of linear-form coefficients, at once.
"""

from __future__ import annotations

import math

import numpy as np


class Jet:
    __slots__ = ("c",)
    __array_priority__ = 100

    def __init__(self, coeffs):
        self.c = np.asarray(coeffs, dtype=complex)

    # construction -----------------------------------------------------
    @classmethod
    def variable(cls, z, order=1):
        z = np.asarray(z, dtype=complex)
        c = np.zeros((order + 1,) + z.shape, dtype=complex)
        c[0] = z
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def constant(cls, value, order, shape=()):
        c = np.zeros((order + 1,) + tuple(shape), dtype=complex)
        c[0] = value
        return cls(c)

    @property
    def order(self):
        return self.c.shape[0] - 1

    @property
    def shape(self):
        return self.c.shape[1:]

    @property
    def value(self):
        return self.c[0]

    def derivative(self, k=1):
        """k-th derivative at the expansion point."""
        return self.c[k] * math.factorial(k)

    def shift(self):
        """Divide by the infinitesimal: drops c[0] (assumed zero)."""
        return Jet(self.c[1:])

    def truncate(self, order):
        return Jet(self.c[: order + 1])

    # arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            return other.c
        other = np.asarray(other, dtype=complex)
        shape = np.broadcast_shapes(self.shape, other.shape)
        c = np.zeros((self.c.shape[0],) + shape, dtype=complex)
        c[0] = other
        return c

    def __add__(self, other):
        o = self._coerce(other)
        n = min(len(o), len(self.c))
        return Jet(self.c[:n] + o[:n])

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c)

    def __sub__(self, other):
        o = self._coerce(other)
        n = min(len(o), len(self.c))
        return Jet(self.c[:n] - o[:n])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * np.asarray(other, dtype=complex))
        a, b = self.c, other.c
        n = min(len(a), len(b))
        shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        out = np.zeros((n,) + shape, dtype=complex)
        for j in range(n):
            out[j:] += a[j] * b[: n - j]
        return Jet(out)

    __rmul__ = __mul__

    def reciprocal(self):
        a = self.c
        n = len(a)
        out = np.zeros_like(a)
        out[0] = 1.0 / a[0]
        for k in range(1, n):
            acc = np.sum(a[1 : k + 1] * out[k - 1 :: -1][:k], axis=0)
            out[k] = -acc * out[0]
        return Jet(out)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / np.asarray(other, dtype=complex))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError("Jet powers must be nonnegative integers")
        result = Jet.constant(1.0, self.order, self.shape)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def exp(self):
        a = self.c
        n = len(a)
        out = np.zeros_like(a)
        out[0] = np.exp(a[0])
        ja = a * np.arange(n).reshape((n,) + (1,) * (a.ndim - 1))
        for k in range(1, n):
            out[k] = np.sum(ja[1 : k + 1] * out[k - 1 :: -1][:k], axis=0) / k
        return Jet(out)

    def __repr__(self):
        return f"Jet(order={self.order}, shape={self.shape})"


def as_jet(z, order=0):
    """Promote a complex scalar/array to a jet variable; jets pass through."""
    if isinstance(z, Jet):
        return z
    return Jet.variable(z, order)


def horner(weights, z):
    """Evaluate sum_k weights[k] z**k for a jet argument."""
    w = np.asarray(weights)
    if z.order == 0:
        return Jet(np.polyval(w[::-1], z.c[0])[None])
    acc = Jet.constant(w[-1], z.order, z.shape)
    for coef in w[-2::-1]:
        acc = acc * z + coef
    return acc
