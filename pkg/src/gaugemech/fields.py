"""Scalar fields with value/gradient/Hessian access.

Polynomial-backed fields differentiate analytically; plain callables fall
back to central finite differences with the step rules
h_grad = eps^(1/3) * max(1, |z_i|) and h_hess = eps^(1/4) * max(1, |z_i|).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .polynomials import Polynomial

_EPS = np.finfo(float).eps
GRAD_STEP = _EPS ** (1.0 / 3.0)
HESS_STEP = _EPS ** 0.25


def fd_grad(fn, z, step=GRAD_STEP):
    z = np.asarray(z, dtype=float)
    g = np.empty(z.size)
    for i in range(z.size):
        h = step * max(1.0, abs(z[i]))
        zp = z.copy()
        zm = z.copy()
        zp[i] += h
        zm[i] -= h
        g[i] = (fn(zp) - fn(zm)) / (2.0 * h)
    return g


def fd_hess(fn, z, step=HESS_STEP):
    z = np.asarray(z, dtype=float)
    d = z.size
    H = np.empty((d, d))
    hs = np.array([step * max(1.0, abs(z[i])) for i in range(d)])
    f0 = fn(z)
    for i in range(d):
        zp = z.copy()
        zm = z.copy()
        zp[i] += hs[i]
        zm[i] -= hs[i]
        H[i, i] = (fn(zp) - 2.0 * f0 + fn(zm)) / hs[i] ** 2
        for j in range(i + 1, d):
            zpp = z.copy()
            zpm = z.copy()
            zmp = z.copy()
            zmm = z.copy()
            zpp[[i, j]] += [hs[i], hs[j]]
            zpm[[i, j]] += [hs[i], -hs[j]]
            zmp[[i, j]] += [-hs[i], hs[j]]
            zmm[[i, j]] += [-hs[i], -hs[j]]
            H[i, j] = H[j, i] = (fn(zpp) - fn(zpm) - fn(zmp) + fn(zmm)) / (4.0 * hs[i] * hs[j])
    return H


class ScalarField:
    """Function R^dim -> R with gradient and Hessian providers."""

    def __init__(self, dim, value_fn, grad_fn=None, hess_fn=None, poly=None):
        self.dim = int(dim)
        self._value = value_fn
        self._grad = grad_fn
        self._hess = hess_fn
        self.poly = poly

    @classmethod
    def from_polynomial(cls, poly: Polynomial):
        return cls(poly.dim, poly.value, poly.grad, poly.hess, poly=poly)

    @classmethod
    def from_table(cls, dim, entries):
        return cls.from_polynomial(Polynomial.from_table(dim, entries))

    @classmethod
    def from_callable(cls, dim, fn, grad_fn=None, hess_fn=None):
        return cls(dim, fn, grad_fn, hess_fn)

    @classmethod
    def coordinate(cls, dim, i):
        return cls.from_polynomial(Polynomial.coordinate(dim, i))

    @classmethod
    def constant(cls, dim, c):
        return cls.from_polynomial(Polynomial.constant(dim, c))

    def _check(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != (self.dim,):
            raise DimensionMismatch(f"expected point of length {self.dim}, got shape {z.shape}")
        return z

    def value(self, z):
        return float(self._value(self._check(z)))

    def __call__(self, z):
        return self.value(z)

    def grad(self, z):
        z = self._check(z)
        if self._grad is not None:
            return np.asarray(self._grad(z), dtype=float)
        return fd_grad(self._value, z)

    def hess(self, z):
        z = self._check(z)
        if self._hess is not None:
            H = np.asarray(self._hess(z), dtype=float)
        else:
            H = fd_hess(self._value, z)
        return 0.5 * (H + H.T)

    def scaled(self, a):
        if self.poly is not None:
            return ScalarField.from_polynomial(self.poly * a)
        return ScalarField(self.dim, lambda z: a * self._value(z),
                           (lambda z: a * np.asarray(self._grad(z))) if self._grad else None,
                           (lambda z: a * np.asarray(self._hess(z))) if self._hess else None)

    def plus(self, other):
        if self.poly is not None and other.poly is not None:
            return ScalarField.from_polynomial(self.poly + other.poly)
        return ScalarField(self.dim, lambda z: self.value(z) + other.value(z),
                           lambda z: self.grad(z) + other.grad(z),
                           lambda z: self.hess(z) + other.hess(z))
