"""Sparse multivariate polynomials with exact derivatives.

Polynomials are the canonical representation for Hamiltonians and field
components: coefficient tables keyed by exponent multi-indices, giving
analytic gradients and Hessians wherever possible.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParams

_COEFF_CUTOFF = 0.0  # exact zeros only; keep tiny coefficients, they are data


class Polynomial:
    """Real polynomial in ``dim`` variables, stored as {exponents: coefficient}."""

    __slots__ = ("dim", "terms", "_cache")

    def __init__(self, dim, terms=None):
        self.dim = int(dim)
        self.terms = {}
        if terms:
            for mono, coeff in terms.items():
                mono = tuple(int(e) for e in mono)
                if len(mono) != self.dim:
                    raise InvalidParams(f"monomial {mono} does not have {self.dim} exponents")
                if any(e < 0 for e in mono):
                    raise InvalidParams(f"negative exponent in monomial {mono}")
                c = self.terms.get(mono, 0.0) + float(coeff)
                if c != _COEFF_CUTOFF:
                    self.terms[mono] = c
                elif mono in self.terms:
                    del self.terms[mono]
        self._cache = {}

    # -- construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, dim):
        return cls(dim)

    @classmethod
    def constant(cls, dim, c):
        return cls(dim, {(0,) * dim: float(c)}) if c else cls(dim)

    @classmethod
    def coordinate(cls, dim, i):
        mono = [0] * dim
        mono[i] = 1
        return cls(dim, {tuple(mono): 1.0})

    @classmethod
    def from_table(cls, dim, entries):
        """Build from a list of {"monomial": [exponents], "coeff": value} records."""
        terms = {}
        for rec in entries:
            mono = tuple(int(e) for e in rec["monomial"])
            terms[mono] = terms.get(mono, 0.0) + float(rec["coeff"])
        return cls(dim, terms)

    def to_table(self):
        return [{"monomial": list(mono), "coeff": c} for mono, c in sorted(self.terms.items())]

    # -- evaluation ------------------------------------------------------------

    def _arrays(self):
        arrs = self._cache.get("arrays")
        if arrs is None:
            if self.terms:
                monos = sorted(self.terms)
                exps = np.array(monos, dtype=np.int64)
                coeffs = np.array([self.terms[m] for m in monos])
            else:
                exps = np.zeros((0, self.dim), dtype=np.int64)
                coeffs = np.zeros(0)
            arrs = (exps, coeffs)
            self._cache["arrays"] = arrs
        return arrs

    def value(self, z):
        exps, coeffs = self._arrays()
        if coeffs.size == 0:
            return 0.0
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            return float(coeffs @ np.prod(z[None, :] ** exps, axis=1))

    def __call__(self, z):
        return self.value(z)

    def partial(self, i):
        key = ("partial", i)
        p = self._cache.get(key)
        if p is None:
            terms = {}
            for mono, coeff in self.terms.items():
                e = mono[i]
                if e:
                    new = list(mono)
                    new[i] = e - 1
                    new = tuple(new)
                    terms[new] = terms.get(new, 0.0) + coeff * e
            p = Polynomial(self.dim, terms)
            self._cache[key] = p
        return p

    def grad(self, z):
        table = self._grad_table()
        return table.evaluate(np.asarray(z, dtype=float))

    def hess(self, z):
        z = np.asarray(z, dtype=float)
        H = np.empty((self.dim, self.dim))
        for i in range(self.dim):
            pi = self.partial(i)
            for j in range(i, self.dim):
                H[i, j] = H[j, i] = pi.partial(j).value(z)
        return H

    def _grad_table(self):
        table = self._cache.get("grad_table")
        if table is None:
            table = _StackedEval([self.partial(i) for i in range(self.dim)])
            self._cache["grad_table"] = table
        return table

    # -- algebra ---------------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for mono, coeff in other.terms.items():
            c = terms.get(mono, 0.0) + coeff
            if c != 0.0:
                terms[mono] = c
            elif mono in terms:
                del terms[mono]
        return Polynomial(self.dim, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.dim, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) + (-self)

    def __mul__(self, other):
        if np.isscalar(other):
            if other == 0:
                return Polynomial(self.dim)
            return Polynomial(self.dim, {m: c * other for m, c in self.terms.items()})
        other = self._coerce(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono = tuple(a + b for a, b in zip(m1, m2))
                terms[mono] = terms.get(mono, 0.0) + c1 * c2
        return Polynomial(self.dim, terms)

    __rmul__ = __mul__

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                raise InvalidParams("polynomial dimensions differ")
            return other
        if np.isscalar(other):
            return Polynomial.constant(self.dim, other)
        raise TypeError(f"cannot combine Polynomial with {type(other)!r}")

    # -- substitutions -----------------------------------------------------------

    def embed(self, new_dim, index_map):
        """Reinterpret in a larger variable block: old variable i -> new index_map[i]."""
        terms = {}
        for mono, coeff in self.terms.items():
            new = [0] * new_dim
            for i, e in enumerate(mono):
                if e:
                    new[index_map[i]] += e
            terms[tuple(new)] = terms.get(tuple(new), 0.0) + coeff
        return Polynomial(new_dim, terms)

    def compose_linear(self, Q):
        """Substitute z = Q y, returning a polynomial in y (Q maps y-coords to z-coords)."""
        Q = np.asarray(Q, dtype=float)
        if Q.shape[0] != self.dim:
            raise InvalidParams("substitution matrix rows must match polynomial dim")
        ydim = Q.shape[1]
        lin = [Polynomial(ydim, {tuple(int(j == k) for k in range(ydim)): Q[i, j]
                                 for j in range(ydim) if Q[i, j] != 0.0})
               for i in range(self.dim)]
        out = Polynomial(ydim)
        for mono, coeff in self.terms.items():
            term = Polynomial.constant(ydim, coeff)
            for i, e in enumerate(mono):
                for _ in range(e):
                    term = term * lin[i]
            out = out + term
        return out

    def max_degree(self):
        return max((sum(m) for m in self.terms), default=0)

    def __repr__(self):
        return f"Polynomial(dim={self.dim}, terms={len(self.terms)})"


class _StackedEval:
    """Evaluate several polynomials at once with a single vectorized pass."""

    def __init__(self, polys):
        self.count = len(polys)
        exps = []
        coeffs = []
        sizes = []
        for p in polys:
            e, c = p._arrays()
            exps.append(e)
            coeffs.append(c)
            sizes.append(len(c))
        self.sizes = np.array(sizes)
        if sum(sizes) == 0:
            self.exps = None
            return
        self.exps = np.vstack([e for e in exps if e.shape[0]]) if any(sizes) else None
        self.coeffs = np.concatenate([c for c in coeffs if c.size])
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])[:-1]

    def evaluate(self, z):
        out = np.zeros(self.count)
        if self.exps is None:
            return out
        with np.errstate(over="ignore", invalid="ignore"):
            vals = self.coeffs * np.prod(z[None, :] ** self.exps, axis=1)
            sums = np.add.reduceat(vals, self.offsets[self.sizes > 0]) \
                if np.any(self.sizes > 0) else []
        out[self.sizes > 0] = sums
        return out


class MatrixPolyField:
    """Matrix-valued field on R^base_dim with polynomial entries."""

    def __init__(self, shape, entries, base_dim):
        self.shape = tuple(shape)
        self.base_dim = int(base_dim)
        self.entries = entries  # nested list [rows][cols] of Polynomial
        self._cache = {}
        for row in entries:
            for p in row:
                if p.dim != self.base_dim:
                    raise InvalidParams("entry dimension does not match base_dim")

    @classmethod
    def constant(cls, M, base_dim):
        M = np.asarray(M, dtype=float)
        entries = [[Polynomial.constant(base_dim, M[i, j]) for j in range(M.shape[1])]
                   for i in range(M.shape[0])]
        return cls(M.shape, entries, base_dim)

    @classmethod
    def from_tables(cls, shape, tables, base_dim):
        """Entries given as numbers or term-record lists, row major."""
        entries = []
        for i in range(shape[0]):
            row = []
            for j in range(shape[1]):
                spec = tables[i][j]
                if isinstance(spec, (int, float)):
                    row.append(Polynomial.constant(base_dim, spec))
                else:
                    row.append(Polynomial.from_table(base_dim, spec))
            entries.append(row)
        return cls(shape, entries, base_dim)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        stacked = self._cache.get("stacked")
        if stacked is None:
            stacked = _StackedEval([p for row in self.entries for p in row])
            self._cache["stacked"] = stacked
        return stacked.evaluate(x).reshape(self.shape)

    def __call__(self, x):
        return self.value(x)

    def partial(self, mu):
        key = ("partial", mu)
        out = self._cache.get(key)
        if out is None:
            entries = [[p.partial(mu) for p in row] for row in self.entries]
            out = MatrixPolyField(self.shape, entries, self.base_dim)
            self._cache[key] = out
        return out

    def entry(self, i, j):
        return self.entries[i][j]

    def is_constant(self):
        return all(all(sum(m) == 0 for m in p.terms) for row in self.entries for p in row)

    def to_tables(self):
        return [[p.to_table() for p in row] for row in self.entries]
