"""Poisson structures as bivector-field providers.

Bracket and flow conventions: {f,g}(z) = grad f . W(z) . grad g and
df/dt = {f, H} along trajectories, i.e. dz/dt = W(z) grad H(z).

Coordinate ordering for product structures is (x^1..x^m, p_1..p_m, r_1..r_n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (DimensionMismatch, InvalidParams, JacobiViolation, NotRankZero)
from .fields import GRAD_STEP, ScalarField
from .lie_algebra import LieAlgebra, build_algebra, jacobi_residual
from .polynomials import Polynomial


class StructureFunctionField:
    """Antisymmetric n x n matrix of polynomial structure functions w_ab(r) with w_ab(0) = 0."""

    def __init__(self, n, entries):
        self.n = int(n)
        self.entries = {}
        for (a, b), poly in entries.items():
            if not 0 <= a < n and 0 <= b < n:
                raise InvalidParams("entry indices out of range")
            if a == b:
                raise InvalidParams("diagonal structure functions must vanish")
            if poly.dim != n:
                raise DimensionMismatch("structure functions must be polynomials in the n transverse coordinates")
            key = (a, b) if a < b else (b, a)
            p = poly if a < b else -poly
            self.entries[key] = self.entries.get(key, Polynomial(n)) + p
        origin = np.zeros(n)
        bad = max((abs(p.value(origin)) for p in self.entries.values()), default=0.0)
        if bad > 0.0:
            raise NotRankZero(f"w_ab(0) = {bad:.3e} is nonzero; transverse structure must have rank 0 at the origin")

    @classmethod
    def from_algebra(cls, g: LieAlgebra):
        entries = {}
        for a in range(g.dim):
            for b in range(a + 1, g.dim):
                terms = {}
                for k in range(g.dim):
                    if g.c[a, b, k] != 0.0:
                        mono = [0] * g.dim
                        mono[k] = 1
                        terms[tuple(mono)] = g.c[a, b, k]
                if terms:
                    entries[(a, b)] = Polynomial(g.dim, terms)
        return cls(g.dim, entries)

    def matrix_at(self, r):
        r = np.asarray(r, dtype=float)
        W = np.zeros((self.n, self.n))
        for (a, b), p in self.entries.items():
            v = p.value(r)
            W[a, b] = v
            W[b, a] = -v
        return W

    def partials_at(self, r):
        """T[l, a, b] = d w_ab / d r_l."""
        r = np.asarray(r, dtype=float)
        T = np.zeros((self.n, self.n, self.n))
        for (a, b), p in self.entries.items():
            g = p.grad(r)
            T[:, a, b] = g
            T[:, b, a] = -g
        return T


@dataclass(frozen=True)
class PoissonStructure:
    """Bivector-field provider; kind is canonical | lie_poisson | darboux_product | custom."""

    dim: int
    kind: str
    m: int = 0
    algebra: LieAlgebra = None
    transverse: StructureFunctionField = None
    w_fn: object = None
    coordinate_names: tuple = ()

    @property
    def n_transverse(self):
        return self.dim - 2 * self.m


def build_structure(kind, **params) -> PoissonStructure:
    """Construct a Poisson structure.

    canonical: m
    lie_poisson: algebra (LieAlgebra or preset name)
    darboux_product: m, transverse (LieAlgebra, preset name, or StructureFunctionField)
    custom: dim, w (callable point -> antisymmetric matrix)
    """
    if kind == "canonical":
        m = int(params.pop("m"))
        if params:
            raise InvalidParams(f"unexpected parameters {sorted(params)}")
        if m <= 0:
            raise InvalidParams("canonical structure needs m >= 1")
        return PoissonStructure(dim=2 * m, kind=kind, m=m)
    if kind == "lie_poisson":
        g = params.pop("algebra")
        if params:
            raise InvalidParams(f"unexpected parameters {sorted(params)}")
        if isinstance(g, str):
            g = build_algebra(g)
        if not isinstance(g, LieAlgebra):
            raise InvalidParams("lie_poisson requires a LieAlgebra")
        return PoissonStructure(dim=g.dim, kind=kind, algebra=g,
                                transverse=StructureFunctionField.from_algebra(g))
    if kind == "darboux_product":
        m = int(params.pop("m"))
        tv = params.pop("transverse")
        if params:
            raise InvalidParams(f"unexpected parameters {sorted(params)}")
        algebra = None
        if isinstance(tv, str):
            tv = build_algebra(tv)
        if isinstance(tv, LieAlgebra):
            algebra = tv
            tv = StructureFunctionField.from_algebra(tv)
        if not isinstance(tv, StructureFunctionField):
            raise InvalidParams("transverse part must be a LieAlgebra or StructureFunctionField")
        return PoissonStructure(dim=2 * m + tv.n, kind=kind, m=m, algebra=algebra, transverse=tv)
    if kind == "custom":
        dim = int(params.pop("dim"))
        w = params.pop("w")
        if params:
            raise InvalidParams(f"unexpected parameters {sorted(params)}")
        if not callable(w):
            raise InvalidParams("custom structure needs a callable bivector")
        return PoissonStructure(dim=dim, kind=kind, w_fn=w)
    raise InvalidParams(f"unknown structure kind {kind!r}")


def _check_point(P: PoissonStructure, z):
    z = np.asarray(z, dtype=float)
    if z.shape != (P.dim,):
        raise DimensionMismatch(f"point of length {P.dim} expected, got shape {z.shape}")
    return z


def bivector_at(P: PoissonStructure, z):
    z = _check_point(P, z)
    W = np.zeros((P.dim, P.dim))
    if P.kind == "canonical":
        m = P.m
        W[:m, m:2 * m] = np.eye(m)
        W[m:2 * m, :m] = -np.eye(m)
        return W
    if P.kind == "lie_poisson":
        return P.transverse.matrix_at(z)
    if P.kind == "darboux_product":
        m = P.m
        W[:m, m:2 * m] = np.eye(m)
        W[m:2 * m, :m] = -np.eye(m)
        W[2 * m:, 2 * m:] = P.transverse.matrix_at(z[2 * m:])
        return W
    W = np.asarray(P.w_fn(z), dtype=float)
    if W.shape != (P.dim, P.dim):
        raise DimensionMismatch("custom bivector has wrong shape")
    return W


def bivector_partials(P: PoissonStructure, z):
    """T[l, i, k] = d W^{ik} / d z_l, analytic for built-ins, central FD for custom."""
    z = _check_point(P, z)
    d = P.dim
    T = np.zeros((d, d, d))
    if P.kind == "canonical":
        return T
    if P.kind == "lie_poisson":
        return P.transverse.partials_at(z)
    if P.kind == "darboux_product":
        s = 2 * P.m
        T[s:, s:, s:] = P.transverse.partials_at(z[s:])
        return T
    for l in range(d):
        h = GRAD_STEP * max(1.0, abs(z[l]))
        zp = z.copy()
        zm = z.copy()
        zp[l] += h
        zm[l] -= h
        T[l] = (np.asarray(P.w_fn(zp), dtype=float) - np.asarray(P.w_fn(zm), dtype=float)) / (2.0 * h)
    return T


def poisson_bracket(P: PoissonStructure, f: ScalarField, g: ScalarField, z) -> float:
    if f.dim != P.dim or g.dim != P.dim:
        raise DimensionMismatch("fields must match the structure dimension")
    z = _check_point(P, z)
    return float(f.grad(z) @ bivector_at(P, z) @ g.grad(z))


def hamiltonian_vector(P: PoissonStructure, H: ScalarField, z):
    if H.dim != P.dim:
        raise DimensionMismatch("Hamiltonian must match the structure dimension")
    z = _check_point(P, z)
    return bivector_at(P, z) @ H.grad(z)


def jacobi_residual_at(P: PoissonStructure, z) -> float:
    """Max over (i,j,k) of |w^{lj} d_l w^{ik} + w^{li} d_l w^{kj} + w^{lk} d_l w^{ji}|."""
    z = _check_point(P, z)
    W = bivector_at(P, z)
    T = bivector_partials(P, z)
    S = (np.einsum("lj,lik->ijk", W, T)
         + np.einsum("li,lkj->ijk", W, T)
         + np.einsum("lk,lji->ijk", W, T))
    return float(np.max(np.abs(S))) if S.size else 0.0


def casimir_residual(P: PoissonStructure, f: ScalarField, samples) -> float:
    """Max over sample points of ||W(z) grad f(z)||; ~0 iff f is a Casimir there."""
    worst = 0.0
    for z in samples:
        z = _check_point(P, z)
        worst = max(worst, float(np.linalg.norm(bivector_at(P, z) @ f.grad(z))))
    return worst


def linearize_transverse(source, tol=1e-8) -> LieAlgebra:
    """Structure constants c[a][b][k] = d w_ab / d r_k at 0 of a rank-0 transverse block.

    Accepts a StructureFunctionField or a darboux_product / lie_poisson structure.
    """
    if isinstance(source, PoissonStructure):
        if source.transverse is None:
            raise InvalidParams("structure has no transverse block to linearize")
        field = source.transverse
    elif isinstance(source, StructureFunctionField):
        field = source
    else:
        raise InvalidParams("expected a StructureFunctionField or product structure")
    n = field.n
    T = field.partials_at(np.zeros(n))
    c = np.einsum("kab->abk", T)
    c = 0.5 * (c - c.transpose(1, 0, 2))
    g = LieAlgebra(dim=n, c=c, tol=tol)
    res = jacobi_residual(g)
    if res > tol:
        raise JacobiViolation(res, "linearized transverse part violates the Jacobi identity; "
                                   "the input structure functions are not Poisson")
    return g


def default_casimirs(P: PoissonStructure):
    """Casimir fields tracked by default: |r|^2 for epsilon-constant factors, coordinates for abelian ones."""
    out = []
    if P.algebra is None or P.kind == "canonical":
        return out
    offset = 2 * P.m if P.kind == "darboux_product" else 0
    g = P.algebra
    eps = build_algebra("so3").c
    if g.dim == 3 and np.allclose(g.c, eps, atol=1e-12):
        terms = {}
        for k in range(3):
            mono = [0] * P.dim
            mono[offset + k] = 2
            terms[tuple(mono)] = 1.0
        out.append(ScalarField.from_polynomial(Polynomial(P.dim, terms)))
    elif g.is_abelian():
        for k in range(g.dim):
            out.append(ScalarField.coordinate(P.dim, offset + k))
    return out
