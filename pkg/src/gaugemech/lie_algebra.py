"""Finite-dimensional real Lie algebras as structure constant tensors.

Conventions: c[a][b][k] means [e_a, e_b] = sum_k c[a][b][k] e_k, antisymmetric
in (a, b). The coadjoint operator is coad(x) = -ad(x)^T on coordinates of the
dual space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (AntisymmetryViolation, DimensionMismatch, JacobiViolation,
                     NotAnIdeal, NotASubalgebra, UnknownPreset)

RANK_TOL = 1e-10

SQRT3 = float(np.sqrt(3.0))

# Totally antisymmetric su(3) constants in the Gell-Mann basis E_a = -(i/2) lambda_a,
# so [E_a, E_b] = sum_k f_abk E_k.
_SU3_F = {
    (1, 2, 3): 1.0,
    (1, 4, 7): 0.5,
    (1, 5, 6): -0.5,
    (2, 4, 6): 0.5,
    (2, 5, 7): 0.5,
    (3, 4, 5): 0.5,
    (3, 6, 7): -0.5,
    (4, 5, 8): SQRT3 / 2.0,
    (6, 7, 8): SQRT3 / 2.0,
}


def _epsilon_tensor(n=3):
    c = np.zeros((n, n, n))
    c[0, 1, 2] = c[1, 2, 0] = c[2, 0, 1] = 1.0
    c[1, 0, 2] = c[2, 1, 0] = c[0, 2, 1] = -1.0
    return c


def _su3_tensor():
    c = np.zeros((8, 8, 8))
    for (a, b, k), val in _SU3_F.items():
        for (i, j, l), sign in (
            ((a, b, k), 1.0), ((b, k, a), 1.0), ((k, a, b), 1.0),
            ((b, a, k), -1.0), ((a, k, b), -1.0), ((k, b, a), -1.0),
        ):
            c[i - 1, j - 1, l - 1] = sign * val
    return c


def _heisenberg_tensor():
    c = np.zeros((3, 3, 3))
    c[0, 1, 2] = 1.0
    c[1, 0, 2] = -1.0
    return c


@dataclass(frozen=True)
class LieAlgebra:
    """Structure constants with validity metadata."""

    dim: int
    c: np.ndarray
    basis_labels: tuple = ()
    tol: float = 1e-12
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        if self.c.shape != (self.dim, self.dim, self.dim):
            raise DimensionMismatch(f"constants must have shape ({self.dim},)*3, got {self.c.shape}")
        self.c.setflags(write=False)

    def ad(self, x):
        """Matrix of ad(x): y -> [x, y]."""
        x = self._vec(x)
        # ad(x)[k, b] = sum_a x_a c[a][b][k]
        return np.einsum("a,abk->kb", x, self.c)

    def coad(self, x):
        return -self.ad(x).T

    def bracket(self, x, y):
        x = self._vec(x)
        y = self._vec(y)
        return np.einsum("a,b,abk->k", x, y, self.c)

    def is_abelian(self, tol=1e-14):
        return float(np.max(np.abs(self.c))) <= tol

    def _vec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"vector of length {self.dim} expected, got shape {x.shape}")
        return x


@dataclass(frozen=True)
class Subspace:
    """Linearly independent column basis of a subspace of R^ambient_dim."""

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if b.shape[0] != self.ambient_dim:
            raise DimensionMismatch("basis rows must equal ambient_dim")
        if b.shape[1]:
            s = np.linalg.svd(b, compute_uv=False)
            if s[-1] <= RANK_TOL * max(1.0, s[0]):
                raise DimensionMismatch("basis vectors are not linearly independent")
        object.__setattr__(self, "basis", b)
        b.setflags(write=False)

    @property
    def dim(self):
        return self.basis.shape[1]

    def contains(self, v, tol=RANK_TOL):
        v = np.asarray(v, dtype=float)
        if self.dim == 0:
            return float(np.linalg.norm(v)) <= tol * max(1.0, float(np.linalg.norm(v)))
        proj = self.basis @ np.linalg.lstsq(self.basis, v, rcond=None)[0]
        return float(np.linalg.norm(v - proj)) <= tol * max(1.0, float(np.linalg.norm(v)))


def null_space(M, rtol=RANK_TOL):
    """Orthonormal basis (columns) of the null space of M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] == 0 or M.size == 0:
        return np.eye(M.shape[1])
    u, s, vt = np.linalg.svd(M)
    cutoff = rtol * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > cutoff))
    return vt[rank:].T


def orth_basis(M, rtol=RANK_TOL):
    """Orthonormal basis (columns) for the column span of M."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[1] == 0:
        return np.zeros((M.shape[0], 0))
    u, s, _ = np.linalg.svd(M, full_matrices=False)
    cutoff = rtol * (s[0] if s.size else 1.0)
    rank = int(np.sum(s > cutoff))
    return u[:, :rank]


_PRESETS = {}


def _register(name, fn):
    _PRESETS[name] = fn


_register("u1", lambda: np.zeros((1, 1, 1)))
_register("so3", _epsilon_tensor)
_register("su2", _epsilon_tensor)  # so(3) ~ su(2) with epsilon constants in both
_register("su3", _su3_tensor)
_register("heisenberg", _heisenberg_tensor)


def jacobi_residual(g: LieAlgebra) -> float:
    """Max over basis triples of ||[[e_a,e_b],e_c] + cyclic||_inf."""
    c = g.c
    # [[e_a,e_b],e_c]_m = sum_k c[a,b,k] c[k,c,m]
    dbl = np.einsum("abk,kcm->abcm", c, c)
    cyc = dbl + dbl.transpose(1, 2, 0, 3) + dbl.transpose(2, 0, 1, 3)
    return float(np.max(np.abs(cyc))) if cyc.size else 0.0


def _validate(c, tol, name=""):
    anti = float(np.max(np.abs(c + c.transpose(1, 0, 2)))) if c.size else 0.0
    if anti > 0.0:
        raise AntisymmetryViolation(f"constants not antisymmetric (max violation {anti:.3e})")
    g = LieAlgebra(dim=c.shape[0], c=c, tol=tol, name=name)
    res = jacobi_residual(g)
    if res > tol:
        raise JacobiViolation(res)
    return g


def build_algebra(source, tol=1e-12, basis_labels=()):
    """Build a validated algebra from a preset name or raw structure constants.

    Presets: "u1", "so3", "su2", "su3", "heisenberg", "so3+su3".
    """
    if isinstance(source, str):
        if source == "so3+su3":
            return direct_sum(build_algebra("so3", tol), build_algebra("su3", tol))
        if source not in _PRESETS:
            raise UnknownPreset(f"unknown algebra preset {source!r}")
        g = _validate(_PRESETS[source](), tol, name=source)
        return g
    c = np.asarray(source, dtype=float)
    if c.ndim != 3 or len(set(c.shape)) != 1:
        raise DimensionMismatch(f"raw constants must be an n x n x n tensor, got shape {c.shape}")
    return _validate(c, tol)


def bracket_vec(g: LieAlgebra, x, y):
    return g.bracket(x, y)


def ad_coad(g: LieAlgebra, x):
    ad = g.ad(x)
    return ad, -ad.T


def direct_sum(g1: LieAlgebra, g2: LieAlgebra) -> LieAlgebra:
    n1, n2 = g1.dim, g2.dim
    c = np.zeros((n1 + n2,) * 3)
    c[:n1, :n1, :n1] = g1.c
    c[n1:, n1:, n1:] = g2.c
    name = "+".join(s for s in (g1.name, g2.name) if s)
    return LieAlgebra(dim=n1 + n2, c=c, tol=max(g1.tol, g2.tol), name=name)


def idealizer(g: LieAlgebra, c: Subspace) -> Subspace:
    """Basis of {xi : [xi, c] subset c}, via a null-space computation."""
    if c.ambient_dim != g.dim:
        raise DimensionMismatch("subspace ambient dimension must match algebra dimension")
    n, k = g.dim, c.dim
    if k == 0:
        return Subspace(n, np.eye(n))
    comp = null_space(c.basis.T)  # orthogonal complement of span(c)
    if comp.shape[1] == 0:
        return Subspace(n, np.eye(n))
    # rows indexed by (complement direction, c-basis vector), columns by xi-coordinate
    rows = np.empty((comp.shape[1] * k, n))
    for a in range(n):
        brk = np.einsum("bk,bj->kj", g.c[a], c.basis)  # [e_a, c_j]
        rows[:, a] = (comp.T @ brk).ravel()
    return Subspace(n, null_space(rows))


def _closure_residuals(g: LieAlgebra, N: Subspace, c: Subspace):
    """(subalgebra residual of N, ideal residual of [N, c] mod c)."""
    n_basis = N.basis
    c_basis = c.basis
    perpN = null_space(n_basis.T)
    perpC = null_space(c_basis.T)
    sub = 0.0
    ideal = 0.0
    for i in range(N.dim):
        for j in range(N.dim):
            v = g.bracket(n_basis[:, i], n_basis[:, j])
            if perpN.shape[1]:
                sub = max(sub, float(np.max(np.abs(perpN.T @ v))) if v.size else 0.0)
        for j in range(c.dim):
            v = g.bracket(n_basis[:, i], c_basis[:, j])
            if perpC.shape[1]:
                ideal = max(ideal, float(np.max(np.abs(perpC.T @ v))) if v.size else 0.0)
    return sub, ideal


def quotient(g: LieAlgebra, N: Subspace, c: Subspace, tol=RANK_TOL) -> LieAlgebra:
    """Quotient algebra N/c in the orthogonal complement basis of c inside N.

    Preconditions (checked numerically): c inside N, N bracket-closed, c an
    ideal of N.
    """
    if N.ambient_dim != g.dim or c.ambient_dim != g.dim:
        raise DimensionMismatch("subspaces must live in the algebra's coordinate space")
    for j in range(c.dim):
        if not N.contains(c.basis[:, j], tol):
            raise NotASubalgebra("c is not contained in N")
    sub, ideal = _closure_residuals(g, N, c)
    if sub > tol:
        raise NotASubalgebra(f"N is not bracket-closed (residual {sub:.3e})")
    if ideal > tol:
        raise NotAnIdeal(f"c is not an ideal of N (residual {ideal:.3e})")
    if c.dim == 0:
        q = orth_basis(N.basis)
    else:
        # orthogonal complement of c within N
        proj = np.eye(g.dim) - c.basis @ np.linalg.pinv(c.basis)
        q = orth_basis(proj @ N.basis)
    m = q.shape[1]
    cq = np.zeros((m, m, m))
    for i in range(m):
        for j in range(m):
            cq[i, j] = q.T @ g.bracket(q[:, i], q[:, j])
    out = LieAlgebra(dim=m, c=0.5 * (cq - cq.transpose(1, 0, 2)), tol=max(tol, g.tol))
    res = jacobi_residual(out)
    if res > max(1e-10, tol):
        raise JacobiViolation(res, "quotient does not satisfy the Jacobi identity; "
                                   "preconditions were likely violated")
    return out


def center(g: LieAlgebra, rtol=RANK_TOL) -> Subspace:
    rows = np.vstack([g.ad(np.eye(g.dim)[a]) for a in range(g.dim)]) if g.dim else np.zeros((0, 0))
    # v central iff [e_a, v] = 0 for all a, i.e. ad(e_a) v = 0
    return Subspace(g.dim, null_space(rows, rtol))


def derived_subalgebra(g: LieAlgebra, rtol=RANK_TOL) -> Subspace:
    cols = [g.bracket(np.eye(g.dim)[a], np.eye(g.dim)[b])
            for a in range(g.dim) for b in range(a + 1, g.dim)]
    if not cols:
        return Subspace(g.dim, np.zeros((g.dim, 0)))
    return Subspace(g.dim, orth_basis(np.array(cols).T, rtol))


def constants_to_json(g: LieAlgebra) -> str:
    return json.dumps(g.c.tolist())


def constants_from_json(text, tol=1e-12) -> LieAlgebra:
    data = json.loads(text)
    return build_algebra(np.asarray(data, dtype=float), tol)
