"""Invariant-subspace and isotypic computations for constrained charge algebras.

Invariance is computed infinitesimally (joint kernels of the generating
operators); isotypic multiplicities come from the spectrum of the quadratic
Casimir of a distinguished su(2) triple.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, GaugemechError, NotASubalgebra, NotSu2Triple, UnsupportedPower
from .lie_algebra import (LieAlgebra, Subspace, build_algebra, center, derived_subalgebra,
                          idealizer, jacobi_residual, null_space, quotient)

SVD_ZERO = 1e-9
ANNIHILATION_TOL = 1e-9


@dataclass
class LinearRep:
    """Generators of a linear action on R^dim (infinitesimal, one matrix per chosen element)."""

    dim: int
    generators: list

    def __post_init__(self):
        self.generators = [np.asarray(G, dtype=float) for G in self.generators]
        for G in self.generators:
            if G.shape != (self.dim, self.dim):
                raise DimensionMismatch("generator shape does not match the representation space")

    def closure_residual(self):
        """How far commutators of generators fall outside the generator span (reported, not enforced)."""
        if len(self.generators) < 2:
            return 0.0
        flat = np.array([G.ravel() for G in self.generators]).T
        pinv = np.linalg.pinv(flat)
        worst = 0.0
        for i, Gi in enumerate(self.generators):
            for Gj in self.generators[i + 1:]:
                comm = (Gi @ Gj - Gj @ Gi).ravel()
                res = comm - flat @ (pinv @ comm)
                worst = max(worst, float(np.max(np.abs(res))) if res.size else 0.0)
        return worst


@dataclass
class InvariantSpace:
    """Orthonormal basis of a joint-kernel subspace."""

    ambient_dim: int
    basis: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[1]


def annihilator(g: LieAlgebra, c: Subspace) -> Subspace:
    """Annihilator of c inside the dual, in dual coordinates: {l : l(c) = 0}."""
    if c.ambient_dim != g.dim:
        raise DimensionMismatch("subspace must live in the algebra coordinates")
    if c.dim == 0:
        return Subspace(g.dim, np.eye(g.dim))
    return Subspace(g.dim, null_space(c.basis.T))


def _subalgebra_residual(g: LieAlgebra, c: Subspace):
    perp = null_space(c.basis.T)
    worst = 0.0
    for i in range(c.dim):
        for j in range(i + 1, c.dim):
            v = g.bracket(c.basis[:, i], c.basis[:, j])
            if perp.shape[1]:
                worst = max(worst, float(np.max(np.abs(perp.T @ v))))
    return worst


def induced_quotient_action(g: LieAlgebra, c: Subspace, tol=1e-10):
    """Reps of c on g/c (projected adjoint) and on the annihilator (restricted coadjoint).

    Both are expressed in the same orthonormal complement basis, so the two
    generator lists are exactly mutual negative transposes.
    """
    res = _subalgebra_residual(g, c)
    if res > tol:
        raise NotASubalgebra(f"c is not bracket-closed (residual {res:.3e})")
    B = null_space(c.basis.T)
    gens_quot = [B.T @ g.ad(c.basis[:, j]) @ B for j in range(c.dim)]
    gens_ann = [B.T @ g.coad(c.basis[:, j]) @ B for j in range(c.dim)]
    return LinearRep(B.shape[1], gens_quot), LinearRep(B.shape[1], gens_ann), B


def sym_monomials(dim, k):
    return list(itertools.combinations_with_replacement(range(dim), k))


def sym_power_rep(rep: LinearRep, k) -> LinearRep:
    """Leibniz extension of each generator to the k-th symmetric power, k in {1,2,3}."""
    if k not in (1, 2, 3):
        raise UnsupportedPower(f"symmetric power {k} not supported")
    if k == 1:
        return LinearRep(rep.dim, [G.copy() for G in rep.generators])
    monos = sym_monomials(rep.dim, k)
    index = {mono: i for i, mono in enumerate(monos)}
    N = len(monos)
    gens = []
    for G in rep.generators:
        M = np.zeros((N, N))
        for col, mono in enumerate(monos):
            for slot in range(k):
                for j in range(rep.dim):
                    coeff = G[j, mono[slot]]
                    if coeff == 0.0:
                        continue
                    new = tuple(sorted(mono[:slot] + (j,) + mono[slot + 1:]))
                    M[index[new], col] += coeff
        gens.append(M)
    return LinearRep(N, gens)


def invariant_subspace(rep: LinearRep, zero_tol=SVD_ZERO) -> InvariantSpace:
    """Joint null space of all generators (SVD based).

    The zero cutoff is zero_tol relative to max(largest singular value, 1):
    generators are integer-or-half-integer valued in natural bases, so unit
    scale is the reference and numerically-zero generators annihilate everything.
    """
    if not rep.generators:
        return InvariantSpace(rep.dim, np.eye(rep.dim))
    stacked = np.vstack(rep.generators)
    u, s, vt = np.linalg.svd(stacked)
    cutoff = zero_tol * max(float(s[0]) if s.size else 0.0, 1.0)
    rank = int(np.sum(s > cutoff))
    return InvariantSpace(rep.dim, vt[rank:].T)


def annihilation_residual(rep: LinearRep, space: InvariantSpace):
    worst = 0.0
    for G in rep.generators:
        img = G @ space.basis
        worst = max(worst, float(np.max(np.abs(img))) if img.size else 0.0)
    return worst


def restrict_rep(rep: LinearRep, space: InvariantSpace, tol=1e-8):
    """Restrict generators to an invariant subspace; returns (rep, invariance residual)."""
    B = space.basis
    gens = []
    worst = 0.0
    for G in rep.generators:
        R = B.T @ G @ B
        worst = max(worst, float(np.max(np.abs(G @ B - B @ R))) if B.size else 0.0)
        gens.append(R)
    return LinearRep(space.dim, gens), worst


def casimir_spectrum(sub_rep: LinearRep, space: InvariantSpace,
                     su2_tol=1e-8, cluster_tol=1e-6):
    """Eigenvalue/multiplicity multiset of J1^2 + J2^2 + J3^2 on the given subspace.

    The three generators must satisfy [J1,J2]=J3 (cyclic) after restriction;
    eigenvalues follow the -j(j+1) pattern of the real antisymmetric form.
    """
    if len(sub_rep.generators) != 3:
        raise NotSu2Triple("need exactly three generators")
    restricted, inv_res = restrict_rep(sub_rep, space)
    if inv_res > su2_tol:
        raise NotSu2Triple(f"generators do not preserve the subspace (residual {inv_res:.3e})")
    J = restricted.generators
    worst = 0.0
    for a, b, cidx in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        worst = max(worst, float(np.max(np.abs(J[a] @ J[b] - J[b] @ J[a] - J[cidx]))))
    if worst > su2_tol:
        raise NotSu2Triple(f"commutation relations violated (residual {worst:.3e})")
    C = J[0] @ J[0] + J[1] @ J[1] + J[2] @ J[2]
    # the basis need not be orthonormal for the natural inner product, so C is
    # only similar to a symmetric matrix; its spectrum is real regardless
    eigs = np.linalg.eigvals(C)
    if float(np.max(np.abs(np.imag(eigs)))) > su2_tol:
        raise NotSu2Triple("Casimir spectrum is not real; generators are inconsistent")
    clusters = []
    for lam in np.sort(np.real(eigs)):
        placed = False
        for cl in clusters:
            if abs(cl[0] - lam) <= cluster_tol * max(1.0, abs(cl[0])):
                cl[1] += 1
                placed = True
                break
        if not placed:
            clusters.append([float(lam), 1])
    clusters.sort(key=lambda cl: -cl[0])  # 0 first, then increasingly negative
    return [(cl[0], cl[1]) for cl in clusters]


def spin_of_eigenvalue(lam):
    """j with j(j+1) = -lam, rounded to the nearest half-integer."""
    j = 0.5 * (-1.0 + np.sqrt(max(0.0, 1.0 - 4.0 * lam)))
    return round(2.0 * j) / 2.0


# --- canned reduction computation (so3 + su3 with the diagonal circle) --------


def manton_generator():
    """Diagonal u(1) generator inside so3 (+) su3 in library coordinates."""
    xi = np.zeros(11)
    xi[2] = 1.0                  # rotation generator in the so3 factor
    xi[10] = -2.0 * np.sqrt(3.0)  # hypercharge direction in the su3 factor
    return xi


def _weight_multiplicities(G, tol=1e-8):
    """Real dimensions per |imaginary eigenvalue| cluster of a real matrix."""
    eigs = np.linalg.eigvals(G)
    weights = {}
    for lam in eigs:
        w = abs(float(np.imag(lam)))
        key = None
        for existing in weights:
            if abs(existing - w) <= tol * max(1.0, existing):
                key = existing
                break
        if key is None:
            weights[w] = 1
        else:
            weights[key] += 1
    return {round(w, 8): mult for w, mult in sorted(weights.items())}


def _weight_block(G, w, tol=SVD_ZERO):
    """Real invariant subspace for weight w: kernel of G (w=0) or of G^2 + w^2 I."""
    if w == 0:
        return null_space(G, rtol=tol)
    return null_space(G @ G + (w ** 2) * np.eye(G.shape[0]), rtol=tol)


@dataclass
class ReductionReport:
    dim_g: int
    dim_c: int
    dim_annihilator: int
    dim_idealizer: int
    dim_reduced_algebra: int
    reduced_center_dim: int
    reduced_derived_dim: int
    reduced_jacobi_residual: float
    weight_multiplicities: dict
    dim_s2_invariants: int
    s2_block_dims: tuple
    reduced_invariant_dim: int
    isotypic: list            # (eigenvalue, spin, multiplicity)
    residuals: dict
    elapsed_seconds: float

    EXPECTED = {
        "dim_g": 11,
        "dim_c": 1,
        "dim_annihilator": 10,
        "dim_idealizer": 5,
        "dim_reduced_algebra": 4,
        "reduced_center_dim": 1,
        "reduced_derived_dim": 3,
        "weight_multiplicities": {0.0: 4, 1.0: 2, 3.0: 4},
        "dim_s2_invariants": 15,
        "s2_block_dims": (10, 1, 4),
        "reduced_invariant_dim": 4,
        "isotypic_dims": {0.0: 4, 1.0: 6, 2.0: 5},
    }

    def isotypic_dims(self):
        return {spin: mult for _, spin, mult in self.isotypic}

    def mismatches(self):
        bad = []
        for key, want in self.EXPECTED.items():
            got = self.isotypic_dims() if key == "isotypic_dims" else getattr(self, key)
            if isinstance(want, dict):
                got = {float(k): int(v) for k, v in got.items()}
                want = {float(k): int(v) for k, v in want.items()}
            if got != want:
                bad.append((key, want, got))
        return bad

    def to_json(self):
        data = {
            "dim_g": self.dim_g,
            "dim_c": self.dim_c,
            "dim_annihilator": self.dim_annihilator,
            "dim_idealizer": self.dim_idealizer,
            "dim_reduced_algebra": self.dim_reduced_algebra,
            "reduced_center_dim": self.reduced_center_dim,
            "reduced_derived_dim": self.reduced_derived_dim,
            "reduced_jacobi_residual": self.reduced_jacobi_residual,
            "weight_multiplicities": {str(k): v for k, v in self.weight_multiplicities.items()},
            "dim_s2_invariants": self.dim_s2_invariants,
            "s2_block_dims": list(self.s2_block_dims),
            "reduced_invariant_dim": self.reduced_invariant_dim,
            "isotypic": [{"eigenvalue": e, "spin": s, "multiplicity": mult}
                         for e, s, mult in self.isotypic],
            "residuals": self.residuals,
            "elapsed_seconds": self.elapsed_seconds,
        }
        return json.dumps(data, indent=2, sort_keys=True)

    def format_table(self):
        lines = [
            "reduction report: so3 (+) su3 with diagonal u(1) constraint",
            f"  dim g                     {self.dim_g}",
            f"  dim c                     {self.dim_c}",
            f"  dim annihilator c0        {self.dim_annihilator}",
            f"  dim idealizer N(c)        {self.dim_idealizer}",
            f"  dim reduced algebra       {self.dim_reduced_algebra} "
            f"(center {self.reduced_center_dim}, derived {self.reduced_derived_dim}; u(2) signature)",
            f"  reduced Jacobi residual   {self.reduced_jacobi_residual:.2e}",
            f"  weight multiplicities     "
            + ", ".join(f"|n|={w:g}: {m}" for w, m in self.weight_multiplicities.items()),
            f"  dim S^2(c0) invariants    {self.dim_s2_invariants} "
            f"(blocks {'/'.join(str(b) for b in self.s2_block_dims)})",
            f"  reduced-invariant dim     {self.reduced_invariant_dim}",
            "  su(2) isotypic            "
            + ", ".join(f"spin {s:g}: dim {mult} (eig {e:+.3f})" for e, s, mult in self.isotypic),
            f"  elapsed                   {self.elapsed_seconds:.3f} s",
        ]
        return "\n".join(lines)


def manton_report(c0_rotation=None) -> ReductionReport:
    """Run the full constrained-charge reduction pipeline and verify every dimension.

    c0_rotation optionally replaces the annihilator basis B by B @ Q for an
    orthogonal Q (the reported dimensions and spectra must not change).
    """
    t0 = time.time()
    g = build_algebra("so3+su3", tol=1e-12)
    xi = manton_generator()
    c = Subspace(11, xi[:, None])

    ideal = idealizer(g, c)
    reduced = quotient(g, ideal, c)
    red_center = center(reduced)
    red_derived = derived_subalgebra(reduced)
    red_jac = jacobi_residual(reduced)

    ann = annihilator(g, c)
    _, c0_rep, B = induced_quotient_action(g, c)
    if c0_rotation is not None:
        Q = np.asarray(c0_rotation, dtype=float)
        if Q.shape != (B.shape[1], B.shape[1]):
            raise DimensionMismatch("rotation must act on the annihilator coordinates")
        B = B @ Q
        c0_rep = LinearRep(B.shape[1], [B.T @ g.coad(c.basis[:, 0]) @ B])

    G10 = c0_rep.generators[0]
    weights = _weight_multiplicities(G10)

    s2 = sym_power_rep(c0_rep, 2)
    inv = invariant_subspace(s2)
    inv_res = annihilation_residual(s2, inv)

    block_dims = []
    for w in sorted(weights):
        Vw = _weight_block(G10, w)
        gw = Vw.T @ G10 @ Vw
        s2w = sym_power_rep(LinearRep(Vw.shape[1], [gw]), 2)
        block_dims.append(invariant_subspace(s2w).dim)

    # action of the full idealizer on the invariant subspace
    ideal_gens_c0 = [B.T @ g.coad(ideal.basis[:, j]) @ B for j in range(ideal.dim)]
    ideal_s2 = sym_power_rep(LinearRep(B.shape[1], ideal_gens_c0), 2)
    restricted, restr_res = restrict_rep(ideal_s2, inv)
    reduced_inv = invariant_subspace(restricted)

    # su(2) triple inside the idealizer: the su3-factor directions 1..3
    triple = []
    for idx in (3, 4, 5):
        e = np.eye(11)[idx]
        triple.append(B.T @ g.coad(e) @ B)
    triple_s2 = sym_power_rep(LinearRep(B.shape[1], triple), 2)
    spectrum = casimir_spectrum(triple_s2, inv)
    isotypic = [(lam, spin_of_eigenvalue(lam), mult) for lam, mult in spectrum]

    report = ReductionReport(
        dim_g=g.dim,
        dim_c=c.dim,
        dim_annihilator=ann.dim,
        dim_idealizer=ideal.dim,
        dim_reduced_algebra=reduced.dim,
        reduced_center_dim=red_center.dim,
        reduced_derived_dim=red_derived.dim,
        reduced_jacobi_residual=red_jac,
        weight_multiplicities=weights,
        dim_s2_invariants=inv.dim,
        s2_block_dims=tuple(block_dims),
        reduced_invariant_dim=reduced_inv.dim,
        isotypic=isotypic,
        residuals={
            "invariant_annihilation": inv_res,
            "idealizer_restriction": restr_res,
            "sum_rule_gap": abs(sum(m for _, _, m in isotypic) - inv.dim),
        },
        elapsed_seconds=time.time() - t0,
    )
    if sum(block_dims) != inv.dim:
        raise GaugemechError(f"weight-block invariants {block_dims} do not add up to {inv.dim}")
    bad = report.mismatches()
    if bad:
        raise GaugemechError("reduction report mismatch: "
                             + "; ".join(f"{k}: expected {w}, got {b}" for k, w, b in bad))
    return report
