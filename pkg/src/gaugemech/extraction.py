"""Field extraction from the vertical 2-jet of a Hamiltonian.

A Hamiltonian on the product phase space (x, p, r) whose differential vanishes
on the base X = {p = 0, r = 0} defines, through its fiber-direction Hessian
blocks, an inverse metric (Hpp), a gauge potential (Hpp^-1 Hpr, so the
connection covector at d/dx^mu reads dp_mu + A^a_mu dr_a), and an inverse
scalar-product field (the Schur complement Hrr - Hrp Hpp^-1 Hpr). The
quadratic normalization throughout is v -> (1/2) Q(v, v).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (BaseBlockSingular, DifferentialNotVanishing, DimensionMismatch,
                     IndexOutOfRange, InvalidParams, NotAutomorphism, SingularBlock)
from .fields import GRAD_STEP, ScalarField
from .lie_algebra import LieAlgebra
from .matutil import cond, expm, phi1, symmetrize
from .polynomials import MatrixPolyField, Polynomial

COND_LIMIT = 1e12


@dataclass(frozen=True)
class VerticalJet:
    """Fiber-direction Hessian blocks of a Hamiltonian at (x, 0, 0)."""

    x: np.ndarray
    m: int
    n: int
    Hpp: np.ndarray
    Hpr: np.ndarray
    Hrr: np.ndarray
    grad_norm: float = 0.0

    def full_matrix(self):
        top = np.hstack([self.Hpp, self.Hpr])
        bot = np.hstack([self.Hpr.T, self.Hrr])
        return np.vstack([top, bot])


@dataclass(frozen=True)
class SWFields:
    """Extracted triple: inverse metric, gauge potential, inverse scalar product."""

    gamma_inv: np.ndarray
    A: np.ndarray
    chi_inv: np.ndarray
    cond_gamma: float
    degenerate: bool

    def rebuild_jet_matrix(self):
        G = self.gamma_inv
        GA = G @ self.A
        return np.vstack([
            np.hstack([G, GA]),
            np.hstack([GA.T, self.chi_inv + self.A.T @ GA]),
        ])


def vertical_jet(H: ScalarField, x, m, n, tol=1e-8) -> VerticalJet:
    """Second derivatives of H in the fiber directions (p, r) at (x, 0, 0).

    Requires |grad H(x,0,0)| <= tol (X must be critical for H at x).
    """
    x = np.asarray(x, dtype=float)
    if H.dim != 2 * m + n:
        raise DimensionMismatch(f"H lives on R^{H.dim}, expected {2 * m + n}")
    if x.shape != (m,):
        raise DimensionMismatch(f"base point of length {m} expected")
    z0 = np.concatenate([x, np.zeros(m + n)])
    gnorm = float(np.linalg.norm(H.grad(z0)))
    if gnorm > tol:
        raise DifferentialNotVanishing(gnorm)
    full = H.hess(z0)
    fiber = symmetrize(full[m:, m:])
    return VerticalJet(x=x, m=m, n=n,
                       Hpp=fiber[:m, :m],
                       Hpr=fiber[:m, m:],
                       Hrr=fiber[m:, m:],
                       grad_norm=gnorm)


def extract_fields(jet: VerticalJet, cond_limit=COND_LIMIT) -> SWFields:
    """Invert the momentum block and split off gauge potential and Schur complement."""
    kappa = cond(jet.Hpp) if jet.m else np.inf
    if not np.isfinite(kappa) or kappa > cond_limit:
        raise BaseBlockSingular(f"momentum block condition number {kappa:.3e}")
    A = np.linalg.solve(jet.Hpp, jet.Hpr)
    chi_inv = symmetrize(jet.Hrr - jet.Hpr.T @ A)
    if jet.n:
        chi_cond = cond(chi_inv)
        degenerate = (not np.isfinite(chi_cond)) or chi_cond > cond_limit
    else:
        degenerate = True
    return SWFields(gamma_inv=jet.Hpp.copy(), A=A, chi_inv=chi_inv,
                    cond_gamma=kappa, degenerate=degenerate)


class GaugePotentialField:
    """Gauge potential A^a_mu(x) (stored m x n as A[mu][a]) with algebra-valued r-index.

    Backed either by polynomial component tables (analytic derivatives) or by a
    plain callable x -> (m, n) array (central-difference derivatives).
    """

    def __init__(self, m, n, algebra: LieAlgebra, poly: MatrixPolyField = None, fn=None):
        self.m = int(m)
        self.n = int(n)
        self.algebra = algebra
        if algebra.dim != self.n:
            raise DimensionMismatch("algebra dimension must match the r-index range")
        if (poly is None) == (fn is None):
            raise InvalidParams("provide exactly one of poly or fn")
        if poly is not None and (poly.shape != (self.m, self.n) or poly.base_dim != self.m):
            raise DimensionMismatch("polynomial table must be m x n over the base coordinates")
        self.poly = poly
        self.fn = fn
        self._partial_fields = None

    @classmethod
    def from_tables(cls, m, n, algebra, tables):
        return cls(m, n, algebra, poly=MatrixPolyField.from_tables((m, n), tables, m))

    @classmethod
    def constant(cls, m, n, algebra, A0):
        return cls(m, n, algebra, poly=MatrixPolyField.constant(np.asarray(A0, dtype=float), m))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.poly is not None:
            return self.poly.value(x)
        return np.asarray(self.fn(x), dtype=float)

    def partials(self, x):
        """dA[mu, nu, a] = d A^a_nu / d x^mu."""
        x = np.asarray(x, dtype=float)
        out = np.empty((self.m, self.m, self.n))
        if self.poly is not None:
            if self._partial_fields is None:
                self._partial_fields = [self.poly.partial(mu) for mu in range(self.m)]
            for mu in range(self.m):
                out[mu] = self._partial_fields[mu].value(x)
            return out
        for mu in range(self.m):
            h = GRAD_STEP * max(1.0, abs(x[mu]))
            xp = x.copy()
            xm = x.copy()
            xp[mu] += h
            xm[mu] -= h
            out[mu] = (np.asarray(self.fn(xp), dtype=float) - np.asarray(self.fn(xm), dtype=float)) / (2.0 * h)
        return out


def curvature_at(A: GaugePotentialField, x):
    """Curvature components Phi[a, mu, nu] = dA + structure-constant quadratic term.

    Phi^a_{mu nu} = d_mu A^a_nu - d_nu A^a_mu + sum_{bd} c[b][d][a] A^b_mu A^d_nu;
    the abelian case reduces to the exterior derivative.
    """
    Av = A.value(x)
    dA = A.partials(x)
    c = A.algebra.c
    quad = np.einsum("bda,ub,vd->auv", c, Av, Av)
    grad_part = np.einsum("uva->auv", dA) - np.einsum("vua->auv", dA)
    return grad_part + quad


def _as_matrix_fn(M, shape, name):
    if callable(M):
        return M, False
    arr = np.asarray(M, dtype=float)
    if arr.shape != shape:
        raise DimensionMismatch(f"{name} must have shape {shape}, got {arr.shape}")
    return (lambda x, _a=arr: _a), True


def automorphism_residual(g: LieAlgebra, R):
    """Max deviation of [R e_a, R e_b] - R [e_a, e_b] over basis pairs."""
    R = np.asarray(R, dtype=float)
    worst = 0.0
    for a in range(g.dim):
        for b in range(a + 1, g.dim):
            lhs = g.bracket(R[:, a], R[:, b])
            rhs = R @ g.c[a, b]
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def gauge_transform(A: GaugePotentialField, R, B, P, omega=None, auto_tol=1e-8):
    """Transition A -> R^-1 (A - B P^-1 omega) P^{*-1} between local splittings.

    R (n x n, Lie-algebra automorphism), B (m x n), P (m x m, invertible) may be
    constant arrays or callables of the base point; omega is the base symplectic
    identification block (identity in adapted Darboux coordinates). Base points
    move by psi(x) = P^{*-1} x for constant P, and stay fixed for P = I.
    """
    m, n = A.m, A.n
    R_fn, R_const = _as_matrix_fn(R, (n, n), "R")
    B_fn, B_const = _as_matrix_fn(B, (m, n), "B")
    P_fn, P_const = _as_matrix_fn(P, (m, m), "P")
    omega = np.eye(m) if omega is None else np.asarray(omega, dtype=float)

    probe = np.zeros(m)
    for Mfn, label in ((R_fn, "R"), (P_fn, "P")):
        Mv = Mfn(probe)
        if abs(np.linalg.det(Mv)) < 1e-14:
            raise SingularBlock(f"{label} block is singular")
    res = automorphism_residual(A.algebra, R_fn(probe))
    if res > auto_tol:
        raise NotAutomorphism(f"R is not a Lie-algebra automorphism (residual {res:.3e})")

    if not P_const:
        raise InvalidParams("x-dependent P requires an explicit base map; use a constant P")
    P0 = P_fn(probe)
    Pstarinv = np.linalg.inv(P0).T
    base_is_identity = np.allclose(P0, np.eye(m), atol=1e-14)

    if R_const and B_const and A.poly is not None:
        # polynomial-preserving path: A~ = Pstarinv^T (A(psi x) - shift) R^{-T}
        Rinv = np.linalg.inv(R_fn(probe))
        shift = omega.T @ np.linalg.inv(P0).T @ B_fn(probe)  # m x n
        entries = []
        for mu in range(m):
            row = []
            for a in range(n):
                p = Polynomial(m)
                for nu in range(m):
                    if Pstarinv[nu, mu] == 0.0:
                        continue
                    inner = Polynomial(m)
                    for b in range(n):
                        coeff = Rinv[a, b]
                        if coeff == 0.0:
                            continue
                        comp = A.poly.entry(nu, b)
                        if not base_is_identity:
                            comp = comp.compose_linear(Pstarinv)
                        inner = inner + comp * coeff - Polynomial.constant(m, shift[nu, b] * coeff)
                    p = p + inner * Pstarinv[nu, mu]
                row.append(p)
            entries.append(row)
        return GaugePotentialField(m, n, A.algebra,
                                   poly=MatrixPolyField((m, n), entries, m))

    def new_fn(x):
        x = np.asarray(x, dtype=float)
        xs = x if base_is_identity else Pstarinv @ x
        Rv = R_fn(x)
        Bv = B_fn(x)
        Av = A.value(xs)
        core = Av - omega.T @ np.linalg.inv(P0).T @ Bv
        return Pstarinv.T @ core @ np.linalg.inv(Rv).T

    return GaugePotentialField(m, n, A.algebra, fn=new_fn)


def flow_transition(g_components, algebra: LieAlgebra, m):
    """(R, B, P) triple of the time-1 flow of the fiber-linear function sum_a g_a(x) r_a.

    g_components: list of n polynomials in the m base coordinates. The returned
    triple satisfies exact curvature covariance Phi~ = R^-1 Phi with fixed base
    points (P = I).
    """
    n = algebra.dim
    if len(g_components) != n:
        raise DimensionMismatch("need one component per algebra direction")

    def g_at(x):
        return np.array([p.value(x) for p in g_components])

    def Dg_at(x):
        return np.array([[p.partial(mu).value(x) for mu in range(m)] for p in g_components])

    def R_fn(x):
        return expm(algebra.ad(g_at(x)))

    def B_fn(x):
        gx = g_at(x)
        C = Dg_at(x).T @ phi1(algebra.coad(gx))  # int_0^1 Dg^T exp(t coad g) dt
        return -C @ expm(algebra.ad(gx)).T

    return R_fn, B_fn, np.eye(m)


def structure_bianchi_residual(A: GaugePotentialField, g: LieAlgebra, x, fd_step=None):
    """(structure-equation residual, Bianchi-identity residual) at x.

    The structure residual recomputes the curvature from finite differences of
    A and compares against curvature_at; the Bianchi residual is the max
    component of the cyclic covariant derivative of the curvature.
    """
    x = np.asarray(x, dtype=float)
    m, n = A.m, A.n
    Phi = curvature_at(A, x)

    step = fd_step or GRAD_STEP
    dA = np.empty((m, m, n))
    for mu in range(m):
        h = step * max(1.0, abs(x[mu]))
        xp = x.copy()
        xm = x.copy()
        xp[mu] += h
        xm[mu] -= h
        dA[mu] = (A.value(xp) - A.value(xm)) / (2.0 * h)
    Av = A.value(x)
    quad = np.einsum("bda,ub,vd->auv", g.c, Av, Av)
    Phi_fd = np.einsum("uva->auv", dA) - np.einsum("vua->auv", dA) + quad
    res_structure = float(np.max(np.abs(Phi - Phi_fd)))

    dPhi = np.empty((m, n, m, m))
    for mu in range(m):
        h = step * max(1.0, abs(x[mu]))
        xp = x.copy()
        xm = x.copy()
        xp[mu] += h
        xm[mu] -= h
        dPhi[mu] = (curvature_at(A, xp) - curvature_at(A, xm)) / (2.0 * h)
    # D_mu Phi_{nu sigma} = d_mu Phi + [A_mu, Phi_{nu sigma}]
    cov = dPhi + np.einsum("bda,ub,dvs->uavs", g.c, Av, Phi)
    cyc = cov + cov.transpose(2, 1, 3, 0) + cov.transpose(3, 1, 0, 2)
    res_bianchi = float(np.max(np.abs(cyc)))
    return res_structure, res_bianchi


def reduce_jet(jet: VerticalJet, constrained) -> VerticalJet:
    """Delete constrained fiber directions (1-based r-indices) from the jet blocks."""
    idx = sorted(set(int(i) for i in constrained))
    for i in idx:
        if not 1 <= i <= jet.n:
            raise IndexOutOfRange(f"constrained index {i} outside 1..{jet.n}")
    keep = [a for a in range(jet.n) if (a + 1) not in idx]
    return VerticalJet(x=jet.x, m=jet.m, n=len(keep),
                       Hpp=jet.Hpp.copy(),
                       Hpr=jet.Hpr[:, keep],
                       Hrr=jet.Hrr[np.ix_(keep, keep)],
                       grad_norm=jet.grad_norm)


class QuadraticGaugeModel:
    """Hamiltonian family (1/2)(p + A r)^T gamma_inv (p + A r) + (1/2) r^T chi_inv r.

    gamma_inv (m x m) and chi_inv (n x n) are polynomial matrix fields over x;
    A is a GaugePotentialField with polynomial backing. The model serves as the
    x -> jet / x -> fields provider for the minimal-coupling and full quadratic
    Hamiltonians.
    """

    def __init__(self, m, n, algebra: LieAlgebra, gamma_inv: MatrixPolyField,
                 A: GaugePotentialField, chi_inv: MatrixPolyField = None):
        self.m = int(m)
        self.n = int(n)
        self.algebra = algebra
        if gamma_inv.shape != (m, m) or gamma_inv.base_dim != m:
            raise DimensionMismatch("gamma_inv must be m x m over the base coordinates")
        if A.poly is None:
            raise InvalidParams("model requires a polynomial gauge potential")
        if chi_inv is not None and (chi_inv.shape != (n, n) or chi_inv.base_dim != m):
            raise DimensionMismatch("chi_inv must be n x n over the base coordinates")
        self.gamma_inv = gamma_inv
        self.A = A
        self.chi_inv = chi_inv

    @property
    def dim(self):
        return 2 * self.m + self.n

    def fields_at(self, x) -> SWFields:
        G = self.gamma_inv.value(x)
        Av = self.A.value(x)
        chi = self.chi_inv.value(x) if self.chi_inv is not None else np.zeros((self.n, self.n))
        degenerate = self.chi_inv is None or cond(chi) > COND_LIMIT
        return SWFields(gamma_inv=G, A=Av, chi_inv=chi, cond_gamma=cond(G), degenerate=degenerate)

    def jet_at(self, x) -> VerticalJet:
        f = self.fields_at(x)
        full = f.rebuild_jet_matrix()
        m = self.m
        return VerticalJet(x=np.asarray(x, dtype=float), m=m, n=self.n,
                           Hpp=full[:m, :m], Hpr=full[:m, m:], Hrr=full[m:, m:])

    def _coupled_momenta(self):
        m, n, d = self.m, self.n, self.dim
        xmap = list(range(m))
        w = []
        for mu in range(m):
            poly = Polynomial.coordinate(d, m + mu)
            for a in range(n):
                Aent = self.A.poly.entry(mu, a).embed(d, xmap)
                poly = poly + Aent * Polynomial.coordinate(d, 2 * m + a)
            w.append(poly)
        return w

    def minimal_coupling_hamiltonian(self) -> ScalarField:
        """H = (1/2) (p + A(x) r)^T gamma_inv(x) (p + A(x) r)."""
        m, d = self.m, self.dim
        xmap = list(range(m))
        w = self._coupled_momenta()
        H = Polynomial(d)
        for mu in range(m):
            for nu in range(m):
                gent = self.gamma_inv.entry(mu, nu).embed(d, xmap)
                H = H + gent * w[mu] * w[nu] * 0.5
        return ScalarField.from_polynomial(H)

    def full_quadratic_hamiltonian(self, check_tol=1e-10, rng=None) -> ScalarField:
        """H = (1/2) (p,r)^T [jet blocks] (p,r); verifies the Schur split numerically."""
        m, n, d = self.m, self.n, self.dim
        xmap = list(range(m))
        H = self.minimal_coupling_hamiltonian().poly
        if self.chi_inv is not None:
            for a in range(n):
                for b in range(n):
                    cent = self.chi_inv.entry(a, b).embed(d, xmap)
                    H = H + cent * Polynomial.coordinate(d, 2 * m + a) \
                        * Polynomial.coordinate(d, 2 * m + b) * 0.5
        out = ScalarField.from_polynomial(H)
        self._verify_split(out, check_tol, rng)
        return out

    def _verify_split(self, H2: ScalarField, tol, rng):
        rng = rng or np.random.default_rng(0)
        H1 = self.minimal_coupling_hamiltonian()
        for _ in range(5):
            z = rng.standard_normal(self.dim)
            x = z[:self.m]
            r = z[2 * self.m:]
            chi = self.chi_inv.value(x) if self.chi_inv is not None else np.zeros((self.n, self.n))
            split = H1.value(z) + 0.5 * r @ chi @ r
            scale = max(1.0, abs(H2.value(z)))
            if abs(H2.value(z) - split) > tol * scale:
                raise InvalidParams("Schur split verification failed; "
                                    "field tables are inconsistent")


def wong_hamiltonian(model: QuadraticGaugeModel) -> ScalarField:
    """Minimal-coupling Hamiltonian of the extracted (gamma_inv, A) pair."""
    G0 = model.gamma_inv.value(np.zeros(model.m))
    if cond(G0) > COND_LIMIT:
        raise BaseBlockSingular("inverse metric is singular on the evaluation domain")
    return model.minimal_coupling_hamiltonian()


def einstein_mayer_hamiltonian(model: QuadraticGaugeModel, check_tol=1e-10) -> ScalarField:
    """Full fiber-quadratic Hamiltonian carrying the scalar-product term."""
    G0 = model.gamma_inv.value(np.zeros(model.m))
    if cond(G0) > COND_LIMIT:
        raise BaseBlockSingular("inverse metric is singular on the evaluation domain")
    return model.full_quadratic_hamiltonian(check_tol=check_tol)


def model_from_fields(m, n, algebra, gamma_inv, A, chi_inv=None) -> QuadraticGaugeModel:
    """Convenience constructor accepting constant arrays or MatrixPolyFields."""
    if not isinstance(gamma_inv, MatrixPolyField):
        gamma_inv = MatrixPolyField.constant(np.asarray(gamma_inv, dtype=float), m)
    if not isinstance(A, GaugePotentialField):
        A = GaugePotentialField.constant(m, n, algebra, A)
    if chi_inv is not None and not isinstance(chi_inv, MatrixPolyField):
        chi_inv = MatrixPolyField.constant(np.asarray(chi_inv, dtype=float), m)
    return QuadraticGaugeModel(m, n, algebra, gamma_inv, A, chi_inv)


def fields_to_hamiltonian_spec(fields: SWFields, algebra_name="u1", keep_chi=True):
    """Serialize extracted pointwise fields as a quadratic_gauge scenario fragment.

    The result plugs directly into a scenario document's "hamiltonian" slot and
    round-trips into the dynamics commands.
    """
    m = fields.gamma_inv.shape[0]
    n = fields.A.shape[1]
    spec = {
        "family": "quadratic_gauge",
        "m": m,
        "n": n,
        "algebra": algebra_name,
        "gamma_inv": fields.gamma_inv.tolist(),
        "A": fields.A.tolist(),
    }
    if keep_chi and not fields.degenerate:
        spec["chi_inv"] = fields.chi_inv.tolist()
    return spec
