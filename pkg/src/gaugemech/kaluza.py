"""Geodesic flow of bundle metrics on trivial principal bundles X x G.

The cotangent bundle is left-trivialized: a state is (x, g, p, mu) with p the
base momenta and mu the body fiber momentum. The geodesic Hamiltonian of the
bundle metric splits as

    K0 = (1/2) (p + A(x) r)^T gamma_inv(x) (p + A(x) r) + (1/2) mu^T iota_inv mu,

where r = Ad_{g^-1}^T mu is the transported fiber charge. The equations of
motion in this trivialization are

    x' = v = gamma_inv (p + A r),     p' = -dK0/dx,
    g' = g xi,  xi = iota_inv mu + Ad_{g^-1}(A^T v),   mu' = ad(iota_inv mu)^T mu,

and the projected (x, p, r) flow coincides with the minimal-coupling flow on
the product Poisson structure, which is the anchor fixing every sign here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DimensionMismatch, InvalidParams, NonFiniteState, SingularMetric,
                     UnknownGroup)
from .extraction import GaugePotentialField, QuadraticGaugeModel, wong_hamiltonian
from .fields import ScalarField
from .lie_algebra import LieAlgebra, build_algebra
from .matutil import cond
from .polynomials import MatrixPolyField

_PAULI = [
    np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
]


def _so3_generators():
    out = []
    for k in range(3):
        L = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                L[i, j] = -_eps(k, i, j)
        out.append(L)
    return out


def _eps(i, j, k):
    if (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        return 1.0
    if (i, j, k) in ((2, 1, 0), (1, 0, 2), (0, 2, 1)):
        return -1.0
    return 0.0


class MatrixGroup:
    """Matrix realization of u1 / so3 / su2 with exp, reprojection, and Ad."""

    def __init__(self, name, matrix_dim, algebra, basis, is_complex):
        self.name = name
        self.matrix_dim = int(matrix_dim)
        self.algebra = algebra
        self.basis = [np.asarray(E) for E in basis]
        self.is_complex = bool(is_complex)
        gram = np.array([[float(np.real(np.trace(Ea.conj().T @ Eb))) for Eb in self.basis]
                         for Ea in self.basis])
        self._gram_inv = np.linalg.inv(gram)
        res = self.commutator_residual()
        if res > 1e-12:
            raise InvalidParams(f"basis commutators disagree with structure constants ({res:.3e})")

    @property
    def n(self):
        return self.algebra.dim

    def identity(self):
        return np.eye(self.matrix_dim, dtype=complex if self.is_complex else float)

    def algebra_matrix(self, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros((self.matrix_dim, self.matrix_dim),
                       dtype=complex if self.is_complex else float)
        for a in range(self.n):
            out = out + v[a] * self.basis[a]
        return out

    def coefficients(self, M):
        """Coordinates of an algebra-valued matrix in the chosen basis."""
        pair = np.array([float(np.real(np.trace(E.conj().T @ M))) for E in self.basis])
        return self._gram_inv @ pair

    def commutator_residual(self):
        worst = 0.0
        for a in range(self.n):
            for b in range(self.n):
                comm = self.basis[a] @ self.basis[b] - self.basis[b] @ self.basis[a]
                expand = self.algebra_matrix(self.algebra.c[a, b])
                worst = max(worst, float(np.max(np.abs(comm - expand))))
        return worst

    def exp(self, v):
        """Group element exp(sum v_a E_a), closed form per group."""
        v = np.asarray(v, dtype=float)
        if self.name == "u1":
            return np.array([[np.exp(1j * v[0])]])
        theta = float(np.linalg.norm(v))
        if self.name == "so3":
            K = self.algebra_matrix(v)
            if theta < 1e-12:
                return np.eye(3) + K + 0.5 * K @ K
            return (np.eye(3) + np.sin(theta) / theta * K
                    + (1.0 - np.cos(theta)) / theta ** 2 * K @ K)
        # su2: exp(-(i/2) v . sigma)
        if theta < 1e-15:
            return np.eye(2, dtype=complex)
        nhat = v / theta
        sig = sum(nhat[k] * _PAULI[k] for k in range(3))
        return np.cos(theta / 2.0) * np.eye(2, dtype=complex) - 1j * np.sin(theta / 2.0) * sig

    def reproject(self, M):
        """Project a near-group matrix back onto the group manifold."""
        if self.name == "u1":
            z = complex(M[0, 0])
            mod = abs(z)
            return np.array([[z / mod if mod > 0 else 1.0 + 0j]])
        U, _, Vh = np.linalg.svd(M)
        P = U @ Vh
        if self.name == "so3":
            if np.linalg.det(P) < 0:
                U[:, -1] = -U[:, -1]
                P = U @ Vh
            return P.real if not np.iscomplexobj(M) else P
        det = np.linalg.det(P)
        return P / np.sqrt(det)

    def ad_matrix(self, g):
        """Matrix of Ad_g on algebra coordinates: g E_a g^-1 = sum_b Ad[b,a] E_b."""
        if self.name == "u1":
            return np.eye(1)
        if self.name == "so3":
            return np.asarray(g, dtype=float)
        ginv = np.linalg.inv(g)
        cols = [self.coefficients(g @ E @ ginv) for E in self.basis]
        return np.array(cols).T

    def flat_dim(self):
        k = self.matrix_dim
        return 2 * k * k if self.is_complex else k * k

    def to_flat(self, M):
        if self.is_complex:
            return np.concatenate([np.real(M).ravel(), np.imag(M).ravel()])
        return np.asarray(M, dtype=float).ravel()

    def from_flat(self, arr):
        k = self.matrix_dim
        if self.is_complex:
            half = k * k
            return arr[:half].reshape(k, k) + 1j * arr[half:].reshape(k, k)
        return arr.reshape(k, k)


def build_group(name) -> MatrixGroup:
    if name == "u1":
        return MatrixGroup("u1", 1, build_algebra("u1"), [np.array([[1j]])], True)
    if name == "so3":
        return MatrixGroup("so3", 3, build_algebra("so3"), _so3_generators(), False)
    if name == "su2":
        basis = [-0.5j * _PAULI[k] for k in range(3)]
        return MatrixGroup("su2", 2, build_algebra("su2"), basis, True)
    raise UnknownGroup(f"unsupported group {name!r}")


def ad_invariance_residual(g: LieAlgebra, iota_inv):
    """Max over basis directions of || ad(e_a) iota_inv + iota_inv ad(e_a)^T ||_inf."""
    worst = 0.0
    for a in range(g.dim):
        ad = g.ad(np.eye(g.dim)[a])
        worst = max(worst, float(np.max(np.abs(ad @ iota_inv + iota_inv @ ad.T))))
    return worst


@dataclass
class KKMetricSpec:
    """Bundle-metric data: base inverse metric, gauge potential, inverse fiber scalar product."""

    m: int
    group: MatrixGroup
    gamma_inv: MatrixPolyField
    A: GaugePotentialField
    iota_inv: np.ndarray

    def __post_init__(self):
        n = self.group.n
        self.iota_inv = np.asarray(self.iota_inv, dtype=float)
        if self.iota_inv.shape != (n, n):
            raise DimensionMismatch("iota_inv must act on the fiber algebra")
        if np.max(np.abs(self.iota_inv - self.iota_inv.T)) > 1e-12:
            raise InvalidParams("iota_inv must be symmetric")
        eigs = np.linalg.eigvalsh(self.iota_inv)
        if np.min(eigs) <= 0.0:
            raise InvalidParams("iota_inv must be positive definite")
        if self.A.m != self.m or self.A.n != n:
            raise DimensionMismatch("gauge potential shape does not match spec")
        if self.gamma_inv.shape != (self.m, self.m):
            raise DimensionMismatch("gamma_inv must be m x m")
        self.ad_invariance = ad_invariance_residual(self.group.algebra, self.iota_inv)

    @property
    def n(self):
        return self.group.n


@dataclass
class KKState:
    x: np.ndarray
    g: np.ndarray
    p: np.ndarray
    mu: np.ndarray

    @classmethod
    def from_wong(cls, spec: KKMetricSpec, x, p, r):
        """State over the identity fiber point with charge r (so mu = r)."""
        return cls(x=np.asarray(x, dtype=float), g=spec.group.identity(),
                   p=np.asarray(p, dtype=float), mu=np.asarray(r, dtype=float))


def moment_map(group: MatrixGroup, s: KKState):
    """Transported fiber charge Ad_{g^-1}^T mu; constant along the flow when A = 0."""
    return group.ad_matrix(np.linalg.inv(s.g)).T @ s.mu


def kk_hamiltonian(spec: KKMetricSpec):
    """Scalar function of KKState for the bundle-metric geodesic flow."""
    G0 = spec.gamma_inv.value(np.zeros(spec.m))
    if cond(G0) > 1e12:
        raise SingularMetric("base inverse metric is singular")
    iota_inv = spec.iota_inv

    def K0(s: KKState) -> float:
        r = moment_map(spec.group, s)
        w = s.p + spec.A.value(s.x) @ r
        gi = spec.gamma_inv.value(s.x)
        return float(0.5 * w @ gi @ w + 0.5 * s.mu @ iota_inv @ s.mu)

    return K0


def project_kk(spec: KKMetricSpec, s: KKState):
    """Wong-side state (x, p, r): base point and momentum unchanged, charge transported."""
    return np.concatenate([s.x, s.p, moment_map(spec.group, s)])


def _kk_rhs(spec: KKMetricSpec):
    group = spec.group
    alg = group.algebra
    m, n = spec.m, spec.n
    gamma_parts = [spec.gamma_inv.partial(mu) for mu in range(m)]

    def rhs(x, g, p, mu):
        adm_inv = group.ad_matrix(np.linalg.inv(g))
        r = adm_inv.T @ mu
        Av = spec.A.value(x)
        w = p + Av @ r
        v = spec.gamma_inv.value(x) @ w
        dx = v
        dp = np.empty(m)
        dA = spec.A.partials(x)
        for muI in range(m):
            dp[muI] = -0.5 * w @ gamma_parts[muI].value(x) @ w - v @ dA[muI] @ r
        xi = spec.iota_inv @ mu + adm_inv @ (Av.T @ v)
        dg = g @ group.algebra_matrix(xi)
        dmu = alg.ad(spec.iota_inv @ mu).T @ mu
        return dx, dg, dp, dmu

    return rhs


@dataclass
class KKTrajectory:
    times: np.ndarray
    states: list  # of KKState
    energy: np.ndarray
    moments: np.ndarray

    def final_state(self):
        return self.states[-1]

    def projected(self, spec: KKMetricSpec):
        """(N+1, 2m+n) array of Wong-side states."""
        return np.array([project_kk(spec, s) for s in self.states])


def integrate_kk(spec: KKMetricSpec, s0: KKState, cfg, reproject_every=16) -> KKTrajectory:
    """RK4 on the trivialized geodesic equations with periodic group reprojection."""
    group = spec.group
    rhs = _kk_rhs(spec)
    K0 = kk_hamiltonian(spec)
    m, n = spec.m, spec.n
    steps = cfg.steps
    dt = cfg.h_exact

    x = np.asarray(s0.x, dtype=float).copy()
    g = np.array(s0.g, copy=True)
    p = np.asarray(s0.p, dtype=float).copy()
    mu = np.asarray(s0.mu, dtype=float).copy()

    def snapshot():
        return KKState(x=x.copy(), g=g.copy(), p=p.copy(), mu=mu.copy())

    states = [snapshot()]
    times = [0.0]
    for k in range(1, steps + 1):
        k1 = rhs(x, g, p, mu)
        k2 = rhs(x + 0.5 * dt * k1[0], g + 0.5 * dt * k1[1],
                 p + 0.5 * dt * k1[2], mu + 0.5 * dt * k1[3])
        k3 = rhs(x + 0.5 * dt * k2[0], g + 0.5 * dt * k2[1],
                 p + 0.5 * dt * k2[2], mu + 0.5 * dt * k2[3])
        k4 = rhs(x + dt * k3[0], g + dt * k3[1], p + dt * k3[2], mu + dt * k3[3])
        x = x + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        g = g + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        p = p + (dt / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        mu = mu + (dt / 6.0) * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
        if k % reproject_every == 0:
            g = group.reproject(g)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p))
                and np.all(np.isfinite(mu)) and np.all(np.isfinite(np.abs(g)))):
            raise NonFiniteState(k)
        states.append(snapshot())
        times.append(k * dt)
    energy = np.array([K0(s) for s in states])
    moments = np.array([moment_map(group, s) for s in states])
    return KKTrajectory(times=np.array(times), states=states, energy=energy, moments=moments)


@dataclass
class KKSplit:
    wong: ScalarField
    vertical: object  # mu -> float
    residual: float
    classification: str
    ad_invariance_residual: float


def split_kk_hamiltonian(spec: KKMetricSpec, samples=32, seed=0) -> KKSplit:
    """Split K0 into the projectable minimal-coupling part and the vertical fiber part.

    residual = max over random states of |K0 - (H_wong o project + J o moment)|;
    nonzero residual detects a fiber scalar product that is not Ad-invariant.
    """
    model = QuadraticGaugeModel(spec.m, spec.n, spec.group.algebra,
                                spec.gamma_inv, spec.A, chi_inv=None)
    H = wong_hamiltonian(model)
    iota_inv = spec.iota_inv

    def J(mu):
        mu = np.asarray(mu, dtype=float)
        return float(0.5 * mu @ iota_inv @ mu)

    K0 = kk_hamiltonian(spec)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        s = KKState(x=rng.standard_normal(spec.m),
                    g=spec.group.exp(rng.standard_normal(spec.n)),
                    p=rng.standard_normal(spec.m),
                    mu=rng.standard_normal(spec.n))
        r = moment_map(spec.group, s)
        val = H.value(np.concatenate([s.x, s.p, r])) + J(r)
        worst = max(worst, abs(K0(s) - val))

    ad_res = spec.ad_invariance
    if float(np.max(np.abs(iota_inv))) <= 1e-14:
        classification = "invariant type"
    elif ad_res <= 1e-10:
        classification = "ad-type"
    else:
        classification = "mixed type"
    return KKSplit(wong=H, vertical=J, residual=worst,
                   classification=classification, ad_invariance_residual=ad_res)


def kk_trajectory_to_csv(traj: KKTrajectory, spec: KKMetricSpec, path):
    """CSV export: t,x...,gflat...,p...,mu...,K0 (group matrices row-major)."""
    group = spec.group
    m, n = spec.m, spec.n
    k = group.matrix_dim
    if group.is_complex:
        glabels = ([f"g{i}{j}re" for i in range(k) for j in range(k)]
                   + [f"g{i}{j}im" for i in range(k) for j in range(k)])
    else:
        glabels = [f"g{i}{j}" for i in range(k) for j in range(k)]
    header = ",".join(["t"] + [f"x{i + 1}" for i in range(m)] + glabels
                      + [f"p{i + 1}" for i in range(m)] + [f"mu{a + 1}" for a in range(n)]
                      + ["K0"])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i, s in enumerate(traj.states):
            row = [traj.times[i], *s.x, *group.to_flat(s.g), *s.p, *s.mu, traj.energy[i]]
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
