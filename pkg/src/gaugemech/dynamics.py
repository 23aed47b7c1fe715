"""Fixed-step integration of Hamiltonian flows with conservation diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidParams, NewtonDivergence, NonFiniteState
from .fields import ScalarField
from .poisson import PoissonStructure, bivector_at, default_casimirs

MAX_RECORDED_POINTS = 10_000_000


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step plan; h is recomputed so that h * steps == T exactly."""

    method: str = "rk4"
    h: float = 1e-3
    T: float = 1.0
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self):
        if self.method not in ("rk4", "implicit_midpoint"):
            raise InvalidParams(f"unknown method {self.method!r}")
        if self.h <= 0.0:
            raise InvalidParams("step size must be positive")
        if self.T < 0.0:
            raise InvalidParams("final time must be nonnegative")

    @property
    def steps(self):
        return max(1, int(round(self.T / self.h))) if self.T > 0 else 0

    @property
    def h_exact(self):
        return self.T / self.steps if self.steps else self.h

    def with_h(self, h):
        return IntegratorConfig(self.method, h, self.T, self.newton_tol, self.newton_max_iter)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (N+1, d)
    energy: np.ndarray
    casimirs: np.ndarray  # (N+1, k)

    def final_state(self):
        return self.states[-1]


@dataclass
class DriftReport:
    energy_drift: float
    casimir_drifts: list
    order_estimate: float = None


@dataclass
class OrderEstimate:
    """Richardson convergence-order estimate; unreliable when differences sit at rounding level."""

    value: float
    reliable: bool
    deltas: tuple

    def __float__(self):
        return float(self.value)


def make_rhs(P: PoissonStructure, H: ScalarField):
    """Vector field z -> W(z) grad H(z), specialized per structure kind."""
    if H.dim != P.dim:
        raise DimensionMismatch("Hamiltonian dimension does not match the structure")
    if P.kind == "canonical":
        m = P.m

        def rhs(z):
            g = H.grad(z)
            return np.concatenate([g[m:2 * m], -g[:m]])
    elif P.kind == "lie_poisson":
        tv = P.transverse

        def rhs(z):
            return tv.matrix_at(z) @ H.grad(z)
    elif P.kind == "darboux_product":
        m = P.m
        tv = P.transverse

        def rhs(z):
            g = H.grad(z)
            out = np.empty_like(z)
            out[:m] = g[m:2 * m]
            out[m:2 * m] = -g[:m]
            out[2 * m:] = tv.matrix_at(z[2 * m:]) @ g[2 * m:]
            return out
    else:
        def rhs(z):
            return bivector_at(P, z) @ H.grad(z)
    return rhs


def rk4_step(rhs, z, dt):
    k1 = rhs(z)
    k2 = rhs(z + 0.5 * dt * k1)
    k3 = rhs(z + 0.5 * dt * k2)
    k4 = rhs(z + dt * k3)
    return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _fd_jacobian(rhs, z, f0):
    d = z.size
    J = np.empty((d, d))
    for i in range(d):
        h = 1e-7 * max(1.0, abs(z[i]))
        zp = z.copy()
        zp[i] += h
        J[:, i] = (rhs(zp) - f0) / h
    return J


def midpoint_step(rhs, z, dt, tol, max_iter):
    """Implicit midpoint via damped Newton on y = z + (dt/2) f(y); returns 2y - z."""
    y = z + 0.5 * dt * rhs(z)
    res = y - z - 0.5 * dt * rhs(y)
    rnorm = np.linalg.norm(res)
    for _ in range(max_iter):
        if rnorm <= tol:
            return 2.0 * y - z
        f_y = rhs(y)
        J = np.eye(z.size) - 0.5 * dt * _fd_jacobian(rhs, y, f_y)
        try:
            delta = np.linalg.solve(J, y - z - 0.5 * dt * f_y)
        except np.linalg.LinAlgError as exc:
            raise NewtonDivergence(f"midpoint Jacobian singular: {exc}")
        damping = 1.0
        while damping > 1e-4:
            y_new = y - damping * delta
            res_new = y_new - z - 0.5 * dt * rhs(y_new)
            if np.linalg.norm(res_new) < rnorm or rnorm <= tol:
                break
            damping *= 0.5
        y = y - damping * delta
        res = y - z - 0.5 * dt * rhs(y)
        rnorm = np.linalg.norm(res)
    if rnorm > tol:
        raise NewtonDivergence(f"midpoint iteration stalled at residual {rnorm:.3e}")
    return 2.0 * y - z


def integrate(P: PoissonStructure, H: ScalarField, z0, cfg: IntegratorConfig,
              casimirs=None) -> Trajectory:
    """Solve dz/dt = W(z) grad H(z) on a fixed grid, recording energy and Casimirs."""
    z = np.asarray(z0, dtype=float)
    if z.shape != (P.dim,):
        raise DimensionMismatch(f"initial state of length {P.dim} expected")
    if casimirs is None:
        casimirs = default_casimirs(P)
    rhs = make_rhs(P, H)
    steps = cfg.steps
    dt = cfg.h_exact

    thin = max(1, int(np.ceil((steps + 1) / MAX_RECORDED_POINTS)))
    rec_idx = list(range(0, steps + 1, thin))
    if rec_idx[-1] != steps:
        rec_idx.append(steps)
    states = np.empty((len(rec_idx), P.dim))
    times = np.empty(len(rec_idx))
    pos = 0
    if rec_idx[pos] == 0:
        states[0] = z
        times[0] = 0.0
        pos = 1
    for k in range(1, steps + 1):
        if cfg.method == "rk4":
            z = rk4_step(rhs, z, dt)
        else:
            z = midpoint_step(rhs, z, dt, cfg.newton_tol, cfg.newton_max_iter)
        if not np.all(np.isfinite(z)):
            raise NonFiniteState(k)
        if pos < len(rec_idx) and rec_idx[pos] == k:
            states[pos] = z
            times[pos] = k * dt
            pos += 1
    energy = np.array([H.value(s) for s in states])
    cas = np.array([[c.value(s) for c in casimirs] for s in states]) \
        if casimirs else np.zeros((len(states), 0))
    return Trajectory(times=times, states=states, energy=energy, casimirs=cas)


def diagnostics(traj: Trajectory, P: PoissonStructure = None, H: ScalarField = None,
                casimirs=None) -> DriftReport:
    e0 = traj.energy[0]
    energy_drift = float(np.max(np.abs(traj.energy - e0)) / max(1.0, abs(e0)))
    drifts = []
    for j in range(traj.casimirs.shape[1]):
        c0 = traj.casimirs[0, j]
        drifts.append(float(np.max(np.abs(traj.casimirs[:, j] - c0)) / max(1.0, abs(c0))))
    return DriftReport(energy_drift=energy_drift, casimir_drifts=drifts)


def order_estimate(P: PoissonStructure, H: ScalarField, z0, cfg: IntegratorConfig) -> OrderEstimate:
    """log2 of the error ratio at steps h and h/2 against a reference run at h/8."""
    finals = {}
    for denom in (1, 2, 8):
        sub = cfg.with_h(cfg.h / denom)
        finals[denom] = integrate(P, H, z0, sub, casimirs=[]).final_state()
    d1 = float(np.linalg.norm(finals[1] - finals[8]))
    d2 = float(np.linalg.norm(finals[2] - finals[8]))
    scale = 1.0 + float(np.linalg.norm(finals[8]))
    floor = 1e3 * np.finfo(float).eps * scale
    reliable = d1 > floor and d2 > floor
    value = float(np.log2(d1 / d2)) if (reliable and d2 > 0.0) else float("nan")
    return OrderEstimate(value=value, reliable=reliable, deltas=(d1, d2))


def trajectory_to_csv(traj: Trajectory, path, casimir_labels=None):
    """CSV export: t,z1,...,zd,H,cas1,... with 17 significant digits."""
    d = traj.states.shape[1]
    k = traj.casimirs.shape[1]
    labels = casimir_labels or [f"cas{j + 1}" for j in range(k)]
    header = ",".join(["t"] + [f"z{i + 1}" for i in range(d)] + ["H"] + labels)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i in range(len(traj.times)):
            row = [traj.times[i], *traj.states[i], traj.energy[i], *traj.casimirs[i]]
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
