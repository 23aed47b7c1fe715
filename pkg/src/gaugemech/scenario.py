"""Scenario documents: a single strict JSON file drives every CLI command.

Unknown keys are rejected at every level; dimensional consistency is checked
before any run; the canonical JSON serialization is hashed into run manifests.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .dynamics import IntegratorConfig
from .errors import InvalidScenario
from .extraction import GaugePotentialField, QuadraticGaugeModel
from .fields import ScalarField
from .kaluza import KKMetricSpec, build_group
from .lie_algebra import LieAlgebra, build_algebra
from .poisson import build_structure
from .polynomials import MatrixPolyField

_TOP_KEYS = {"seed", "poisson", "hamiltonian", "initial", "integrator",
             "grid", "tolerances", "outputs"}
_POISSON_KEYS = {"kind", "m", "algebra", "transverse", "dim"}
_HAM_KEYS = {"family", "m", "n", "dim", "algebra", "group",
             "gamma_inv", "A", "chi_inv", "iota_inv", "terms", "inertia"}
_INTEGRATOR_KEYS = {"method", "h", "T", "newton_tol", "newton_max_iter"}
_TOL_KEYS = {"check", "compare", "jet"}
_INITIAL_KEYS = {"x", "p", "r"}

DEFAULT_TOLERANCES = {"check": 1e-10, "compare": 1e-6, "jet": 1e-8}


def _reject_unknown(mapping, allowed, where):
    unknown = set(mapping) - allowed
    if unknown:
        raise InvalidScenario(f"unknown keys {sorted(unknown)} in {where}")


def _algebra_from_spec(spec) -> LieAlgebra:
    if isinstance(spec, str):
        return build_algebra(spec)
    if isinstance(spec, dict):
        _reject_unknown(spec, {"constants", "tol"}, "algebra")
        if "constants" not in spec:
            raise InvalidScenario("raw algebra needs a constants tensor")
        return build_algebra(np.asarray(spec["constants"], dtype=float),
                             float(spec.get("tol", 1e-12)))
    raise InvalidScenario("algebra must be a preset name or {constants, tol}")


def _matrix_field(spec, shape, base_dim, where) -> MatrixPolyField:
    if spec is None:
        raise InvalidScenario(f"{where} is required")
    arr = spec
    if not isinstance(arr, list) or len(arr) != shape[0]:
        raise InvalidScenario(f"{where} must be a {shape[0]}x{shape[1]} nested list")
    for row in arr:
        if not isinstance(row, list) or len(row) != shape[1]:
            raise InvalidScenario(f"{where} must be a {shape[0]}x{shape[1]} nested list")
    try:
        return MatrixPolyField.from_tables(shape, arr, base_dim)
    except Exception as exc:
        raise InvalidScenario(f"bad entry in {where}: {exc}")


@dataclass
class Scenario:
    seed: int
    raw: dict
    poisson: object          # PoissonStructure or None
    hamiltonian: object      # ScalarField or None
    model: object            # QuadraticGaugeModel or None
    kk_spec: object          # KKMetricSpec or None
    algebra: object          # LieAlgebra or None
    initial: np.ndarray
    initial_parts: dict
    integrator: IntegratorConfig
    grid: np.ndarray
    tolerances: dict
    family: str

    def hash(self):
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()


def _build_hamiltonian(ham):
    """Returns (family, ScalarField or None, model, kk_spec, algebra)."""
    if ham is None:
        return None, None, None, None, None
    _reject_unknown(ham, _HAM_KEYS, "hamiltonian")
    family = ham.get("family")
    if family == "polynomial":
        dim = int(ham["dim"])
        H = ScalarField.from_table(dim, ham["terms"])
        return family, H, None, None, None
    if family == "euler_top":
        inertia = [float(v) for v in ham["inertia"]]
        if len(inertia) != 3 or any(v <= 0 for v in inertia):
            raise InvalidScenario("euler_top needs three positive moments of inertia")
        terms = [{"monomial": [2 if k == j else 0 for k in range(3)], "coeff": 0.5 / inertia[j]}
                 for j in range(3)]
        H = ScalarField.from_table(3, terms)
        return family, H, None, None, build_algebra("so3")
    if family == "quadratic_gauge":
        m = int(ham["m"])
        n = int(ham["n"])
        alg_spec = ham.get("algebra", "u1" if n == 1 else None)
        if alg_spec is None:
            raise InvalidScenario("quadratic_gauge with n > 1 needs an explicit algebra")
        algebra = _algebra_from_spec(alg_spec)
        if algebra.dim != n:
            raise InvalidScenario("quadratic_gauge algebra must match n")
        gamma_inv = _matrix_field(ham.get("gamma_inv"), (m, m), m, "gamma_inv")
        A = GaugePotentialField(m, n, algebra,
                                poly=_matrix_field(ham.get("A"), (m, n), m, "A"))
        chi_inv = None
        if ham.get("chi_inv") is not None:
            chi_inv = _matrix_field(ham["chi_inv"], (n, n), m, "chi_inv")
        model = QuadraticGaugeModel(m, n, algebra, gamma_inv, A, chi_inv)
        return family, None, model, None, algebra
    if family == "kk":
        m = int(ham["m"])
        group = build_group(ham["group"])
        n = group.n
        gamma_inv = _matrix_field(ham.get("gamma_inv"), (m, m), m, "gamma_inv")
        A = GaugePotentialField(m, n, group.algebra,
                                poly=_matrix_field(ham.get("A"), (m, n), m, "A"))
        iota_inv = np.asarray(ham.get("iota_inv", np.eye(n).tolist()), dtype=float)
        spec = KKMetricSpec(m=m, group=group, gamma_inv=gamma_inv, A=A, iota_inv=iota_inv)
        model = QuadraticGaugeModel(m, n, group.algebra, gamma_inv, A,
                                    MatrixPolyField.constant(iota_inv, m))
        return family, None, model, spec, group.algebra
    raise InvalidScenario(f"unknown hamiltonian family {family!r}")


def _build_poisson(spec):
    if spec is None:
        return None
    _reject_unknown(spec, _POISSON_KEYS, "poisson")
    kind = spec.get("kind")
    if kind == "canonical":
        return build_structure("canonical", m=int(spec["m"]))
    if kind == "lie_poisson":
        return build_structure("lie_poisson", algebra=_algebra_from_spec(spec["algebra"]))
    if kind == "darboux_product":
        return build_structure("darboux_product", m=int(spec["m"]),
                               transverse=_algebra_from_spec(spec["transverse"]))
    raise InvalidScenario(f"unknown poisson kind {kind!r} (custom structures are API-only)")


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidScenario(f"scenario is not valid JSON: {exc}")
    return parse_scenario(raw)


def parse_scenario(raw) -> Scenario:
    if not isinstance(raw, dict):
        raise InvalidScenario("scenario must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "scenario")
    seed = int(raw.get("seed", 0))

    tolerances = dict(DEFAULT_TOLERANCES)
    if raw.get("tolerances"):
        _reject_unknown(raw["tolerances"], _TOL_KEYS, "tolerances")
        tolerances.update({k: float(v) for k, v in raw["tolerances"].items()})

    family, H, model, kk_spec, algebra = _build_hamiltonian(raw.get("hamiltonian"))
    P = _build_poisson(raw.get("poisson"))
    if P is None and model is not None and algebra is not None:
        P = build_structure("darboux_product", m=model.m, transverse=algebra)
    if P is None and family == "euler_top":
        P = build_structure("lie_poisson", algebra=algebra)

    integrator = IntegratorConfig()
    if raw.get("integrator"):
        _reject_unknown(raw["integrator"], _INTEGRATOR_KEYS, "integrator")
        integrator = IntegratorConfig(
            method=raw["integrator"].get("method", "rk4"),
            h=float(raw["integrator"].get("h", 1e-3)),
            T=float(raw["integrator"].get("T", 1.0)),
            newton_tol=float(raw["integrator"].get("newton_tol", 1e-12)),
            newton_max_iter=int(raw["integrator"].get("newton_max_iter", 50)),
        )

    initial = np.zeros(0)
    parts = {}
    init = raw.get("initial")
    if isinstance(init, dict):
        _reject_unknown(init, _INITIAL_KEYS, "initial")
        parts = {k: np.asarray(v, dtype=float) for k, v in init.items()}
        order = [parts.get("x", np.zeros(0)), parts.get("p", np.zeros(0)),
                 parts.get("r", np.zeros(0))]
        initial = np.concatenate(order)
    elif init is not None:
        initial = np.asarray(init, dtype=float)

    grid = np.asarray(raw.get("grid", []), dtype=float)

    sc = Scenario(seed=seed, raw=raw, poisson=P, hamiltonian=H, model=model,
                  kk_spec=kk_spec, algebra=algebra, initial=initial,
                  initial_parts=parts, integrator=integrator, grid=grid,
                  tolerances=tolerances, family=family or "")
    _check_dimensions(sc)
    return sc


def _check_dimensions(sc: Scenario):
    if sc.poisson is not None and sc.hamiltonian is not None:
        if sc.hamiltonian.dim != sc.poisson.dim:
            raise InvalidScenario(
                f"Hamiltonian dimension {sc.hamiltonian.dim} does not match "
                f"structure dimension {sc.poisson.dim}")
    if sc.poisson is not None and sc.model is not None:
        if sc.model.dim != sc.poisson.dim:
            raise InvalidScenario(
                f"field model dimension {sc.model.dim} does not match "
                f"structure dimension {sc.poisson.dim}")
    if sc.poisson is not None and sc.initial.size:
        if sc.initial.size != sc.poisson.dim and sc.family != "kk":
            raise InvalidScenario(
                f"initial state length {sc.initial.size} does not match "
                f"structure dimension {sc.poisson.dim}")
    if sc.family == "kk" and sc.initial_parts:
        m, n = sc.kk_spec.m, sc.kk_spec.n
        for key, want in (("x", m), ("p", m), ("r", n)):
            got = sc.initial_parts.get(key)
            if got is not None and got.size != want:
                raise InvalidScenario(f"initial {key} must have length {want}")
    if sc.grid.size:
        if sc.model is None:
            raise InvalidScenario("grid extraction needs a quadratic_gauge or kk hamiltonian")
        if sc.grid.ndim != 2 or sc.grid.shape[1] != sc.model.m:
            raise InvalidScenario(f"grid must be a list of base points of length {sc.model.m}")
