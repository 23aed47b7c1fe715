import numpy as np
import pytest

from gaugemech import errors
from gaugemech.dynamics import (IntegratorConfig, diagnostics, integrate, order_estimate,
                                trajectory_to_csv)
from gaugemech.extraction import GaugePotentialField, QuadraticGaugeModel, wong_hamiltonian
from gaugemech.fields import ScalarField
from gaugemech.lie_algebra import build_algebra
from gaugemech.poisson import build_structure
from gaugemech.polynomials import MatrixPolyField


def harmonic():
    P = build_structure("canonical", m=1)
    H = ScalarField.from_table(2, [{"monomial": [2, 0], "coeff": 0.5},
                                   {"monomial": [0, 2], "coeff": 0.5}])
    return P, H


def euler_top(I=(1.0, 2.0, 3.0)):
    P = build_structure("lie_poisson", algebra="so3")
    H = ScalarField.from_table(3, [{"monomial": [2, 0, 0], "coeff": 0.5 / I[0]},
                                   {"monomial": [0, 2, 0], "coeff": 0.5 / I[1]},
                                   {"monomial": [0, 0, 2], "coeff": 0.5 / I[2]}])
    return P, H


def test_config_rounding():
    cfg = IntegratorConfig(method="rk4", h=0.3, T=1.0)
    assert cfg.steps == 3
    assert abs(cfg.h_exact * cfg.steps - 1.0) < 1e-15
    with pytest.raises(errors.InvalidParams):
        IntegratorConfig(method="verlet", h=0.1, T=1.0)
    with pytest.raises(errors.InvalidParams):
        IntegratorConfig(h=-0.1, T=1.0)


def test_harmonic_oscillator_period():
    P, H = harmonic()
    cfg = IntegratorConfig(method="rk4", h=1e-3, T=2 * np.pi)
    traj = integrate(P, H, [1.0, 0.0], cfg)
    assert np.linalg.norm(traj.final_state() - [1.0, 0.0]) <= 1e-9


def test_free_flow_is_exact():
    P = build_structure("canonical", m=2)
    H = ScalarField.from_table(4, [{"monomial": [0, 0, 2, 0], "coeff": 0.5},
                                   {"monomial": [0, 0, 0, 2], "coeff": 0.5}])
    z0 = np.array([0.1, -0.4, 1.0, 2.0])
    cfg = IntegratorConfig(method="rk4", h=0.01, T=3.0)
    traj = integrate(P, H, z0, cfg)
    expected = z0.copy()
    expected[:2] += 3.0 * z0[2:]
    assert np.max(np.abs(traj.final_state() - expected)) <= 1e-12


def test_symmetric_top_conserves_r3():
    P, H = euler_top(I=(2.0, 2.0, 5.0))
    cfg = IntegratorConfig(method="rk4", h=1e-3, T=10.0)
    traj = integrate(P, H, [0.7, 0.1, 0.9], cfg)
    assert np.max(np.abs(traj.states[:, 2] - 0.9)) <= 1e-10


def test_euler_top_long_run_drifts():
    P, H = euler_top()
    cfg = IntegratorConfig(method="rk4", h=1e-2, T=100.0)
    traj = integrate(P, H, [0.6, 0.4, -0.8], cfg)
    rep = diagnostics(traj, P, H)
    assert rep.energy_drift <= 1e-8
    assert rep.casimir_drifts[0] <= 1e-8


def test_free_particle_energy_drift():
    P = build_structure("canonical", m=1)
    H = ScalarField.from_table(2, [{"monomial": [0, 2], "coeff": 0.5}])
    traj = integrate(P, H, [0.0, 1.3], IntegratorConfig(h=0.01, T=2.0))
    assert diagnostics(traj, P, H).energy_drift <= 1e-14


def test_wong_abelian_charge_exactly_constant():
    u1 = build_algebra("u1")
    A = GaugePotentialField.from_tables(2, 1, u1, [
        [[{"monomial": [0, 1], "coeff": -0.5}]],
        [[{"monomial": [1, 0], "coeff": 0.5}]],
    ])
    model = QuadraticGaugeModel(2, 1, u1, MatrixPolyField.constant(np.eye(2), 2), A, None)
    H = wong_hamiltonian(model)
    P = build_structure("darboux_product", m=2, transverse=u1)
    traj = integrate(P, H, [0.0, 0.0, 1.0, 0.0, 1.0], IntegratorConfig(h=1e-3, T=2.0))
    assert np.all(traj.states[:, 4] == 1.0)


def test_casimir_drift_h4_scaling():
    P, H = euler_top()
    z0 = [0.6, 0.4, -0.8]
    drifts = []
    for h in (0.04, 0.02):
        traj = integrate(P, H, z0, IntegratorConfig(method="rk4", h=h, T=20.0))
        drifts.append(diagnostics(traj, P, H).casimir_drifts[0])
    ratio = drifts[0] / drifts[1]
    assert 10.0 <= ratio <= 24.0


def test_order_estimates():
    P, H = harmonic()
    est = order_estimate(P, H, [1.0, 0.0], IntegratorConfig(method="rk4", h=0.1, T=1.0))
    assert est.reliable and 3.7 <= est.value <= 4.3
    est2 = order_estimate(P, H, [1.0, 0.0],
                          IntegratorConfig(method="implicit_midpoint", h=0.1, T=1.0))
    assert est2.reliable and 1.7 <= est2.value <= 2.3


def test_order_estimate_flags_linear_flow():
    P = build_structure("canonical", m=1)
    H = ScalarField.from_table(2, [{"monomial": [0, 2], "coeff": 0.5}])
    est = order_estimate(P, H, [0.0, 1.0], IntegratorConfig(method="rk4", h=0.1, T=1.0))
    assert not est.reliable
    assert np.isnan(est.value)


def test_midpoint_time_reversibility():
    for builder, z0 in ((harmonic, [1.0, 0.0]), (euler_top, [0.6, 0.4, -0.8])):
        P, H = builder()
        cfg = IntegratorConfig(method="implicit_midpoint", h=0.02, T=2.0, newton_tol=1e-13)
        fwd = integrate(P, H, z0, cfg)
        back = integrate(P, H.scaled(-1.0), fwd.final_state(), cfg)
        assert np.linalg.norm(back.final_state() - np.asarray(z0)) <= 10 * cfg.newton_tol * 1e3


def test_nonfinite_detection():
    P = build_structure("canonical", m=1)
    # H = -x^2 p^2 blows up in finite time from suitable data
    H = ScalarField.from_table(2, [{"monomial": [2, 2], "coeff": -1.0}])
    with pytest.raises(errors.NonFiniteState):
        integrate(P, H, [2.0, 2.0], IntegratorConfig(h=0.5, T=400.0))


def test_flow_derivative_matches_bracket():
    from gaugemech.poisson import poisson_bracket
    P, H = euler_top()
    f = ScalarField.from_table(3, [{"monomial": [1, 1, 0], "coeff": 1.0}])
    cfg = IntegratorConfig(method="rk4", h=1e-3, T=0.5)
    traj = integrate(P, H, [0.6, 0.4, -0.8], cfg)
    vals = np.array([f.value(s) for s in traj.states])
    mid = len(vals) // 2
    dfdt = (vals[mid + 1] - vals[mid - 1]) / (2 * cfg.h_exact)
    want = poisson_bracket(P, f, H, traj.states[mid])
    assert abs(dfdt - want) <= 1e-5 * max(1.0, abs(want))


def test_csv_format(tmp_path):
    P, H = harmonic()
    traj = integrate(P, H, [1.0, 0.0], IntegratorConfig(h=0.25, T=0.5))
    path = tmp_path / "traj.csv"
    trajectory_to_csv(traj, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "t,z1,z2,H"
    assert len(lines) == 4  # header + 3 recorded states
    assert lines[1].startswith("0,1,0,0.5")


def test_newton_divergence():
    P = build_structure("canonical", m=1)
    H = ScalarField.from_table(2, [{"monomial": [6, 0], "coeff": 1.0},
                                   {"monomial": [0, 2], "coeff": 0.5}])
    cfg = IntegratorConfig(method="implicit_midpoint", h=5.0, T=10.0,
                           newton_tol=1e-14, newton_max_iter=2)
    with pytest.raises((errors.NewtonDivergence, errors.NonFiniteState)):
        integrate(P, H, [2.0, 2.0], cfg)


def test_midpoint_on_lie_poisson():
    P, H = euler_top()
    cfg = IntegratorConfig(method="implicit_midpoint", h=0.01, T=5.0, newton_tol=1e-13)
    traj = integrate(P, H, [0.6, 0.4, -0.8], cfg)
    rep = diagnostics(traj, P, H)
    assert rep.energy_drift <= 1e-7
    assert rep.casimir_drifts[0] <= 1e-10  # midpoint preserves quadratic invariants
