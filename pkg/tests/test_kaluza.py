import numpy as np
import pytest

from gaugemech import errors
from gaugemech.dynamics import IntegratorConfig, integrate
from gaugemech.extraction import (GaugePotentialField, QuadraticGaugeModel, extract_fields,
                                  vertical_jet, wong_hamiltonian)
from gaugemech.fields import ScalarField
from gaugemech.kaluza import (KKMetricSpec, KKState, build_group, integrate_kk, kk_hamiltonian,
                              kk_trajectory_to_csv, moment_map, project_kk,
                              split_kk_hamiltonian)
from gaugemech.lie_algebra import build_algebra
from gaugemech.poisson import build_structure
from gaugemech.polynomials import MatrixPolyField


def landau_spec(B=1.0, iota=1.0):
    u1 = build_algebra("u1")
    group = build_group("u1")
    A = GaugePotentialField.from_tables(2, 1, u1, [
        [[{"monomial": [0, 1], "coeff": -0.5 * B}]],
        [[{"monomial": [1, 0], "coeff": 0.5 * B}]],
    ])
    return KKMetricSpec(m=2, group=group, gamma_inv=MatrixPolyField.constant(np.eye(2), 2),
                        A=A, iota_inv=np.array([[1.0 / iota]]))


def so3_linear_spec(scale=1.2, seed=42, iota_inv=None, m=2):
    so3 = build_algebra("so3")
    group = build_group("so3")
    rng = np.random.default_rng(seed)
    tables = []
    for mu in range(m):
        row = []
        for a in range(3):
            terms = []
            for nu in range(m):
                mono = [0] * m
                mono[nu] = 1
                terms.append({"monomial": mono, "coeff": scale * rng.standard_normal()})
            row.append(terms)
        tables.append(row)
    A = GaugePotentialField.from_tables(m, 3, so3, tables)
    return KKMetricSpec(m=m, group=group, gamma_inv=MatrixPolyField.constant(np.eye(m), m),
                        A=A, iota_inv=np.eye(3) if iota_inv is None else iota_inv)


def flat_spec(group_name="so3", m=2):
    group = build_group(group_name)
    n = group.n
    A = GaugePotentialField.constant(m, n, group.algebra, np.zeros((m, n)))
    return KKMetricSpec(m=m, group=group, gamma_inv=MatrixPolyField.constant(np.eye(m), m),
                        A=A, iota_inv=np.eye(n))


def test_build_group_u1():
    g = build_group("u1")
    z = g.exp([0.7])
    assert abs(z[0, 0] - np.exp(0.7j)) < 1e-14
    assert abs(abs(g.reproject(np.array([[1.3 + 0.4j]]))[0, 0]) - 1.0) < 1e-14


def test_build_group_so3_rodrigues():
    g = build_group("so3")
    R = g.exp([0.0, 0.0, np.pi])
    assert np.allclose(R, np.diag([-1.0, -1.0, 1.0]), atol=1e-12)
    assert g.commutator_residual() <= 1e-12
    noisy = R + 1e-3 * np.random.default_rng(0).standard_normal((3, 3))
    P = g.reproject(noisy)
    assert np.max(np.abs(P.T @ P - np.eye(3))) <= 1e-12
    assert np.linalg.det(P) > 0


def test_build_group_su2():
    g = build_group("su2")
    assert g.commutator_residual() <= 1e-12
    U = g.exp([0.3, -0.7, 1.1])
    assert np.max(np.abs(U.conj().T @ U - np.eye(2))) <= 1e-12
    assert abs(np.linalg.det(U) - 1.0) < 1e-12
    P = g.reproject(U + 1e-3)
    assert np.max(np.abs(P.conj().T @ P - np.eye(2))) <= 1e-12
    assert abs(np.linalg.det(P) - 1.0) < 1e-12


def test_unknown_group():
    with pytest.raises(errors.UnknownGroup):
        build_group("sp4")


def test_ad_matrix_matches_algebra():
    for name in ("u1", "so3", "su2"):
        g = build_group(name)
        rng = np.random.default_rng(1)
        v = rng.standard_normal(g.n)
        h = g.exp(v)
        Adm = g.ad_matrix(h)
        # Ad must represent conjugation: coefficients of h E_a h^-1
        for a in range(g.n):
            target = h @ g.basis[a] @ np.linalg.inv(h)
            assert np.allclose(g.algebra_matrix(Adm[:, a]), target, atol=1e-12)


def test_kk_hamiltonian_product_metric():
    spec = flat_spec("so3")
    K0 = kk_hamiltonian(spec)
    s = KKState(x=np.array([0.1, 0.2]), g=spec.group.exp([0.3, 0.1, -0.2]),
                p=np.array([1.0, -2.0]), mu=np.array([0.5, 0.5, 1.0]))
    want = 0.5 * (1 + 4) + 0.5 * (0.25 + 0.25 + 1.0)
    assert abs(K0(s) - want) < 1e-12


def test_kk_hamiltonian_landau_form():
    spec = landau_spec(B=1.0, iota=2.0)
    K0 = kk_hamiltonian(spec)
    s = KKState(x=np.array([0.4, -0.3]), g=spec.group.exp([1.1]),
                p=np.array([0.8, 0.1]), mu=np.array([0.9]))
    Av = spec.A.value(s.x)
    w = s.p + Av @ s.mu  # abelian: transported charge equals mu
    assert abs(K0(s) - (0.5 * w @ w + 0.5 * 0.9 ** 2 / 2.0)) < 1e-12


def test_zero_charge_flat_is_straight_line():
    spec = flat_spec("so3")
    s0 = KKState.from_wong(spec, [0.0, 0.0], [1.0, 0.5], [0.0, 0.0, 0.0])
    traj = integrate_kk(spec, s0, IntegratorConfig(h=0.01, T=2.0))
    sF = traj.final_state()
    assert np.allclose(sF.x, [2.0, 1.0], atol=1e-12)
    assert np.allclose(sF.g, np.eye(3), atol=1e-12)


def test_landau_orbit_radius_and_energy():
    spec = landau_spec(B=1.0)
    s0 = KKState.from_wong(spec, [0.0, 0.0], [1.0, 0.0], [1.0])
    cfg = IntegratorConfig(h=1e-3, T=2 * np.pi)
    traj = integrate_kk(spec, s0, cfg)
    # speed |v| = 1 and qB = 1: the base orbit closes after one cyclotron period
    sF = traj.final_state()
    assert np.linalg.norm(sF.x - s0.x) <= 1e-9
    assert np.max(np.abs(traj.energy - traj.energy[0])) <= 1e-12
    xs = np.array([s.x for s in traj.states])[:-1]  # drop the duplicated period endpoint
    center = xs.mean(axis=0)
    radii = np.linalg.norm(xs - center, axis=1)
    assert abs(radii.mean() - 1.0) <= 1e-6 and radii.std() <= 1e-6


def test_so3_flat_fiber_is_free_rigid_body():
    spec = flat_spec("so3")
    spec = KKMetricSpec(m=2, group=spec.group, gamma_inv=spec.gamma_inv, A=spec.A,
                        iota_inv=np.diag([1.0, 1.0 / 2.0, 1.0 / 3.0]))
    s0 = KKState.from_wong(spec, [0.0, 0.0], [0.3, 0.0], [0.7, 0.1, 0.9])
    traj = integrate_kk(spec, s0, IntegratorConfig(h=1e-3, T=10.0))
    mus = np.array([s.mu for s in traj.states])
    norms = np.linalg.norm(mus, axis=1)
    assert np.max(np.abs(norms - norms[0])) <= 1e-10  # |mu|^2 is a Casimir of the fiber flow
    assert np.max(np.abs(traj.moments - traj.moments[0])) <= 1e-8  # transported charge conserved
    xs = np.array([s.x for s in traj.states])
    assert np.allclose(xs[-1], [3.0, 0.0], atol=1e-10)  # decoupled straight base line


def test_moment_map_examples():
    spec = landau_spec()
    s0 = KKState.from_wong(spec, [0.1, 0.2], [1.0, 0.0], [0.8])
    traj = integrate_kk(spec, s0, IntegratorConfig(h=1e-3, T=1.0))
    assert np.all(traj.moments == traj.moments[0])  # abelian charge exactly constant
    zero = KKState.from_wong(spec, [0.0, 0.0], [1.0, 0.0], [0.0])
    assert moment_map(spec.group, zero) == 0.0


def test_project_kk():
    spec = flat_spec("so3")
    s = KKState.from_wong(spec, [0.3, -0.2], [1.0, 0.4], [0.0, 0.0, 0.0])
    z = project_kk(spec, s)
    assert np.allclose(z, [0.3, -0.2, 1.0, 0.4, 0.0, 0.0, 0.0])
    # away from the identity the charge is the transported body momentum
    h = spec.group.exp([0.2, -1.0, 0.4])
    s2 = KKState(x=s.x, g=h, p=s.p, mu=np.array([0.5, 0.1, -0.3]))
    r = project_kk(spec, s2)[4:]
    assert np.allclose(r, spec.group.ad_matrix(np.linalg.inv(h)).T @ s2.mu)


def test_split_kk_flat_and_landau():
    split = split_kk_hamiltonian(flat_spec("so3"))
    assert split.residual <= 1e-12
    assert split.classification == "ad-type"

    split2 = split_kk_hamiltonian(landau_spec())
    assert split2.residual <= 1e-12
    assert split2.classification == "ad-type"
    assert split2.ad_invariance_residual == 0.0


def test_split_kk_detects_noninvariant_iota():
    spec = so3_linear_spec(iota_inv=np.diag([1.0, 2.0, 3.0]))
    split = split_kk_hamiltonian(spec)
    assert split.ad_invariance_residual > 0.1
    assert split.classification == "mixed type"
    assert split.residual > 1e-6  # the naive split misses the non-invariant fiber term


def test_projection_equivalence_u1():
    spec = landau_spec()
    model = QuadraticGaugeModel(2, 1, spec.group.algebra, spec.gamma_inv, spec.A, None)
    H = wong_hamiltonian(model)
    P = build_structure("darboux_product", m=2, transverse="u1")
    z0 = np.array([0.0, 0.0, 1.0, 0.0, 1.0])
    cfg = IntegratorConfig(h=1e-3, T=5.0)
    tw = integrate(P, H, z0, cfg)
    tk = integrate_kk(spec, KKState.from_wong(spec, z0[:2], z0[2:4], z0[4:]), cfg)
    assert np.max(np.abs(tk.projected(spec) - tw.states)) <= 1e-6


def test_projection_equivalence_so3():
    spec = so3_linear_spec()
    model = QuadraticGaugeModel(2, 3, spec.group.algebra, spec.gamma_inv, spec.A, None)
    H = wong_hamiltonian(model)
    P = build_structure("darboux_product", m=2, transverse="so3")
    z0 = np.array([0.2, -0.1, 1.0, 0.3, 0.9, -0.6, 1.1])
    cfg = IntegratorConfig(h=2e-3, T=2.0)
    tw = integrate(P, H, z0, cfg)
    tk = integrate_kk(spec, KKState.from_wong(spec, z0[:2], z0[2:4], z0[4:]), cfg)
    assert np.max(np.abs(tk.projected(spec) - tw.states)) <= 1e-6


def test_em_linkage_recovers_spec_fields():
    """Extracting from the pulled-back quadratic K0 in product coordinates
    reproduces (gamma_inv, A, iota_inv)."""
    spec = so3_linear_spec()
    K0 = kk_hamiltonian(spec)
    m, n = spec.m, spec.n

    def pulled_back(z):
        return K0(KKState(x=z[:m], g=spec.group.identity(), p=z[m:2 * m], mu=z[2 * m:]))

    H = ScalarField.from_callable(2 * m + n, pulled_back)
    rng = np.random.default_rng(3)
    for _ in range(3):
        x = rng.standard_normal(m)
        jet = vertical_jet(H, x, m, n, tol=1e-6)
        f = extract_fields(jet)
        assert np.max(np.abs(f.gamma_inv - spec.gamma_inv.value(x))) <= 1e-8
        assert np.max(np.abs(f.A - spec.A.value(x))) <= 1e-8
        assert np.max(np.abs(f.chi_inv - spec.iota_inv)) <= 1e-8


def test_full_flow_equals_em_flow_for_quadratic_hamiltonians():
    """Fiberwise-quadratic Hamiltonians on a linear-transverse product structure:
    the full vector field is the one generated by the fiber Hessian form."""
    from gaugemech.extraction import einstein_mayer_hamiltonian
    from gaugemech.poisson import hamiltonian_vector
    rng = np.random.default_rng(4)
    so3 = build_algebra("so3")
    m, n = 2, 3
    spec = so3_linear_spec()
    model = QuadraticGaugeModel(m, n, so3, spec.gamma_inv, spec.A,
                                MatrixPolyField.constant(np.diag([1.0, 0.5, 2.0]), m))
    H_em = einstein_mayer_hamiltonian(model)
    # independent assembly of the same fiberwise-quadratic Hamiltonian
    d = 2 * m + n

    def assembled(z):
        x, p, r = z[:m], z[m:2 * m], z[2 * m:]
        jet = model.jet_at(x).full_matrix()
        v = np.concatenate([p, r])
        return 0.5 * v @ jet @ v

    P = build_structure("darboux_product", m=m, transverse=so3)
    Hfull = ScalarField.from_callable(d, assembled)
    for _ in range(20):
        z = rng.standard_normal(d)
        X1 = hamiltonian_vector(P, H_em, z)
        X2 = hamiltonian_vector(P, Hfull, z)
        assert np.max(np.abs(X1 - X2)) <= 1e-6 * max(1.0, np.max(np.abs(X1)))


def test_kk_csv_export(tmp_path):
    spec = landau_spec()
    traj = integrate_kk(spec, KKState.from_wong(spec, [0, 0], [1, 0], [1.0]),
                        IntegratorConfig(h=0.1, T=0.3))
    path = tmp_path / "kk.csv"
    kk_trajectory_to_csv(traj, spec, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "t,x1,x2,g00re,g00im,p1,p2,mu1,K0"
    assert len(lines) == 5


def test_invalid_iota():
    group = build_group("so3")
    A = GaugePotentialField.constant(2, 3, group.algebra, np.zeros((2, 3)))
    with pytest.raises(errors.InvalidParams):
        KKMetricSpec(m=2, group=group, gamma_inv=MatrixPolyField.constant(np.eye(2), 2),
                     A=A, iota_inv=np.diag([1.0, -1.0, 1.0]))


def test_su2_kk_trajectory_stays_on_group():
    group = build_group("su2")
    su2 = group.algebra
    A = GaugePotentialField.from_tables(2, 3, su2, [
        [[{"monomial": [1, 0], "coeff": 0.5}], 0.0, [{"monomial": [0, 1], "coeff": -0.4}]],
        [0.0, [{"monomial": [1, 0], "coeff": 0.6}], 0.0],
    ])
    spec = KKMetricSpec(m=2, group=group, gamma_inv=MatrixPolyField.constant(np.eye(2), 2),
                        A=A, iota_inv=np.eye(3))
    s0 = KKState.from_wong(spec, [0.1, -0.2], [0.8, 0.4], [0.3, -0.5, 0.7])
    traj = integrate_kk(spec, s0, IntegratorConfig(h=1e-3, T=2.0))
    gF = traj.final_state().g
    assert np.max(np.abs(gF.conj().T @ gF - np.eye(2))) <= 1e-9
    assert abs(np.linalg.det(gF) - 1.0) <= 1e-9
    assert np.max(np.abs(traj.energy - traj.energy[0])) <= 1e-10


def test_su2_projection_matches_wong():
    group = build_group("su2")
    su2 = group.algebra
    A = GaugePotentialField.from_tables(2, 3, su2, [
        [[{"monomial": [1, 0], "coeff": 0.5}], 0.0, [{"monomial": [0, 1], "coeff": -0.4}]],
        [0.0, [{"monomial": [1, 0], "coeff": 0.6}], 0.0],
    ])
    spec = KKMetricSpec(m=2, group=group, gamma_inv=MatrixPolyField.constant(np.eye(2), 2),
                        A=A, iota_inv=np.eye(3))
    model = QuadraticGaugeModel(2, 3, su2, spec.gamma_inv, spec.A, None)
    H = wong_hamiltonian(model)
    P = build_structure("darboux_product", m=2, transverse="su2")
    z0 = np.array([0.1, -0.2, 0.8, 0.4, 0.3, -0.5, 0.7])
    cfg = IntegratorConfig(h=2e-3, T=2.0)
    tw = integrate(P, H, z0, cfg)
    tk = integrate_kk(spec, KKState.from_wong(spec, z0[:2], z0[2:4], z0[4:]), cfg)
    assert np.max(np.abs(tk.projected(spec) - tw.states)) <= 1e-6


def test_projection_negative_control_mismatched_charge():
    """Different initial charges are different systems: the comparison must fail."""
    spec = landau_spec()
    model = QuadraticGaugeModel(2, 1, spec.group.algebra, spec.gamma_inv, spec.A, None)
    H = wong_hamiltonian(model)
    P = build_structure("darboux_product", m=2, transverse="u1")
    cfg = IntegratorConfig(h=1e-3, T=5.0)
    tw = integrate(P, H, [0.0, 0.0, 1.0, 0.0, 1.0], cfg)
    tk = integrate_kk(spec, KKState.from_wong(spec, [0.0, 0.0], [1.0, 0.0], [0.5]), cfg)
    assert np.max(np.abs(tk.projected(spec) - tw.states)) > 0.1
