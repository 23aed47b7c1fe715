import json

import numpy as np
import pytest

from gaugemech import errors
from gaugemech.lie_algebra import (Subspace, ad_coad, bracket_vec, build_algebra, center,
                                   constants_from_json, constants_to_json, direct_sum,
                                   idealizer, jacobi_residual, quotient)
from gaugemech.reduction import manton_generator

PRESETS = ["u1", "so3", "su2", "su3", "heisenberg", "so3+su3"]


def test_so3_preset():
    g = build_algebra("so3", 1e-12)
    assert g.dim == 3
    assert np.allclose(bracket_vec(g, [1, 0, 0], [0, 1, 0]), [0, 0, 1])
    assert np.allclose(bracket_vec(g, [0, 1, 0], [0, 0, 1]), [1, 0, 0])
    assert np.allclose(bracket_vec(g, [0, 0, 1], [1, 0, 0]), [0, 1, 0])


def test_direct_sum_dims():
    g = build_algebra("so3+su3", 1e-12)
    assert g.dim == 11
    u2 = direct_sum(build_algebra("u1"), build_algebra("u1"))
    assert u2.dim == 2 and u2.is_abelian()


def test_bracket_hand_expansion():
    g = build_algebra("so3")
    # [(1,1,0),(0,1,1)] = [e1,e2] + [e1,e3] + [e2,e3] = e3 - e2 + e1
    assert np.allclose(bracket_vec(g, [1, 1, 0], [0, 1, 1]), [1, -1, 1])


def test_bracket_self_is_zero():
    g = build_algebra("su3")
    rng = np.random.default_rng(0)
    x = rng.standard_normal(8)
    assert np.linalg.norm(bracket_vec(g, x, x)) < 1e-14


@pytest.mark.parametrize("name", PRESETS)
def test_preset_jacobi(name):
    g = build_algebra(name, 1e-12)
    assert jacobi_residual(g) <= 1e-12


@pytest.mark.parametrize("name", PRESETS)
def test_bracket_antisymmetry_random(name):
    g = build_algebra(name)
    rng = np.random.default_rng(3)
    for _ in range(100):
        x = rng.standard_normal(g.dim)
        y = rng.standard_normal(g.dim)
        lhs = bracket_vec(g, x, y) + bracket_vec(g, y, x)
        assert np.linalg.norm(lhs) <= 1e-13 * max(1.0, np.linalg.norm(x) * np.linalg.norm(y))


@pytest.mark.parametrize("name", PRESETS)
def test_coad_is_minus_ad_transpose(name):
    g = build_algebra(name)
    rng = np.random.default_rng(5)
    x = rng.standard_normal(g.dim)
    ad, coad = ad_coad(g, x)
    assert np.array_equal(coad, -ad.T)


def test_ad_examples():
    so3 = build_algebra("so3")
    ad3, _ = ad_coad(so3, [0, 0, 1])
    assert np.allclose(ad3, [[0, -1, 0], [1, 0, 0], [0, 0, 0]])
    u1 = build_algebra("u1")
    ad0, coad0 = ad_coad(u1, [2.3])
    assert not ad0.any() and not coad0.any()
    adz, _ = ad_coad(so3, [0.0, 0.0, 0.0])
    assert not adz.any()


def test_rescaled_so3_is_still_an_algebra():
    # scaling one bracket output rescales a basis vector: Jacobi still holds exactly
    c = build_algebra("so3").c.copy()
    c[0, 1, 2] = 1.1
    c[1, 0, 2] = -1.1
    g = build_algebra(c, 1e-12)
    assert jacobi_residual(g) == 0.0


def test_perturbed_so3_negative_control():
    c = build_algebra("so3").c.copy()
    c[0, 1, 0] = 0.1
    c[1, 0, 0] = -0.1
    with pytest.raises(errors.JacobiViolation) as exc:
        build_algebra(c, 1e-12)
    assert exc.value.residual > 0.05


def test_antisymmetry_violation():
    c = np.zeros((2, 2, 2))
    c[0, 1, 0] = 1.0  # missing the antisymmetric partner
    with pytest.raises(errors.AntisymmetryViolation):
        build_algebra(c)


def test_unknown_preset():
    with pytest.raises(errors.UnknownPreset):
        build_algebra("e8")


def test_direct_sum_jacobi_is_max_of_components():
    a = build_algebra("so3")
    b = build_algebra("su3")
    s = direct_sum(a, b)
    assert jacobi_residual(s) == max(jacobi_residual(a), jacobi_residual(b))


def test_idealizer_abelian_is_everything():
    g = direct_sum(build_algebra("u1"), build_algebra("u1"))
    c = Subspace(2, np.array([[1.0], [0.0]]))
    assert idealizer(g, c).dim == 2


def test_idealizer_so3_axis():
    g = build_algebra("so3")
    c = Subspace(3, np.array([[0.0], [0.0], [1.0]]))
    out = idealizer(g, c)
    assert out.dim == 1
    assert abs(abs(out.basis[2, 0]) - 1.0) < 1e-12


def test_idealizer_manton_dimension():
    g = build_algebra("so3+su3")
    c = Subspace(11, manton_generator()[:, None])
    out = idealizer(g, c)
    assert out.dim == 5
    assert out.contains(c.basis[:, 0])


@pytest.mark.parametrize("name", ["so3", "heisenberg", "so3+su3"])
def test_idealizer_contains_c_and_closed(name):
    g = build_algebra(name)
    rng = np.random.default_rng(11)
    v = rng.standard_normal(g.dim)
    c = Subspace(g.dim, v[:, None] / np.linalg.norm(v))
    out = idealizer(g, c)
    assert out.contains(c.basis[:, 0])
    # bracket closure of the idealizer
    for i in range(out.dim):
        for j in range(out.dim):
            w = bracket_vec(g, out.basis[:, i], out.basis[:, j])
            assert out.contains(w, tol=1e-9)


def test_quotient_by_zero_is_isomorphic_copy():
    g = build_algebra("so3+su3")
    N = Subspace(11, np.eye(11))
    c = Subspace(11, np.zeros((11, 0)))
    q = quotient(g, N, c)
    assert q.dim == 11
    assert jacobi_residual(q) <= 1e-12


def test_quotient_heisenberg_center():
    g = build_algebra("heisenberg")
    q = quotient(g, Subspace(3, np.eye(3)), center(g))
    assert q.dim == 2 and q.is_abelian()


def test_quotient_manton_is_u2():
    g = build_algebra("so3+su3")
    c = Subspace(11, manton_generator()[:, None])
    N = idealizer(g, c)
    q = quotient(g, N, c)
    assert q.dim == 4
    assert jacobi_residual(q) <= 1e-10
    from gaugemech.lie_algebra import derived_subalgebra
    assert center(q).dim == 1
    assert derived_subalgebra(q).dim == 3


def test_quotient_precondition_failures():
    g = build_algebra("so3")
    e1 = Subspace(3, np.array([[1.0], [0.0], [0.0]]))
    with pytest.raises(errors.NotASubalgebra):
        # N = span(e1,e2) not closed: [e1,e2] = e3
        quotient(g, Subspace(3, np.eye(3)[:, :2]), Subspace(3, np.zeros((3, 0))))
    with pytest.raises((errors.NotAnIdeal, errors.NotASubalgebra)):
        quotient(g, Subspace(3, np.eye(3)), e1)  # span(e1) is not an ideal of so3


def test_constants_json_round_trip():
    g = build_algebra("su3")
    text = constants_to_json(g)
    payload = json.loads(text)
    assert np.asarray(payload).shape == (8, 8, 8)
    back = constants_from_json(text)
    assert np.allclose(back.c, g.c)
