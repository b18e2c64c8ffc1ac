import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from qcjacobi.algebra import standard_structure
from qcjacobi.model import (ModelValidationError, bonnet_myers_form, check_curvature, comp1_rhs,
                            kappa, lemma_t0u_check, make_model, model_from_dict, model_residuals,
                            model_to_dict, random_model, rho, rho_horizontal, rho_matrices, ric,
                            sum_sectional, torsion_matrices, torsion_xi)

from oracles import random_unit, sasakian_tensor, tensor_eval


def oracle_ric(R, X, d):
    e = np.eye(d)
    return sum(R(e[i], X, X, e[i]) for i in range(d))


def oracle_sum_sectional(R, I, X):
    return sum(R(I[a] @ X, X, X, I[a] @ X) for a in range(3))


@pytest.mark.parametrize("n", [2, 3])
def test_sasakian_contractions_match_explicit_tensor(n, rng):
    M = make_model("sasakian", n=n)
    R = tensor_eval(sasakian_tensor(M.Q.I))
    for _ in range(5):
        X = random_unit(rng, M.dim)
        assert ric(M, X, X) == pytest.approx(oracle_ric(R, X, M.dim), abs=1e-12)
        assert sum_sectional(M, X) == pytest.approx(oracle_sum_sectional(R, M.Q.I, X), abs=1e-12)


def test_sasakian_n2_values():
    M = make_model("sasakian", n=2)
    e1 = np.eye(8)[0]
    assert ric(M, e1, e1) == 16.0
    assert sum_sectional(M, e1) == 12.0
    assert bonnet_myers_form(M, e1) == 4.0
    assert kappa(M) == 1.0


@pytest.mark.parametrize("n", [2, 3])
def test_sasakian_tensor_satisfies_curvature_constraints(n, rng):
    M = make_model("sasakian", n=n)
    R = tensor_eval(sasakian_tensor(M.Q.I))
    for _ in range(5):
        X, Y, Z, V = (rng.standard_normal(M.dim) for _ in range(4))
        res = check_curvature(M, R, X, Y, Z, V)
        assert res["bianchi"] < 1e-12
        assert res["comp1"] < 1e-12


def test_comp1_sasakian_example():
    M = make_model("sasakian", n=2)
    e1 = np.eye(8)[0]
    I1e1 = M.Q.I[0] @ e1
    assert comp1_rhs(M, e1, I1e1, e1, I1e1) == pytest.approx(-8.0)
    R = tensor_eval(sasakian_tensor(M.Q.I))
    lhs = 3 * R(e1, I1e1, e1, I1e1) - sum(R(M.Q.I[a] @ e1, M.Q.I[a] @ I1e1, e1, I1e1)
                                          for a in range(3))
    assert lhs == pytest.approx(-8.0)


def test_flat_zero_tensor_passes_and_random_tensor_fails(flat2, sas2, rng):
    X, Y, Z, V = (rng.standard_normal(8) for _ in range(4))
    res = check_curvature(flat2, lambda *a: 0.0, X, Y, Z, V)
    assert res == {"bianchi": 0.0, "comp1": 0.0}
    T = rng.standard_normal((8,) * 4)
    res = check_curvature(sas2, tensor_eval(T), X, Y, Z, V)
    assert max(res.values()) > 1e-3


def test_builtin_models():
    f = make_model("flat", n=2)
    assert f.S == 0.0 and f.torsion_free and kappa(f) == 0.0
    s = make_model("sasakian", n=3)
    assert s.S == 2.0 and s.torsion_free and kappa(s) == 1.0
    with pytest.raises(ValueError):
        make_model("hyperbolic", n=2)


def test_random_model_is_valid(structure, rng):
    M = random_model(structure, rng)
    assert max(model_residuals(structure, M.T0, M.U).values()) < 1e-12
    assert not M.torsion_free


def test_invalid_t0_names_propt_line_1():
    Q = standard_structure(2)
    # block-constant diagonal lies in the [3] component, not [-1]
    T0 = np.diag([1.0, 1, 1, 1, -1, -1, -1, -1])
    with pytest.raises(ModelValidationError) as info:
        make_model("custom", Q, T0=T0)
    assert "propt-line-1" in info.value.failures
    assert "propt-line-1" in str(info.value)


def test_invalid_u_names_propt_line_2():
    Q = standard_structure(2)
    U = np.diag([1.0, -1.0, 0, 0, 0, 0, 0, 0])
    with pytest.raises(ModelValidationError) as info:
        make_model("custom", Q, U=U)
    assert set(info.value.failures) == {"propt-line-2"}


def test_torsion_matrices_match_pointwise(custom2, rng):
    K = torsion_matrices(custom2)
    X, Y = rng.standard_normal(8), rng.standard_normal(8)
    for a in range(3):
        assert X @ K[a] @ Y == pytest.approx(torsion_xi(custom2, a + 1, X, Y), abs=1e-12)


def test_torsion_xi_t0_part_symmetric_u_part_skew(custom2, rng):
    only_t0 = make_model("custom", custom2.Q, T0=custom2.T0)
    only_u = make_model("custom", custom2.Q, U=custom2.U)
    X, Y = rng.standard_normal(8), rng.standard_normal(8)
    for a in (1, 2, 3):
        assert torsion_xi(only_t0, a, X, Y) == pytest.approx(torsion_xi(only_t0, a, Y, X),
                                                             abs=1e-12)
        assert torsion_xi(only_u, a, X, Y) == pytest.approx(-torsion_xi(only_u, a, Y, X),
                                                            abs=1e-12)


def test_rho_matrices_match_pointwise(custom2, rng):
    H = rho_matrices(custom2)
    X, Z = rng.standard_normal(8), rng.standard_normal(8)
    for a in range(3):
        assert X @ H[a] @ Z == pytest.approx(rho(custom2, a + 1, X, Z), abs=1e-12)
        # rho_a(X, I_a Y) is the horizontal form
        assert rho(custom2, a + 1, X, custom2.Q.I[a] @ Z) == pytest.approx(
            rho_horizontal(custom2, a + 1, X, Z), abs=1e-12)


def test_sasakian_rho():
    M = make_model("sasakian", n=2)
    e1 = np.eye(8)[0]
    assert rho_horizontal(M, 1, e1, e1) == -2.0
    assert rho(M, 1, e1, M.Q.I[0] @ e1) == -2.0


def test_sum_sectional_requires_unit(sas2):
    with pytest.raises(ValueError):
        sum_sectional(sas2, 2 * np.eye(8)[0])


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([2, 3]))
def test_lemma_t0u_random_models(seed, n):
    rng = np.random.default_rng(seed)
    M = random_model(standard_structure(n), rng)
    X = random_unit(rng, M.dim)
    lhs, rhs, res = lemma_t0u_check(M, X)
    assert res < 1e-12 * max(1.0, abs(lhs))


def test_kappa_is_the_minimum(custom2, rng):
    k, w = kappa(custom2, return_witness=True)
    n = custom2.n
    assert bonnet_myers_form(custom2, w) == pytest.approx(4 * (n - 1) * k, abs=1e-12)
    X = rng.standard_normal((500, 8))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    assert np.all(bonnet_myers_form(custom2, X) >= 4 * (n - 1) * k - 1e-12)


def test_model_dict_roundtrip(custom2, sas2):
    back = model_from_dict(json.loads(json.dumps(model_to_dict(custom2))))
    assert_allclose(back.T0, custom2.T0)
    assert_allclose(back.U, custom2.U)
    assert back.S == custom2.S
    assert model_from_dict(model_to_dict(sas2)).kind == "sasakian"
    with pytest.raises(ValueError):
        model_from_dict({"kind": "custom"})


def test_model_arrays_are_read_only(custom2):
    with pytest.raises(ValueError):
        custom2.T0[0, 0] = 1.0
