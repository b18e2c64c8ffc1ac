import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from qcjacobi.algebra import standard_structure
from qcjacobi.comparison import (NO_CONJUGATE_NOTE, bonnet_myers_report, flat_conjugate_time,
                                 model_oscillator_time, random_unit_extremals, sample_extremals,
                                 trace_criterion_check)
from qcjacobi.flow import initial_state, integrate
from qcjacobi.frame import trace_rcc
from qcjacobi.model import make_model, random_model

from oracles import random_unit


def test_sasakian_report():
    rep = bonnet_myers_report(make_model("sasakian", n=2))
    assert rep.kappa == 1.0
    assert rep.condition_holds
    assert rep.diameter_bound == pytest.approx(np.pi, rel=1e-15)
    d = rep.to_dict()
    assert d["diameter_bound"] == rep.diameter_bound
    assert len(d["witness_direction"]) == 8


def test_flat_report_fails():
    rep = bonnet_myers_report(make_model("flat", n=3))
    assert rep.kappa == 0.0
    assert not rep.condition_holds
    assert rep.diameter_bound is None
    assert rep.message == "Bonnet-Myers condition fails"


def test_custom_positive_kappa_bound(rng):
    M = random_model(standard_structure(2), rng, scale=0.01, S=3.0)
    rep = bonnet_myers_report(M)
    assert rep.condition_holds
    assert rep.diameter_bound == pytest.approx(np.pi / np.sqrt(rep.kappa))


def test_sasakian_trace_margin_zero_at_rest():
    M = make_model("sasakian", n=2)
    traj = integrate(M, initial_state(np.eye(8)[0], np.zeros(3)), 1.0)
    holds, margin = trace_criterion_check(M, traj)
    assert holds and margin == 0.0
    assert trace_rcc(M, np.eye(8)[0], np.zeros(3)) == 4.0


@pytest.mark.parametrize("n", [2, 3])
def test_sasakian_trace_margin_grows_with_v(n):
    M = make_model("sasakian", n=n)
    u = np.eye(4 * n)[0]
    v = np.array([0.5, 0.0, 0.0])
    holds, margin = trace_criterion_check(M, (u[None], v[None]))
    assert holds
    assert margin == pytest.approx(4 * (n - 1) * 0.25)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.sampled_from([2, 3]))
def test_trace_criterion_holds_for_every_model(seed, n):
    # trace(R_cc) - 4(n-1)kappa = BM form - its minimum + 4(n-1)|v|^2 >= 0
    rng = np.random.default_rng(seed)
    M = random_model(standard_structure(n), rng)
    u, v = random_unit_extremals(M, 20, rng)
    holds, margin = trace_criterion_check(M, (u, v))
    assert holds and margin >= -1e-10


@pytest.mark.parametrize("k", [0.25, 1.0, 2.0, 4.0, 9.0])
def test_oscillator_time(k):
    assert model_oscillator_time(k) * np.sqrt(k) == pytest.approx(np.pi, abs=1e-8)


def test_oscillator_rejects_nonpositive():
    with pytest.raises(ValueError):
        model_oscillator_time(0.0)


@pytest.mark.parametrize("method", ["jacobi_determinant", "exp_rank"])
def test_flat_conjugate_time_unit_speed(method):
    rep = flat_conjugate_time(2, np.eye(8)[0], [1.0, 0.0, 0.0], method=method)
    assert rep.found
    assert rep.first_conjugate_time == pytest.approx(np.pi, abs=1e-5)
    assert rep.horizon == pytest.approx(3 * np.pi)


def test_conjugate_time_scales_inversely_with_v(rng):
    u0 = random_unit(rng, 8)
    d = random_unit(rng, 3)
    t1 = flat_conjugate_time(2, u0, d).first_conjugate_time
    t2 = flat_conjugate_time(2, u0, 2.5 * d).first_conjugate_time
    assert t1 / t2 == pytest.approx(2.5, rel=1e-3)
    assert t1 == pytest.approx(np.pi, abs=1e-5)


def test_no_vertical_momentum_has_no_conjugate_point():
    rep = flat_conjugate_time(2, np.eye(8)[0], np.zeros(3))
    assert not rep.found
    assert rep.note == NO_CONJUGATE_NOTE
    assert rep.to_dict()["first_conjugate_time"] is None


def test_short_horizon_reports_nothing():
    rep = flat_conjugate_time(2, np.eye(8)[0], [1.0, 0, 0], horizon=2.0, method="exp_rank")
    assert not rep.found
    assert "horizon" in rep.note


def test_conjugate_input_validation():
    with pytest.raises(ValueError):
        flat_conjugate_time(2, 2 * np.eye(8)[0], [1.0, 0, 0])
    with pytest.raises(ValueError):
        flat_conjugate_time(2, np.eye(8)[0], [1.0, 0, 0], method="shooting")
    with pytest.raises(ValueError):
        flat_conjugate_time(2, np.eye(12)[0], [1.0, 0, 0])


def test_sample_extremals_stacks(custom2, rng):
    u0, v0 = random_unit_extremals(custom2, 4, rng)
    u, v = sample_extremals(custom2, u0, v0, 0.01)
    assert u.shape == (11, 4, 8) and v.shape == (11, 4, 3)
    single = integrate(custom2, initial_state(u0[2], v0[2]), 0.01)[-1]
    assert_allclose(u[-1, 2], single.u, atol=1e-15)
