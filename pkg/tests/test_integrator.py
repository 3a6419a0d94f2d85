import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rthslab.integrator import (
    IntegratorConfig,
    Scheme,
    chang_parameters,
    initial_state,
    predict_displacement,
    run_pure_fe,
    step,
)
from rthslab.metrics import nrmse
from rthslab.signals import GroundMotion
from rthslab.structure import build_sdof, exact_linear_response

from conftest import BRACE_K, DT, FRAME_K, MASS, ZETA


def test_chang_parameters_golden(bench_model):
    b1, b2 = chang_parameters(bench_model, DT)
    assert b1 == pytest.approx(0.9999727828448098, rel=1e-15)
    assert b2 == pytest.approx(0.4998820636017554, rel=1e-15)


def test_chang_parameters_hand_formula():
    model = build_sdof(2.0, 5.0, 0.1, brace_stiffness=3.0)
    dt = 0.01
    d = 4 * 2.0 + 2 * model.damping * dt + 8.0 * dt * dt
    b1, b2 = chang_parameters(model, dt)
    assert b1 == pytest.approx((8.0 + 2 * model.damping * dt) / d, rel=1e-15)
    assert b2 == pytest.approx(4.0 / d, rel=1e-15)


def test_one_step_golden(bench_model, bench_integrator):
    # frozen first-step displacement under a unit ground-acceleration kick
    state = initial_state(bench_model, -1000.0)
    xp = predict_displacement(bench_model, bench_integrator, state)
    assert xp == pytest.approx(0.00011918117132228742, rel=1e-14)
    nxt = step(bench_model, bench_integrator, state, BRACE_K * xp, -1000.0)
    assert nxt.x == xp
    assert nxt.step == 1
    assert nxt.t == pytest.approx(DT)


def test_rest_state_stays_at_rest(bench_model, bench_integrator):
    state = initial_state(bench_model, 0.0)
    for _ in range(50):
        fb = BRACE_K * predict_displacement(bench_model, bench_integrator, state)
        state = step(bench_model, bench_integrator, state, fb, 0.0)
    assert state.x == 0.0
    assert state.v == 0.0
    assert state.a == 0.0


def test_initial_state_balances_eom(bench_model):
    s = initial_state(bench_model, -750.0)
    assert s.a == pytest.approx(750.0)
    s2 = initial_state(bench_model, -750.0, feedback=10.0)
    assert s2.a == pytest.approx(750.0 - 10.0 / MASS)


def test_pure_fe_matches_exact_oracle(bench_model, bench_integrator, record_2048):
    hist = run_pure_fe(bench_model, bench_integrator, record_2048)
    exact = exact_linear_response(bench_model, record_2048)
    err = nrmse(exact.x, hist.command)
    assert err < 0.1


def test_central_difference_matches_chang(bench_model, record_2048):
    icfg = IntegratorConfig.for_model(bench_model, DT, scheme=Scheme.CENTRAL_DIFFERENCE)
    n = 8193
    hist = run_pure_fe(bench_model, icfg, record_2048, n=n)
    exact = exact_linear_response(bench_model, record_2048)
    err = nrmse(exact.x[:n], hist.command)
    assert err < 0.1


def test_central_difference_stability_guard():
    # omega_n*dt >= 2 must be refused for the conditionally stable scheme
    stiff = build_sdof(1.0, 4.0e6, 0.0, brace_stiffness=0.0)
    assert stiff.omega_n * 0.01 >= 2.0
    with pytest.raises(ValueError, match="unstable"):
        IntegratorConfig.for_model(stiff, 0.01, scheme=Scheme.CENTRAL_DIFFERENCE)
    IntegratorConfig.for_model(stiff, 1e-5, scheme=Scheme.CENTRAL_DIFFERENCE)


def test_dt_mismatch_rejected(bench_model, bench_integrator):
    gm = GroundMotion(dt=0.01, accel=np.zeros(100), name="coarse")
    with pytest.raises(ValueError, match="does not match"):
        run_pure_fe(bench_model, bench_integrator, gm)


def test_run_pure_fe_columns_consistent(bench_model, bench_integrator, record_2048):
    hist = run_pure_fe(bench_model, bench_integrator, record_2048, n=2048)
    assert np.array_equal(hist.compensated, hist.command)
    assert np.array_equal(hist.measured, hist.command)
    np.testing.assert_allclose(hist.force, BRACE_K * hist.command, rtol=0, atol=1e-12)
    assert np.all(np.isfinite(hist.vel))
    assert np.all(np.isfinite(hist.acc))
    # velocity column is the trapezoidal integral of the acceleration column
    v_rec = np.cumsum(0.5 * DT * (hist.acc[1:] + hist.acc[:-1]))
    np.testing.assert_allclose(hist.vel[1:], v_rec, atol=1e-9)


def _amplification_matrix(model, dt):
    """Free-vibration one-step map (x, dt*v) -> (x, dt*v) for Chang's scheme."""
    b1, b2 = chang_parameters(model, dt)
    m, c, k = model.mass, model.damping, model.total_stiffness
    ke, ka = model.brace_stiffness, model.frame_stiffness

    def advance(x, v):
        a = (-ka * x - ke * x - c * v) / m
        x1 = x + b1 * dt * v + b2 * dt * dt * a
        v_half = v + 0.5 * dt * a
        a1 = (-ka * x1 - ke * x1 - c * v_half) / (m + 0.5 * c * dt)
        v1 = v + 0.5 * dt * (a + a1)
        return x1, v1

    e1 = advance(1.0, 0.0)
    e2 = advance(0.0, 1.0 / dt)
    return np.array([[e1[0], e2[0]], [e1[1] * dt, e2[1] * dt]])


@settings(max_examples=40, deadline=None)
@given(
    mass=st.floats(0.1, 100.0),
    k_tot=st.floats(1.0, 1e5),
    dt=st.floats(1e-4, 0.5),
)
def test_chang_spectrally_stable_at_any_step(mass, k_tot, dt):
    # undamped: unit-determinant amplification and |trace| < 2, every dt
    model = build_sdof(mass, k_tot / 2, 0.0, brace_stiffness=k_tot / 2)
    amp = _amplification_matrix(model, dt)
    assert np.linalg.det(amp) == pytest.approx(1.0, rel=1e-9)
    assert abs(np.trace(amp)) < 2.0 + 1e-12


def test_free_vibration_no_numerical_damping(bench_model, bench_integrator):
    # kick then release: peak amplitude must not decay without physical damping
    model = build_sdof(MASS, FRAME_K, 0.0, brace_stiffness=BRACE_K)
    icfg = IntegratorConfig.for_model(model, DT)
    n = 20481
    gm = GroundMotion(dt=DT, accel=np.zeros(n), name="still")
    accel = gm.accel.copy()
    accel[:64] = -2000.0
    gm = GroundMotion(dt=DT, accel=accel, name="kick")
    hist = run_pure_fe(model, icfg, gm)
    first = np.max(np.abs(hist.command[64:4096]))
    last = np.max(np.abs(hist.command[-4032:]))
    assert last == pytest.approx(first, rel=1e-6)


def test_empty_motion_rejected(bench_model, bench_integrator):
    gm = GroundMotion(dt=DT, accel=np.zeros(100), name="z")
    with pytest.raises(ValueError, match="empty"):
        run_pure_fe(bench_model, bench_integrator, gm, n=0)
