import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rthslab.signals import GroundMotion
from rthslab.structure import (
    SdofModel,
    brace_global_stiffness,
    build_sdof,
    damping_coefficient,
    exact_linear_response,
)

from conftest import BRACE_K, DT, FRAME_K, MASS, ZETA


def test_period_reproduction(bench_model):
    # the bench brace stiffness is defined so the period lands exactly here
    assert bench_model.period == pytest.approx(0.294, abs=1e-12)
    assert bench_model.total_stiffness == pytest.approx(FRAME_K + BRACE_K)


def test_damping_coefficient_value(bench_model):
    c = damping_coefficient(MASS, FRAME_K + BRACE_K, ZETA)
    assert c == pytest.approx(1.4959965017094254, rel=1e-15)
    assert bench_model.damping == pytest.approx(c)


def test_damping_coefficient_formula():
    # c = 2 zeta sqrt(k m), hand numbers
    assert damping_coefficient(4.0, 9.0, 0.5) == pytest.approx(2 * 0.5 * 6.0)


def test_brace_global_stiffness_projection():
    assert brace_global_stiffness(100.0, 0.0) == pytest.approx(100.0)
    assert brace_global_stiffness(100.0, math.pi / 2) == pytest.approx(0.0, abs=1e-10)
    assert brace_global_stiffness(100.0, math.pi / 4) == pytest.approx(50.0)


def test_brace_angle_cross_check():
    # the bench global stiffness corresponds to a ~44.5 degree workpoint
    angle = math.acos(math.sqrt(BRACE_K / 1224.1))
    assert math.degrees(angle) == pytest.approx(44.509, abs=0.01)
    assert brace_global_stiffness(1224.1, angle) == pytest.approx(BRACE_K, rel=1e-12)


def test_build_sdof_requires_exactly_one_route():
    with pytest.raises(ValueError):
        build_sdof(MASS, FRAME_K, ZETA)
    with pytest.raises(ValueError):
        build_sdof(
            MASS, FRAME_K, ZETA,
            brace_stiffness=BRACE_K,
            brace_axial_stiffness=1224.1,
            brace_angle_rad=0.777,
        )


def test_model_validation():
    with pytest.raises(ValueError):
        SdofModel(mass=-1.0, frame_stiffness=FRAME_K, brace_stiffness=BRACE_K,
                  damping_ratio=ZETA)
    with pytest.raises(ValueError):
        SdofModel(mass=MASS, frame_stiffness=FRAME_K, brace_stiffness=BRACE_K,
                  damping_ratio=1.5)


def _free_vibration_closed_form(model, x0, v0, t):
    wn = model.omega_n
    z = model.damping_ratio
    wd = wn * math.sqrt(1 - z * z)
    A = x0
    B = (v0 + z * wn * x0) / wd
    return math.exp(-z * wn * t) * (A * math.cos(wd * t) + B * math.sin(wd * t))


def test_exact_response_free_vibration(bench_model):
    # no excitation: the oracle must match the underdamped closed form
    n = 4097
    gm = GroundMotion(dt=DT, accel=np.zeros(n), name="still")
    x0, v0 = 3.0, -40.0
    resp = exact_linear_response(bench_model, gm, x0=x0, v0=v0)
    for k in (0, 1, 100, 2048, 4096):
        want = _free_vibration_closed_form(bench_model, x0, v0, k * DT)
        assert resp.x[k] == pytest.approx(want, abs=1e-10)


def test_exact_response_step_load(bench_model):
    # constant ground acceleration: steady state -m*ug/k
    n = 60000
    ug = -500.0
    gm = GroundMotion(dt=DT, accel=np.full(n, ug), name="step")
    resp = exact_linear_response(bench_model, gm)
    x_static = -MASS * ug / bench_model.total_stiffness
    tail = resp.x[-2000:]
    assert np.max(np.abs(tail - x_static)) < 1e-4 * abs(x_static) + 1e-12
    assert resp.x[0] == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(
    x0=st.floats(-10, 10, allow_nan=False),
    v0=st.floats(-200, 200, allow_nan=False),
)
def test_exact_response_free_vibration_property(x0, v0):
    model = build_sdof(MASS, FRAME_K, ZETA, brace_stiffness=BRACE_K)
    gm = GroundMotion(dt=DT, accel=np.zeros(512), name="still")
    resp = exact_linear_response(model, gm, x0=x0, v0=v0)
    want = _free_vibration_closed_form(model, x0, v0, 511 * DT)
    assert resp.x[-1] == pytest.approx(want, abs=1e-9 + 1e-9 * max(abs(x0), abs(v0)))
