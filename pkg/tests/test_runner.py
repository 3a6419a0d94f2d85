import time

import numpy as np
import pytest

from rthslab.compensation import AtsConfig
from rthslab.integrator import run_pure_fe
from rthslab.metrics import nrmse
from rthslab.plant import ActuatorConfig, PlantMode
from rthslab.runner import (
    FeDriver,
    LoopDivergence,
    LrDriver,
    Pacer,
    RnnDriver,
    RunConfig,
    run_hybrid,
)
from rthslab.signals import GroundMotion
from rthslab.surrogate_lr import build_lr_dataset, replay_lr, train_lr

from conftest import BRACE_K, DT


def _rc(bench_model, bench_integrator, **kw):
    base = dict(model=bench_model, integrator=bench_integrator)
    base.update(kw)
    return RunConfig(**base)


def test_offline_ideal_plant_matches_pure_fe(bench_model, bench_integrator,
                                             record_2048, pure_10s):
    rc = _rc(bench_model, bench_integrator,
             actuator=ActuatorConfig(delay_steps=0),
             plant_mode=PlantMode.OFFLINE, duration=10.0, name="fe-offline")
    hist = run_hybrid(rc, record_2048, FeDriver(bench_model, bench_integrator))
    assert len(hist) == len(pure_10s)
    np.testing.assert_array_equal(hist.command, pure_10s.command)
    np.testing.assert_array_equal(hist.force, pure_10s.force)
    np.testing.assert_array_equal(hist.measured, pure_10s.measured)
    # FE driver backfills its internal states for every row
    assert np.all(np.isfinite(hist.vel))
    np.testing.assert_allclose(hist.vel, pure_10s.vel, atol=1e-12)


def test_offline_delay_does_not_perturb_loop(bench_model, bench_integrator,
                                             record_2048, pure_10s):
    # offline mode computes force from the command, so actuator delay only
    # shows up in the measured column, never in the dynamics
    rc = _rc(bench_model, bench_integrator,
             actuator=ActuatorConfig(delay_steps=28),
             plant_mode=PlantMode.OFFLINE, duration=10.0)
    hist = run_hybrid(rc, record_2048, FeDriver(bench_model, bench_integrator))
    np.testing.assert_array_equal(hist.command, pure_10s.command)
    assert not np.array_equal(hist.measured, pure_10s.measured)


def test_online_delay_degrades_monotonically(bench_model, bench_integrator,
                                             record_2048, pure_10s):
    errs = []
    for d in (0, 7, 14, 28):
        rc = _rc(bench_model, bench_integrator,
                 actuator=ActuatorConfig(delay_steps=d),
                 plant_mode=PlantMode.ONLINE, duration=4.0, name=f"d{d}")
        hist = run_hybrid(rc, record_2048, FeDriver(bench_model, bench_integrator))
        errs.append(nrmse(pure_10s.command[: len(hist)], hist.command))
    assert errs == sorted(errs)
    assert errs[0] < 1e-6          # zero delay online == ideal plant
    assert errs[-1] > errs[0]


def test_ats_improves_online_tracking(bench_model, bench_integrator,
                                      record_2048, pure_10s):
    kw = dict(actuator=ActuatorConfig(delay_steps=28),
              plant_mode=PlantMode.ONLINE, duration=6.0)
    bare = run_hybrid(_rc(bench_model, bench_integrator, name="bare", **kw),
                      record_2048, FeDriver(bench_model, bench_integrator))
    ats = AtsConfig.for_delay(28, DT)
    comp = run_hybrid(_rc(bench_model, bench_integrator, ats=ats, name="ats", **kw),
                      record_2048, FeDriver(bench_model, bench_integrator))
    ref = pure_10s.command[: len(bare)]
    assert nrmse(ref, comp.command) < nrmse(ref, bare.command)
    assert hasattr(comp, "compensator")
    assert len(comp.compensator.trace) > 1
    assert not hasattr(bare, "compensator")
    # compensated column differs from the raw command once adaptation starts
    assert not np.array_equal(comp.command, comp.compensated)


def test_lr_self_feedback_matches_replay(bench_model, bench_integrator,
                                         record_2048, pure_10s):
    ds = build_lr_dataset(pure_10s, 28)
    model = train_lr(ds)
    ref = replay_lr(model, record_2048, BRACE_K, n=4097, name="replay")
    rc = _rc(bench_model, bench_integrator,
             actuator=ActuatorConfig(delay_steps=28),
             plant_mode=PlantMode.ONLINE, duration=4096 * DT, name="lr-self")
    hist = run_hybrid(rc, record_2048, LrDriver(model, BRACE_K, feedback="self"))
    # identical recursion, independent implementation
    np.testing.assert_allclose(hist.command, ref.command, rtol=0, atol=1e-12)
    assert np.all(np.isnan(hist.vel))


def test_lr_plant_feedback_consumes_measurements(bench_model, bench_integrator,
                                                 record_2048, pure_10s):
    ds = build_lr_dataset(pure_10s, 28)
    model = train_lr(ds)
    rc = _rc(bench_model, bench_integrator,
             actuator=ActuatorConfig(delay_steps=28),
             plant_mode=PlantMode.ONLINE, duration=4.0, name="lr-online")
    hist = run_hybrid(rc, record_2048, LrDriver(model, BRACE_K, feedback="plant"))
    assert np.all(np.isfinite(hist.command))
    err = nrmse(pure_10s.command[: len(hist)], hist.command)
    assert err < 5.0


def test_lr_feedback_mode_validation(pure_10s):
    model = train_lr(build_lr_dataset(pure_10s, 28))
    with pytest.raises(ValueError, match="unknown feedback mode"):
        LrDriver(model, BRACE_K, feedback="psychic")


def test_rnn_driver_runs(bench_model, bench_integrator, record_2048, pure_10s):
    from rthslab.surrogate_rnn import TrainConfig, build_rnn_dataset, train_rnn
    ds = build_rnn_dataset(pure_10s, 28)
    model, _ = train_rnn(ds, TrainConfig(hidden_size=3, epochs=2, seed=1))
    rc = _rc(bench_model, bench_integrator,
             actuator=ActuatorConfig(delay_steps=28),
             plant_mode=PlantMode.ONLINE, duration=0.5, name="rnn")
    hist = run_hybrid(rc, record_2048, RnnDriver(model))
    assert np.all(np.isfinite(hist.command))
    hist2 = run_hybrid(rc, record_2048, RnnDriver(model))
    np.testing.assert_array_equal(hist.command, hist2.command)


class _BlowUpDriver:
    """Emits a clean ramp, then a non-finite command at a chosen tick."""

    def __init__(self, bad_tick):
        self.bad_tick = bad_tick
        self.completed = None

    def command(self, tick_in):
        if tick_in.tick == self.bad_tick:
            return float("inf")
        return 0.001 * tick_in.tick


def test_divergence_aborts_with_window(bench_model, bench_integrator, record_2048):
    rc = _rc(bench_model, bench_integrator, duration=1.0, name="boom")
    with pytest.raises(LoopDivergence, match="tick 350") as err:
        run_hybrid(rc, record_2048, _BlowUpDriver(350))
    exc = err.value
    assert exc.tick == 350
    assert len(exc.window) == 100
    assert exc.window.name == "boom-divergence"
    # the window holds the last completed rows before the blow-up
    np.testing.assert_allclose(exc.window.command[-1], 0.001 * 349)


def test_divergence_early_window_short(bench_model, bench_integrator, record_2048):
    rc = _rc(bench_model, bench_integrator, duration=1.0)
    with pytest.raises(LoopDivergence) as err:
        run_hybrid(rc, record_2048, _BlowUpDriver(5))
    assert len(err.value.window) == 5


def test_duration_exceeding_record(bench_model, bench_integrator):
    gm = GroundMotion(dt=DT, accel=np.zeros(100), name="short")
    rc = _rc(bench_model, bench_integrator, duration=1.0)
    with pytest.raises(ValueError, match="exceeds record"):
        run_hybrid(rc, gm, FeDriver(bench_model, bench_integrator))


def test_native_record_resampled_in_loop(bench_model, bench_integrator, record_native):
    rc = _rc(bench_model, bench_integrator, duration=0.05)
    hist = run_hybrid(rc, record_native, FeDriver(bench_model, bench_integrator))
    assert len(hist) == 103   # floor(0.05 * 2048) + 1
    assert hist.dt == pytest.approx(DT)


def test_zero_excitation_stays_quiet(bench_model, bench_integrator):
    gm = GroundMotion.zeros(DT, 500)
    rc = _rc(bench_model, bench_integrator,
             actuator=ActuatorConfig(delay_steps=28),
             plant_mode=PlantMode.ONLINE)
    hist = run_hybrid(rc, gm, FeDriver(bench_model, bench_integrator))
    assert np.all(hist.command == 0.0)
    assert np.all(hist.force == 0.0)
    assert np.all(hist.measured == 0.0)


def test_unpaced_run_has_no_pacing(bench_model, bench_integrator, record_2048):
    rc = _rc(bench_model, bench_integrator, duration=0.1)
    hist = run_hybrid(rc, record_2048, FeDriver(bench_model, bench_integrator))
    assert hist.pacing is None


def test_paced_run_records_stats(bench_model, bench_integrator, record_2048):
    rc = _rc(bench_model, bench_integrator, duration=0.25, pace=True)
    hist = run_hybrid(rc, record_2048, FeDriver(bench_model, bench_integrator))
    assert hist.pacing is not None
    assert hist.pacing.ticks == len(hist)
    assert hist.pacing.rate_hz == pytest.approx(1.0 / DT)
    assert hist.pacing.max_latency_s >= 0.0


class _SlowDriver:
    """Deliberately overruns every deadline, for miss accounting."""

    def __init__(self, sleep_s):
        self.sleep_s = sleep_s
        self.completed = None

    def command(self, tick_in):
        time.sleep(self.sleep_s)
        return 0.0


def test_forced_misses_are_counted(bench_model, bench_integrator):
    # every tick takes two periods, so every tick must miss its deadline
    gm = GroundMotion.zeros(DT, 20)
    rc = _rc(bench_model, bench_integrator, pace=True)
    hist = run_hybrid(rc, gm, _SlowDriver(2.5 * DT))
    assert hist.pacing.missed == 20
    assert hist.pacing.ticks == 20
    assert hist.pacing.max_latency_s > DT
    assert hist.pacing.to_json_dict()["miss_fraction"] == 1.0


def test_pacer_sustained_overrun_flag():
    p = Pacer(2048.0)
    p.ticks, p.missed = 1000, 20
    assert p.sustained_overrun is True
    p.missed = 10   # exactly 1 percent: not sustained
    assert not p.sustained_overrun
    p.missed = 0
    assert not p.sustained_overrun
    with pytest.raises(ValueError):
        Pacer(0.0)


def test_custom_rate_pacing(bench_model, bench_integrator):
    gm = GroundMotion.zeros(DT, 64)
    rc = _rc(bench_model, bench_integrator, pace=True, rate_hz=100000.0)
    hist = run_hybrid(rc, gm, FeDriver(bench_model, bench_integrator))
    assert hist.pacing.rate_hz == 100000.0
