"""Closed-loop hybrid simulation: driver -> compensation -> plant -> force -> log.

Per tick i the loop
  1. asks the driver for a displacement command, handing it the ground
     acceleration at tick i together with the plant outputs of tick i-1
     (the loop is strictly causal: feedback is one tick old),
  2. optionally compensates the command,
  3. steps the virtual actuator with the (compensated) command,
  4. evaluates the specimen force per the plant mode,
  5. logs the tick.

Drivers are interchangeable: the finite-element integrator, the linear
surrogate (with plant or self feedback), or the recurrent surrogate.
"""

import gc
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .compensation import AtsCompensator
from .history import PacingStats, RunHistory
from .integrator import initial_state, predict_displacement, step
from .plant import ActuatorConfig, PlantMode, VirtualActuator
from .signals import resample


class TickInputs(NamedTuple):
    tick: int
    ug_now: float          # ground acceleration at this tick
    ug_prev: float         # ground acceleration one tick back
    measured_prev: float   # plant displacement output of the previous tick
    force_prev: float      # specimen force of the previous tick


class LoopDivergence(RuntimeError):
    """Driver emitted a non-finite command; carries the trailing history.

    The diagnostic window holds up to the last 100 completed rows so the
    blow-up can be inspected without rerunning.
    """

    def __init__(self, tick, window):
        super().__init__(f"driver command diverged (non-finite) at tick {tick}")
        self.tick = tick
        self.window = window


class FeDriver:
    """Substructured finite-element integrator as the loop driver.

    Emits x[i] at tick i, computed from the state completed with the
    previous tick's feedback; with an ideal zero-delay plant in offline mode
    this reproduces the fully analytical run bit for bit.
    """

    def __init__(self, model, integrator_config):
        self.model = model
        self.config = integrator_config
        self._state = None
        self._started = False
        self.completed = None   # (row index, v, a) newly finalized this tick

    def command(self, tick_in):
        if not self._started:
            if tick_in.tick != 0:
                raise RuntimeError("FE driver must start at tick 0")
            self._started = True
            self.completed = None
            return 0.0
        if self._state is None:
            self._state = initial_state(self.model, tick_in.ug_prev, tick_in.force_prev)
        else:
            self._state = step(
                self.model, self.config, self._state, tick_in.force_prev, tick_in.ug_prev
            )
        self.completed = (self._state.step, self._state.v, self._state.a)
        return predict_displacement(self.model, self.config, self._state)

    def finalize(self, ug_last, force_last):
        """Complete the last emitted command's state (for history backfill)."""
        if self._state is None:
            s = initial_state(self.model, ug_last, force_last)
        else:
            s = step(self.model, self.config, self._state, force_last, ug_last)
        return (s.step, s.v, s.a)


class LrDriver:
    """Linear surrogate driver.

    feedback="plant": displacement/force feedback taken from the previous
    tick's plant outputs (deployment mode). feedback="self": the driver
    consumes its own predictions delayed by delay_steps, with force
    stiffness times that value (validation mode; the plant runs but its
    outputs never reach the model).
    """

    def __init__(self, model, stiffness, feedback="plant", delay_steps=None):
        if feedback not in ("plant", "self"):
            raise ValueError(f"unknown feedback mode {feedback!r}")
        self.model = model
        self.stiffness = stiffness
        self.feedback = feedback
        self.delay_steps = model.delay_steps if delay_steps is None else delay_steps
        self._preds = []
        w = model.weights
        self._w = tuple(float(v) for v in w)
        self._b = float(model.bias)
        self.completed = None

    def command(self, tick_in):
        i = tick_in.tick
        preds = self._preds
        if self.feedback == "self":
            d = self.delay_steps
            x_fb = preds[i - d] if i >= d else 0.0
            f_fb = self.stiffness * x_fb
        else:
            x_fb = tick_in.measured_prev
            f_fb = tick_in.force_prev
        p1 = preds[i - 1] if i >= 1 else 0.0
        p2 = preds[i - 2] if i >= 2 else 0.0
        w0, w1, w2, w3, w4 = self._w
        p = w0 * tick_in.ug_now + w1 * x_fb + w2 * f_fb + w3 * p1 + w4 * p2 + self._b
        preds.append(p)
        return p


class RnnDriver:
    """Recurrent surrogate driver (experimental; not part of the default matrix)."""

    def __init__(self, model):
        self.model = model
        self._h = np.zeros(model.hidden_size)
        self.completed = None

    def command(self, tick_in):
        m = self.model
        u0 = (tick_in.ug_now - m.input_mean[0]) / m.input_std[0]
        u1 = (tick_in.force_prev - m.input_mean[1]) / m.input_std[1]
        self._h = np.tanh(m.w_in[:, 0] * u0 + m.w_in[:, 1] * u1 + m.w_rec @ self._h + m.b_h)
        return float(m.w_out @ self._h + m.b_out)


class Pacer:
    """Releases loop ticks on a fixed wall-clock schedule and counts misses.

    Tick i is released at t0 + i/rate; a tick misses its deadline when its
    work finishes more than one period after its release. Waiting sleeps in
    bulk and spins the last stretch, since timer granularity is coarser than
    the 488 us budget at 2048 Hz.
    """

    def __init__(self, rate_hz):
        if rate_hz <= 0.0:
            raise ValueError("rate must be positive")
        self.rate_hz = rate_hz
        self.period_ns = int(round(1e9 / rate_hz))
        self._t0 = None
        self.missed = 0
        self.ticks = 0
        self._max_lat = 0
        self._sum_lat = 0

    def start(self):
        self._t0 = time.perf_counter_ns()

    def wait(self, i):
        target = self._t0 + i * self.period_ns
        while True:
            rem = target - time.perf_counter_ns()
            if rem <= 0:
                return
            if rem > 250_000:
                time.sleep((rem - 150_000) / 1e9)

    def complete(self, i):
        lat = time.perf_counter_ns() - (self._t0 + i * self.period_ns)
        self.ticks += 1
        if lat > self.period_ns:
            self.missed += 1
        if lat > self._max_lat:
            self._max_lat = lat
        self._sum_lat += lat

    def stats(self):
        mean = (self._sum_lat / self.ticks / 1e9) if self.ticks else 0.0
        return PacingStats(
            rate_hz=self.rate_hz,
            ticks=self.ticks,
            missed=self.missed,
            max_latency_s=self._max_lat / 1e9,
            mean_latency_s=mean,
        )

    @property
    def sustained_overrun(self):
        return self.ticks > 0 and self.missed / self.ticks > 0.01


@dataclass
class RunConfig:
    """Bundle of everything one hybrid run needs besides the ground motion."""

    model: object
    integrator: object
    actuator: ActuatorConfig = field(default_factory=ActuatorConfig)
    plant_mode: PlantMode = PlantMode.OFFLINE
    ats: Optional[object] = None       # AtsConfig or None
    duration: Optional[float] = None
    pace: bool = False
    rate_hz: Optional[float] = None
    name: str = "run"


def run_hybrid(run_config, ground_motion, driver):
    """Execute the closed loop; returns the full RunHistory.

    The ground motion is resampled onto the integrator grid if needed. A
    non-finite driver command aborts (driver blow-up); a paced run records
    wall-clock statistics and flags (but does not abort on) sustained
    overrun.
    """
    rc = run_config
    dt = rc.integrator.dt
    gm = ground_motion
    if abs(gm.dt - dt) > 1e-15:
        gm = resample(gm, dt)
    n = len(gm.accel)
    if rc.duration is not None:
        want = int(math.floor(rc.duration / dt + 1e-9)) + 1
        if want > n:
            raise ValueError(
                f"requested duration {rc.duration}s exceeds record ({gm.duration}s)"
            )
        n = want
    hist = RunHistory.allocate(n, dt, name=rc.name)
    hist.gm_accel[:] = gm.accel[:n]

    actuator = VirtualActuator(rc.actuator, dt)
    comp = AtsCompensator(rc.ats, dt) if rc.ats is not None else None
    offline = PlantMode(rc.plant_mode) is PlantMode.OFFLINE
    ke = rc.model.brace_stiffness
    ug = gm.accel[:n].tolist()
    cmd_a, comp_a, meas_a, force_a = hist.command, hist.compensated, hist.measured, hist.force
    vel_a, acc_a = hist.vel, hist.acc

    pacer = Pacer(rc.rate_hz or 1.0 / dt) if rc.pace else None
    gc_was_enabled = gc.isenabled()
    if pacer is not None:
        gc.disable()
        pacer.start()
    try:
        ug_prev = 0.0
        meas_prev = 0.0
        force_prev = 0.0
        for i in range(n):
            if pacer is not None:
                pacer.wait(i)
            cmd = driver.command(TickInputs(i, ug[i], ug_prev, meas_prev, force_prev))
            if not math.isfinite(cmd):
                lo = max(0, i - 100)
                window = RunHistory(
                    dt=dt,
                    gm_accel=hist.gm_accel[lo:i].copy(),
                    command=cmd_a[lo:i].copy(),
                    compensated=comp_a[lo:i].copy(),
                    measured=meas_a[lo:i].copy(),
                    force=force_a[lo:i].copy(),
                    vel=vel_a[lo:i].copy(),
                    acc=acc_a[lo:i].copy(),
                    name=f"{rc.name}-divergence",
                )
                raise LoopDivergence(i, window)
            u = comp.process(cmd) if comp is not None else cmd
            meas = actuator.step(u)
            force = ke * u if offline else ke * meas
            if comp is not None:
                comp.observe(meas)
            cmd_a[i] = cmd
            comp_a[i] = u
            meas_a[i] = meas
            force_a[i] = force
            done = getattr(driver, "completed", None)
            if done is not None:
                idx, v, a = done
                vel_a[idx] = v
                acc_a[idx] = a
            ug_prev = ug[i]
            meas_prev = meas
            force_prev = force
            if pacer is not None:
                pacer.complete(i)
    finally:
        if pacer is not None and gc_was_enabled:
            gc.enable()
    if hasattr(driver, "finalize"):
        idx, v, a = driver.finalize(ug_prev, force_prev)
        if idx < n:
            vel_a[idx] = v
            acc_a[idx] = a
    if pacer is not None:
        hist.pacing = pacer.stats()
    if comp is not None:
        hist.compensator = comp
    return hist


def pace_real_time(run_config, ground_motion, driver, rate_hz=None):
    """Run the loop against the wall clock; alias for run_hybrid with pacing on."""
    rc = RunConfig(
        model=run_config.model,
        integrator=run_config.integrator,
        actuator=run_config.actuator,
        plant_mode=run_config.plant_mode,
        ats=run_config.ats,
        duration=run_config.duration,
        pace=True,
        rate_hz=rate_hz or run_config.rate_hz,
        name=run_config.name,
    )
    return run_hybrid(rc, ground_motion, driver)
