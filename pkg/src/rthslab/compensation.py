"""Adaptive time-series (ATS) command compensation for actuator delay.

The compensated command is a second-order extrapolation of the target
displacement,

    u = a0*x + a1*x' + a2*x''

with rates estimated from the command stream by 3-point backward
differences (explicit and causal). The coefficients adapt online: over a
sliding window of (compensated command, measured displacement) pairs, the
compensated commands are regressed onto the measured history and its
finite-difference derivatives, which identifies the inverse plant map. For a
pure transport delay of d ticks the converged coefficients approach the
Taylor weights (1, d*dt, (d*dt)^2/2).

The solve is performed relative to the current coefficients with
column-equilibrated least squares and small-singular-value truncation, so
directions the window cannot identify (quiet input, monochromatic input)
simply retain their previous values. Results are clamped to configured
bounds before use.
"""

from dataclasses import dataclass, field

import numpy as np


def compensate(coeffs, command, command_rate, command_accel):
    """Apply the ATS law for one tick. coeffs = (a0, a1, a2)."""
    a0, a1, a2 = coeffs
    return a0 * command + a1 * command_rate + a2 * command_accel


@dataclass(frozen=True)
class AtsConfig:
    window: int = 2048           # ticks in the regression window (1 s at 2048 Hz)
    update_period: int = 1024    # ticks between coefficient updates (0.5 s)
    a0_min: float = 0.5
    a0_max: float = 1.5
    a1_min: float = 0.0
    a1_max: float = 4.0 * 28.0 / 2048.0
    a2_min: float = 0.0
    a2_max: float = (4.0 * 28.0 / 2048.0) ** 2
    initial_a0: float = 1.0
    initial_a1: float = 28.0 / 2048.0
    initial_a2: float = 0.0
    min_rows: int = 64           # smallest window the fit will run on

    @classmethod
    def for_delay(cls, delay_steps, dt, **overrides):
        """Bounds and initial guess anchored to a nominal plant delay."""
        horizon = 4.0 * max(delay_steps, 1) * dt
        defaults = dict(
            a1_max=horizon,
            a2_max=horizon * horizon,
            initial_a1=delay_steps * dt,
        )
        defaults.update(overrides)
        return cls(**defaults)


@dataclass
class AtsState:
    a0: float
    a1: float
    a2: float

    @property
    def coeffs(self):
        return (self.a0, self.a1, self.a2)


class AtsCompensator:
    def __init__(self, config, dt):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        self.config = config
        self.dt = dt
        self.state = AtsState(config.initial_a0, config.initial_a1, config.initial_a2)
        self._cmd_hist = [0.0, 0.0]      # last two raw commands, oldest first
        self._window_u = []
        self._window_meas = []
        self._pending_u = None
        self._since_update = 0
        self._tick = 0
        self.trace = [(0, config.initial_a0, config.initial_a1, config.initial_a2)]

    def process(self, command):
        """Compensate one raw command; returns the signal to send to the plant."""
        h = self.dt
        c2, c1 = self._cmd_hist
        rate = (3.0 * command - 4.0 * c1 + c2) / (2.0 * h)
        accel = (command - 2.0 * c1 + c2) / (h * h)
        u = compensate(self.state.coeffs, command, rate, accel)
        self._cmd_hist[0] = c1
        self._cmd_hist[1] = command
        self._pending_u = u
        self._tick += 1
        return u

    def observe(self, measured):
        """Record the plant response paired with the last compensated command."""
        if self._pending_u is None:
            raise RuntimeError("observe() without a preceding process()")
        self._window_u.append(self._pending_u)
        self._window_meas.append(measured)
        self._pending_u = None
        w = self.config.window
        if len(self._window_u) > w:
            del self._window_u[0]
            del self._window_meas[0]
        self._since_update += 1
        if self._since_update >= self.config.update_period and (
            len(self._window_u) >= max(self.config.min_rows, 3)
        ):
            self._since_update = 0
            self._update()

    def _update(self):
        cfg = self.config
        h = self.dt
        u = np.asarray(self._window_u)
        xm = np.asarray(self._window_meas)
        # backward 3-point stencils need two rows of history
        x0 = xm[2:]
        x1 = xm[1:-1]
        x2 = xm[:-2]
        phi = np.column_stack([
            x0,
            (3.0 * x0 - 4.0 * x1 + x2) / (2.0 * h),
            (x0 - 2.0 * x1 + x2) / (h * h),
        ])
        target = u[2:]
        scales = np.linalg.norm(phi, axis=0)
        active = scales > 0.0
        if not np.any(active):
            return  # quiet window: nothing identifiable, keep coefficients
        a_prev = np.array(self.state.coeffs)
        residual = target - phi @ a_prev
        phi_scaled = phi[:, active] / scales[active]
        delta_scaled, *_ = np.linalg.lstsq(phi_scaled, residual, rcond=1e-10)
        delta = np.zeros(3)
        delta[active] = delta_scaled / scales[active]
        a = a_prev + delta
        self.state.a0 = float(min(max(a[0], cfg.a0_min), cfg.a0_max))
        self.state.a1 = float(min(max(a[1], cfg.a1_min), cfg.a1_max))
        self.state.a2 = float(min(max(a[2], cfg.a2_min), cfg.a2_max))
        self.trace.append((self._tick, self.state.a0, self.state.a1, self.state.a2))

    def write_trace_csv(self, path):
        with open(path, "w") as fh:
            fh.write("tick,a0,a1,a2\n")
            for tick, a0, a1, a2 in self.trace:
                fh.write(f"{tick},{a0:.17g},{a1:.17g},{a2:.17g}\n")
