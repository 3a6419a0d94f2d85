"""Virtual servo-hydraulic plant: transport delay, first-order lag, gain, noise.

The actuator model is deliberately phenomenological. A commanded
displacement reappears as the measured displacement `delay_steps` ticks
later, optionally smoothed by a first-order lag of time constant tau and
scaled by an amplitude gain, with additive Gaussian measurement noise. The
specimen is a linear brace: its restoring force is the brace stiffness times
either the commanded or the measured displacement, depending on the plant
mode.
"""

import enum
import math
from collections import deque
from dataclasses import dataclass

import numpy as np


class PlantMode(str, enum.Enum):
    # Offline: specimen force computed from the command signal (the loop never
    # sees actuator dynamics). Online: force from the measured displacement.
    OFFLINE = "offline"
    ONLINE = "online"


@dataclass(frozen=True)
class ActuatorConfig:
    delay_steps: int = 28
    lag_time_constant: float = 0.0   # s; 0 disables the lag stage
    noise_std: float = 0.0           # mm; 0 disables noise
    amplitude_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.delay_steps < 0:
            raise ValueError(f"delay_steps must be >= 0, got {self.delay_steps}")
        if self.lag_time_constant < 0.0:
            raise ValueError("lag time constant must be >= 0")
        if self.noise_std < 0.0:
            raise ValueError("noise level must be >= 0")


class VirtualActuator:
    """Stateful per-tick actuator simulation.

    step() must be called exactly once per tick, in order; the delay buffer
    is prefilled with zeros so the plant starts at rest.
    """

    def __init__(self, config, dt):
        if dt <= 0.0:
            raise ValueError("dt must be positive")
        self.config = config
        self.dt = dt
        self._buffer = deque([0.0] * config.delay_steps)
        self._lag_state = 0.0
        if config.lag_time_constant > 0.0:
            self._lag_alpha = 1.0 - math.exp(-dt / config.lag_time_constant)
        else:
            self._lag_alpha = None
        self._rng = np.random.default_rng(config.seed) if config.noise_std > 0.0 else None
        self._tick = 0

    def step(self, command, tick=None):
        """Advance one tick with the given command; returns measured displacement."""
        if tick is not None and tick != self._tick:
            raise RuntimeError(
                f"out-of-order plant tick: expected {self._tick}, got {tick}"
            )
        self._tick += 1
        self._buffer.append(command)
        delayed = self._buffer.popleft()
        if self._lag_alpha is not None:
            self._lag_state += self._lag_alpha * (delayed - self._lag_state)
            y = self._lag_state
        else:
            y = delayed
        measured = self.config.amplitude_scale * y
        if self._rng is not None:
            measured += self._rng.normal(0.0, self.config.noise_std)
        return measured

    @property
    def ticks_run(self):
        return self._tick


def specimen_force(brace_stiffness, mode, command, measured):
    """Restoring force of the linear experimental substructure, kN."""
    if PlantMode(mode) is PlantMode.OFFLINE:
        return brace_stiffness * command
    return brace_stiffness * measured
