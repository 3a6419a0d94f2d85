"""Explicit time-stepping for the substructured equation of motion.

The production scheme is the unconditionally stable explicit member of
Chang's family:

    x[i+1] = x[i] + beta1*dt*v[i] + beta2*dt^2*a[i]
    v[i+1] = v[i] + dt/2*(a[i] + a[i+1])

with model-dependent parameters

    beta1 = (4m + 2c*dt) / D,   beta2 = 2m / D,   D = 4m + 2c*dt + k_tot*dt^2.

The acceleration at the new tick comes from the equation of motion with the
restoring-force feedback in place of k_e*x; the simultaneous velocity term is
absorbed by the usual deferred linearization, giving

    (m + c*dt/2)*a[i+1] = -m*ag[i+1] - k_a*x[i+1] - F[i+1] - c*(v[i] + dt/2*a[i]).

For free vibration the amplification matrix has unit determinant and
|trace| < 2 for every dt, so the scheme is spectrally stable with no
numerical damping at any step size. A central-difference fallback (the
summed form, beta1 = 1, beta2 = 1/2) provides an independent second scheme
for cross-checks; it is conditionally stable (omega_n*dt < 2).
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .history import RunHistory
from .structure import DynamicState


class Scheme(str, enum.Enum):
    CHANG = "chang"
    CENTRAL_DIFFERENCE = "central-difference"


def chang_parameters(model, dt):
    """Displacement-update parameters (beta1, beta2) for Chang's scheme."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    m = model.mass
    c = model.damping
    k = model.total_stiffness
    if m <= 0.0:
        raise ValueError("mass must be positive")
    d = 4.0 * m + 2.0 * c * dt + k * dt * dt
    return (4.0 * m + 2.0 * c * dt) / d, 2.0 * m / d


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    scheme: Scheme = Scheme.CHANG
    beta1: float = 1.0
    beta2: float = 0.5

    @classmethod
    def for_model(cls, model, dt, scheme=Scheme.CHANG):
        scheme = Scheme(scheme)
        if scheme is Scheme.CHANG:
            b1, b2 = chang_parameters(model, dt)
        else:
            if model.omega_n * dt >= 2.0:
                raise ValueError(
                    "central difference is unstable at this step: omega_n*dt = "
                    f"{model.omega_n * dt:.3f} >= 2"
                )
            b1, b2 = 1.0, 0.5
        if not (math.isfinite(b1) and math.isfinite(b2) and b1 > 0.0 and b2 > 0.0):
            raise ValueError(f"invalid scheme parameters beta1={b1}, beta2={b2}")
        return cls(dt=dt, scheme=scheme, beta1=b1, beta2=b2)


def initial_state(model, gm_accel, feedback=0.0):
    """EOM-consistent state at tick 0 for a structure starting at rest."""
    a0 = (-model.mass * gm_accel - feedback) / model.mass
    return DynamicState(step=0, t=0.0, x=0.0, v=0.0, a=a0)


def predict_displacement(model, config, state):
    """Next-tick displacement; explicit, so available before any feedback."""
    dt = config.dt
    return state.x + config.beta1 * dt * state.v + config.beta2 * dt * dt * state.a


def step(model, config, state, restoring_force_feedback, gm_accel):
    """Advance one tick.

    restoring_force_feedback is the experimental-substructure force in kN at
    the displacement just commanded (k_e*x[i+1] in pure-analytical mode);
    gm_accel is the ground acceleration at the new tick. Repeated application
    with analytic feedback reproduces the scheme's full-model trajectory.
    """
    dt = config.dt
    m = model.mass
    c = model.damping
    x1 = state.x + config.beta1 * dt * state.v + config.beta2 * dt * dt * state.a
    v_half = state.v + 0.5 * dt * state.a
    a1 = (-m * gm_accel - model.frame_stiffness * x1 - restoring_force_feedback
          - c * v_half) / (m + 0.5 * c * dt)
    v1 = state.v + 0.5 * dt * (state.a + a1)
    i1 = state.step + 1
    return DynamicState(step=i1, t=i1 * dt, x=x1, v=v1, a=a1)


def run_pure_fe(model, config, ground_motion, n=None, name="pure-fe"):
    """Fully analytical run: the brace force is k_e times the new displacement.

    Returns a RunHistory whose measured and compensated columns duplicate the
    command (ideal plant), making the output directly comparable with hybrid
    runs and usable as surrogate training data.
    """
    accel = ground_motion.accel
    if abs(ground_motion.dt - config.dt) > 1e-15:
        raise ValueError(
            f"ground motion dt={ground_motion.dt} does not match config dt={config.dt}"
        )
    n_total = len(accel) if n is None else min(n, len(accel))
    if n_total < 1:
        raise ValueError("empty ground motion")
    hist = RunHistory.allocate(n_total, config.dt, name=name)
    hist.gm_accel[:] = accel[:n_total]
    ke = model.brace_stiffness
    ug = accel.tolist()

    state = initial_state(model, ug[0], feedback=0.0)
    x_arr, v_arr, a_arr, f_arr = hist.command, hist.vel, hist.acc, hist.force
    x_arr[0] = 0.0
    v_arr[0] = 0.0
    a_arr[0] = state.a
    f_arr[0] = 0.0
    for i in range(1, n_total):
        fb = ke * predict_displacement(model, config, state)
        state = step(model, config, state, fb, ug[i])
        x_arr[i] = state.x
        v_arr[i] = state.v
        a_arr[i] = state.a
        f_arr[i] = fb
    np.copyto(hist.compensated, hist.command)
    np.copyto(hist.measured, hist.command)
    return hist
