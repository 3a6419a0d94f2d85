"""Single-degree-of-freedom braced-frame model and its exact linear response.

The analytical substructure is a one-story frame of mass m and lateral
stiffness k_a; the braced bay contributes a global lateral stiffness k_e,
either given directly or projected from the brace axial stiffness through
its inclination. The equation of motion under ground acceleration is

    m*x'' + c*x' + (k_a + k_e)*x = -m*ag

with mass-proportional damping c = 2*zeta*omega_n*m. In substructured runs
the k_e*x term is replaced by a measured restoring force.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class DynamicState(NamedTuple):
    """Kinematic state at one integration tick."""

    step: int
    t: float
    x: float   # displacement, mm
    v: float   # velocity, mm/s
    a: float   # acceleration, mm/s^2


@dataclass(frozen=True)
class SdofModel:
    mass: float              # kN*s^2/mm
    frame_stiffness: float   # k_a, kN/mm
    brace_stiffness: float   # k_e (global/lateral), kN/mm
    damping_ratio: float     # of critical

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if self.frame_stiffness < 0.0 or self.brace_stiffness < 0.0:
            raise ValueError("stiffnesses must be non-negative")
        if self.total_stiffness <= 0.0:
            raise ValueError("total lateral stiffness must be positive")
        if not 0.0 <= self.damping_ratio < 1.0:
            raise ValueError(
                f"damping ratio must lie in [0, 1), got {self.damping_ratio}"
            )

    @property
    def total_stiffness(self):
        return self.frame_stiffness + self.brace_stiffness

    @property
    def omega_n(self):
        """Undamped natural circular frequency, rad/s."""
        return math.sqrt(self.total_stiffness / self.mass)

    @property
    def period(self):
        return 2.0 * math.pi / self.omega_n

    @property
    def damping(self):
        """Viscous damping coefficient c, kN*s/mm."""
        return damping_coefficient(self.mass, self.total_stiffness, self.damping_ratio)


def damping_coefficient(mass, total_stiffness, damping_ratio):
    """Mass-proportional viscous damping: c = 2*zeta*sqrt(k*m)."""
    if mass <= 0.0 or total_stiffness <= 0.0:
        raise ValueError("mass and stiffness must be positive")
    return 2.0 * damping_ratio * math.sqrt(total_stiffness * mass)


def brace_global_stiffness(axial_stiffness, angle_rad):
    """Project a brace axial stiffness onto the lateral direction (cos^2)."""
    return axial_stiffness * math.cos(angle_rad) ** 2


def build_sdof(
    mass,
    frame_stiffness,
    damping_ratio,
    brace_stiffness=None,
    brace_axial_stiffness=None,
    brace_angle_rad=None,
):
    """Construct the model from either a global or an axial brace stiffness.

    Exactly one route must be supplied: brace_stiffness directly, or the
    (brace_axial_stiffness, brace_angle_rad) pair.
    """
    geometric = brace_axial_stiffness is not None or brace_angle_rad is not None
    if brace_stiffness is not None and geometric:
        raise ValueError("give either brace_stiffness or the axial/angle pair, not both")
    if brace_stiffness is None:
        if brace_axial_stiffness is None or brace_angle_rad is None:
            raise ValueError("need brace_stiffness or both of axial stiffness and angle")
        brace_stiffness = brace_global_stiffness(brace_axial_stiffness, brace_angle_rad)
    return SdofModel(
        mass=mass,
        frame_stiffness=frame_stiffness,
        brace_stiffness=brace_stiffness,
        damping_ratio=damping_ratio,
    )


class ExactResponse(NamedTuple):
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray


def exact_linear_response(model, ground_motion, x0=0.0, v0=0.0):
    """Piecewise-exact response of the full linear model to a sampled motion.

    The excitation is taken as piecewise linear between samples, for which
    the first-order-hold discretization of the continuous state-space system
    is exact; the response is then a matrix recurrence with no truncation
    error. Serves as the oracle the time-stepping schemes are judged against.
    """
    from scipy.signal import cont2discrete, dlsim

    m = model.mass
    k = model.total_stiffness
    c = model.damping
    if model.damping_ratio >= 1.0:
        raise ValueError("oracle covers the underdamped case only")
    dt = ground_motion.dt
    p = -m * ground_motion.accel  # effective force, kN
    a_mat = np.array([[0.0, 1.0], [-k / m, -c / m]])
    b_mat = np.array([[0.0], [1.0 / m]])
    c_mat = np.eye(2)
    d_mat = np.zeros((2, 1))
    ad, bd, cd, dd, _ = cont2discrete((a_mat, b_mat, c_mat, d_mat), dt, method="foh")
    # The first-order-hold realization runs on the transformed state
    # xi[k] = x[k] - Gamma2*u[k]; with C = I and D = 0 the feedthrough of the
    # discrete system is exactly Gamma2, so the physical initial condition
    # maps to xi[0] = x[0] - Dd*u[0].
    xi0 = np.array([x0, v0]) - dd @ np.array([p[0]])
    _, y, _ = dlsim((ad, bd, cd, dd, dt), p[:, None], x0=xi0)
    x = y[:, 0]
    v = y[:, 1]
    a = (p - c * v - k * x) / m
    return ExactResponse(t=ground_motion.times, x=x, v=v, a=a)
