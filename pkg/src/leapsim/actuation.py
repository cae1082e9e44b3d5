"""Knee spring, geared motors, joint PID and leg statics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.optimize import brentq

from .kinematics import (
    ControlAngles,
    LegGeometry,
    configure,
    control_to_kinematic,
    knee_positions,
    paw_jacobian,
)

if TYPE_CHECKING:
    from .design import RobotDesign

AK70_MAX_TORQUE = 24.8


@dataclass(frozen=True)
class SpringConfig:
    """Single knee-to-knee spring standing in for the two series springs of a leg."""

    k_eq: float = 435.0
    natural_length: float = 0.200
    tension_only: bool = True

    def __post_init__(self):
        if not self.k_eq >= 0:
            raise ValueError("k_eq must be non-negative")
        if not self.natural_length > 0:
            raise ValueError("natural_length must be positive")
        if not self.tension_only:
            raise ValueError("the cord cannot push: tension_only must be true")


@dataclass(frozen=True)
class MotorConfig:
    torque_saturation: float = 24.8
    max_torque: float = AK70_MAX_TORQUE
    gear_ratio: float = 10.0
    viscous_damping: float = 0.0   # Nm s/rad at the joint
    reflected_inertia: float = 0.0  # kg m^2 at the joint

    def __post_init__(self):
        if not 0 < self.torque_saturation <= self.max_torque:
            raise ValueError("need 0 < torque_saturation <= max_torque")
        if self.viscous_damping < 0 or self.reflected_inertia < 0:
            raise ValueError("damping and inertia must be non-negative")

    def with_saturation(self, torque: float) -> "MotorConfig":
        return MotorConfig(torque, self.max_torque, self.gear_ratio,
                           self.viscous_damping, self.reflected_inertia)


@dataclass(frozen=True)
class PidGains:
    kp: float = 60.0
    ki: float = 200.0
    kd: float = 0.5
    integral_limit: float = 10.0
    control_rate: float = 500.0

    @property
    def dt(self) -> float:
        return 1.0 / self.control_rate


@dataclass
class PidState:
    integral: float = 0.0


def series_equivalent(k_physical: float) -> float:
    """Stiffness of two identical springs joined in series by the cord."""
    if not k_physical > 0:
        raise ValueError("stiffness must be positive")
    return 0.5 * k_physical


def series_physical(k_equivalent: float) -> float:
    if not k_equivalent > 0:
        raise ValueError("stiffness must be positive")
    return 2.0 * k_equivalent


def spring_tension(d: float, cfg: SpringConfig) -> float:
    return cfg.k_eq * max(0.0, d - cfg.natural_length)


def spring_potential(d: float, cfg: SpringConfig) -> float:
    stretch = max(0.0, d - cfg.natural_length)
    return 0.5 * cfg.k_eq * stretch * stretch


def spring_joint_torques(angles: ControlAngles, geom: LegGeometry,
                         cfg: SpringConfig) -> tuple[float, float]:
    """Spring torques about theta1 and theta2 (hip frame, counter-clockwise positive)."""
    (x1, z1), (x2, z2) = knee_positions(angles, geom)
    dx, dz = x2 - x1, z2 - z1
    d = math.hypot(dx, dz)
    tension = spring_tension(d, cfg)
    if tension == 0.0:
        return 0.0, 0.0
    ux, uz = dx / d, dz / d
    theta1, theta2 = control_to_kinematic(angles)
    dd1 = -(ux * -geom.l1 * math.sin(theta1) + uz * geom.l1 * math.cos(theta1))
    dd2 = ux * -geom.l2 * math.sin(theta2) + uz * geom.l2 * math.cos(theta2)
    return -tension * dd1, -tension * dd2


def kinematic_to_control_torques(tau1: float, tau2: float) -> tuple[float, float]:
    # dtheta1/dalpha1 = -1, dtheta2/dalpha2 = +1
    return -tau1, tau2


def pid_torque(setpoint: float, measured: float, measured_rate: float, state: PidState,
               gains: PidGains, motor: MotorConfig, dt: float | None = None) -> float:
    """One 500 Hz controller tick; the result is held until the next tick.

    Derivative acts on the measurement so setpoint steps do not kick, and the
    integrator is clamped so ``|ki * integral| <= integral_limit``.
    """
    dt = gains.dt if dt is None else dt
    error = setpoint - measured
    if gains.ki > 0:
        bound = gains.integral_limit / gains.ki
        state.integral = min(bound, max(-bound, state.integral + error * dt))
    else:
        state.integral = 0.0
    raw = gains.kp * error + gains.ki * state.integral - gains.kd * measured_rate
    sat = motor.torque_saturation
    return min(sat, max(-sat, raw))


# --------------------------------------------------------------------------
# statics


def _leg_potential_gradient(angles: ControlAngles, design: "RobotDesign", gravity: float):
    """Gradient of gravity + spring potential w.r.t. (alpha1, alpha2) with the paw pinned.

    Each leg of the biped carries half of the total mass.
    """
    geom = design.geom
    m = design.masses
    cfg = configure(angles, geom)
    jac = paw_jacobian(cfg, geom) * np.array([-1.0, 1.0])
    t1, t2 = cfg.theta1, cfg.theta2
    # d(z)/d(alpha) of the hip and calf midpoints in the leg frame
    dk1z = -geom.l1 * math.cos(t1)
    dk2z = geom.l2 * math.cos(t2)
    dpz = jac[1]
    hip = m.hip_link_mass
    calf = m.calf_link_mass
    dz_links = np.array([
        hip * 0.5 * dk1z + calf * 0.5 * (dk1z + dpz[0]) + calf * 0.5 * dpz[0],
        hip * 0.5 * dk2z + calf * 0.5 * dpz[1] + calf * 0.5 * (dk2z + dpz[1]),
    ])
    grad_gravity = gravity * (-0.5 * m.total_mass * dpz + dz_links)
    grad_spring = -np.array(kinematic_to_control_torques(
        *spring_joint_torques(angles, geom, design.spring)))
    return grad_gravity, grad_spring


def static_hold_torque(angles: ControlAngles, design: "RobotDesign",
                       gravity: float) -> tuple[float, float]:
    """Motor torques (control frame: positive increases alpha) holding a stance pose."""
    grad_gravity, grad_spring = _leg_potential_gradient(angles, design, gravity)
    tau = grad_gravity + grad_spring
    return float(tau[0]), float(tau[1])


def leg_potential(angles: ControlAngles, design: "RobotDesign", gravity: float) -> float:
    """Gravity + spring energy attributed to one leg, paw pinned at ground level."""
    from .kinematics import paw_position

    geom = design.geom
    m = design.masses
    cfg = configure(angles, geom)
    px, pz = paw_position(cfg, geom)
    (k1x, k1z), (k2x, k2z) = knee_positions(angles, geom)
    z_body = -pz
    link_z = (m.hip_link_mass * 0.5 * (k1z + k2z)
              + m.calf_link_mass * 0.5 * (k1z + pz + k2z + pz))
    pe_gravity = gravity * (0.5 * m.total_mass * z_body + link_z)
    d = math.hypot(k2x - k1x, k2z - k1z)
    return pe_gravity + spring_potential(d, design.spring)


def static_torque_curve(design: "RobotDesign", gravity: float,
                        alphas_deg: np.ndarray) -> np.ndarray:
    """Symmetric-pose hold torque per motor over a sweep of squat angles."""
    return np.array([static_hold_torque(ControlAngles.from_degrees(a), design, gravity)[0]
                     for a in alphas_deg])


def resting_poses(design: "RobotDesign", gravity: float,
                  lo_deg: float = 0.0, hi_deg: float = 120.0, step_deg: float = 0.5) -> list[float]:
    """Symmetric squat angles (deg) where the hold torque vanishes."""
    grid = np.arange(lo_deg, hi_deg + 1e-9, step_deg)
    tau = static_torque_curve(design, gravity, grid)
    roots = []
    for i in range(len(grid) - 1):
        if tau[i] == 0.0:
            roots.append(float(grid[i]))
        elif tau[i] * tau[i + 1] < 0:
            f = lambda a: static_hold_torque(ControlAngles.from_degrees(a), design, gravity)[0]
            roots.append(float(brentq(f, grid[i], grid[i + 1], xtol=1e-10)))
    return roots


def peak_squat_torque(design: "RobotDesign", gravity: float, squat_deg: float,
                      stand_deg: float = 17.5, step_deg: float = 0.5) -> float:
    """Largest static hold torque magnitude met along the squat ramp."""
    grid = np.append(np.arange(stand_deg, squat_deg, step_deg), squat_deg)
    return float(np.max(np.abs(static_torque_curve(design, gravity, grid))))
