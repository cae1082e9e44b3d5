"""Robot-level parameter bundle shared by statics, dynamics and the optimizer."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .actuation import MotorConfig, PidGains, SpringConfig
from .kinematics import LegGeometry


@dataclass(frozen=True)
class MassModel:
    """Mass budget of the biped.

    Motors are lumped into the body at the hip axes. What is left of each leg
    is split between the two hip links and the two calf links, each modelled
    as a point mass at its midpoint.
    """

    leg_mass: float = 3.3
    electronics_mass: float = 1.3
    total_mass: float = 7.9
    motor_mass: float = 0.521
    motors_per_leg: int = 3
    hip_fraction: float = 0.6

    def __post_init__(self):
        if not math.isclose(self.total_mass, 2 * self.leg_mass + self.electronics_mass,
                            rel_tol=0, abs_tol=1e-9):
            raise ValueError("total_mass must equal 2 * leg_mass + electronics_mass")
        if not 0 < self.hip_fraction < 1:
            raise ValueError("hip_fraction must lie in (0, 1)")
        if min(self.leg_mass, self.electronics_mass, self.motor_mass) <= 0:
            raise ValueError("masses must be positive")
        if self.link_mass_per_leg <= 0:
            raise ValueError("motors outweigh the leg")

    @property
    def link_mass_per_leg(self) -> float:
        return self.leg_mass - self.motors_per_leg * self.motor_mass

    @property
    def hip_link_mass(self) -> float:
        return 0.5 * self.hip_fraction * self.link_mass_per_leg

    @property
    def calf_link_mass(self) -> float:
        return 0.5 * (1.0 - self.hip_fraction) * self.link_mass_per_leg

    @property
    def body_mass(self) -> float:
        return self.total_mass - 2.0 * self.link_mass_per_leg


@dataclass(frozen=True)
class ContactModel:
    """Kelvin-Voigt penalty ground per paw with regularised Coulomb friction."""

    k_ground: float = 5.0e4
    c_ground: float = 500.0
    mu: float = 0.8
    slip_velocity: float = 0.01
    max_penetration_target: float = 0.005

    def __post_init__(self):
        if self.k_ground <= 0 or self.c_ground < 0 or self.mu < 0 or self.slip_velocity <= 0:
            raise ValueError("invalid contact parameters")


@dataclass(frozen=True)
class RobotDesign:
    geom: LegGeometry = field(default_factory=LegGeometry)
    spring: SpringConfig = field(default_factory=SpringConfig)
    motor: MotorConfig = field(default_factory=MotorConfig)
    masses: MassModel = field(default_factory=MassModel)
    pid: PidGains = field(default_factory=PidGains)
    contact: ContactModel = field(default_factory=ContactModel)
    joint_friction: float = 0.0  # Nm s/rad on each passive joint

    def __post_init__(self):
        if self.joint_friction < 0:
            raise ValueError("joint_friction must be non-negative")
        if not self.spring.natural_length > self.geom.l0:
            raise ValueError("spring must be slack at the zero pose")

    def with_links(self, hip: float, calf: float) -> "RobotDesign":
        return replace(self, geom=LegGeometry.symmetric(hip, calf, self.geom.l0))

    def with_stiffness(self, k_eq: float) -> "RobotDesign":
        return replace(self, spring=replace(self.spring, k_eq=k_eq))

    def with_saturation(self, torque: float) -> "RobotDesign":
        return replace(self, motor=self.motor.with_saturation(torque))
