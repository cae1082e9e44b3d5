"""Closed-form kinematics of the diamond five-bar leg.

Frame conventions
-----------------
Motor 1 sits at the origin and motor 2 at ``(l0, 0)``; X runs along the
baseline and Z points up, so a standing paw has ``z < 0``. The angles
``theta1 .. theta4`` are measured from +X.

Controllers work in :class:`ControlAngles`: ``alpha = 0`` points both hip links
straight down and positive values spread the knees outward::

    theta1 = -pi/2 - alpha1
    theta2 = -pi/2 + alpha2
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from .errors import DegenerateDenominator, SingularConfiguration, UnreachableConfiguration

HALF_PI = 0.5 * math.pi
ASIN_SLACK = 1e-12
SINGULAR_TOL = 1e-9


class Branch(str, Enum):
    """Sign taken in front of the square root of the theta4 half-angle solution."""

    PLUS = "plus"
    MINUS = "minus"


# In the frame above the minus root keeps the paw below the knee-to-knee line,
# i.e. the knees spread away from the leg centreline.
KNEE_OUT = Branch.MINUS


@dataclass(frozen=True)
class LegGeometry:
    l0: float = 0.09
    l1: float = 0.18
    l2: float = 0.18
    l3: float = 0.30
    l4: float = 0.30

    def __post_init__(self):
        for name in ("l0", "l1", "l2", "l3", "l4"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not (math.isclose(self.l1, self.l2, rel_tol=0, abs_tol=1e-12)
                and math.isclose(self.l3, self.l4, rel_tol=0, abs_tol=1e-12)):
            raise ValueError("diamond symmetry requires l1 == l2 and l3 == l4")
        if not self.l1 + self.l3 > 0.5 * self.l0:
            raise ValueError("l1 + l3 must exceed l0/2 for the paw to exist")

    @classmethod
    def symmetric(cls, hip: float, calf: float, baseline: float = 0.09) -> "LegGeometry":
        return cls(baseline, hip, hip, calf, calf)


@dataclass(frozen=True)
class ControlAngles:
    alpha1: float
    alpha2: float

    @classmethod
    def symmetric(cls, alpha: float) -> "ControlAngles":
        return cls(alpha, alpha)

    @classmethod
    def from_degrees(cls, alpha1: float, alpha2: float | None = None) -> "ControlAngles":
        if alpha2 is None:
            alpha2 = alpha1
        return cls(math.radians(alpha1), math.radians(alpha2))


@dataclass(frozen=True)
class JointConfiguration:
    theta1: float
    theta2: float
    theta3: float
    theta4: float
    branch: Branch = KNEE_OUT


def control_to_kinematic(angles: ControlAngles) -> tuple[float, float]:
    return -HALF_PI - angles.alpha1, -HALF_PI + angles.alpha2


def kinematic_to_control(theta1: float, theta2: float) -> ControlAngles:
    return ControlAngles(-HALF_PI - theta1, theta2 + HALF_PI)


def _wrap(angle):
    return np.mod(np.asarray(angle) + np.pi, 2.0 * np.pi) - np.pi


def _closure_arrays(theta1, theta2, geom: LegGeometry, branch: Branch = KNEE_OUT):
    """Vectorised closure solve.

    Returns ``(theta3, theta4, ok)``; entries where ``ok`` is False could not
    close and hold NaN.
    """
    l0, l1, l2, l3, l4 = geom.l0, geom.l1, geom.l2, geom.l3, geom.l4
    t1 = np.asarray(theta1, dtype=float)
    t2 = np.asarray(theta2, dtype=float)
    s1, c1 = np.sin(t1), np.cos(t1)
    s2, c2 = np.sin(t2), np.cos(t2)

    a = 2 * l4 * l2 * s2 - 2 * l1 * l4 * s1
    b = 2 * l4 * l0 - 2 * l1 * l4 * c1 + 2 * l4 * l2 * c2
    c = (l0**2 + l1**2 + l2**2 - l3**2 + l4**2 - 2 * l1 * l2 * s1 * s2
         - 2 * l1 * l0 * c1 + 2 * l2 * l0 * c2 - 2 * l1 * l2 * c1 * c2)
    scale = a * a + b * b + c * c
    disc = a * a + b * b - c * c
    ok = disc >= -1e-12 * scale
    root = np.sqrt(np.where(ok, np.maximum(disc, 0.0), 0.0))
    sign = 1.0 if Branch(branch) is Branch.PLUS else -1.0

    num = a + sign * root
    den = b - c
    tiny = 1e-14 * np.sqrt(scale)
    primary_bad = (np.abs(num) <= tiny) & (np.abs(den) <= tiny)
    # rationalised form of the same root, usable when the primary one is 0/0
    alt_num = -(b + c)
    alt_den = a - sign * root
    alt_bad = (np.abs(alt_num) <= tiny) & (np.abs(alt_den) <= tiny)
    degenerate = primary_bad & alt_bad & ok
    half = np.where(primary_bad, np.arctan2(alt_num, alt_den), np.arctan2(num, den))
    theta4 = _wrap(2.0 * half)

    s4, c4 = np.sin(theta4), np.cos(theta4)
    arg = (l4 * s4 + l2 * s2 - l1 * s1) / l3
    ok = ok & (np.abs(arg) <= 1.0 + ASIN_SLACK) & ~degenerate
    base = np.arcsin(np.clip(arg, -1.0, 1.0))
    # arcsin only spans [-pi/2, pi/2]; the x closure row fixes the quadrant
    cos3 = l0 + l2 * c2 + l4 * c4 - l1 * c1
    theta3 = _wrap(np.where(cos3 >= 0.0, base, np.pi - base))

    theta3 = np.where(ok, theta3, np.nan)
    theta4 = np.where(ok, theta4, np.nan)
    return theta3, theta4, ok, degenerate


def _closure_scalar(theta1: float, theta2: float, geom: LegGeometry,
                    sign: float = -1.0) -> tuple[float, float]:
    # same algebra as _closure_arrays on plain floats; the dynamics call this
    # tens of thousands of times per jump
    l0, l1, l2, l3, l4 = geom.l0, geom.l1, geom.l2, geom.l3, geom.l4
    s1, c1 = math.sin(theta1), math.cos(theta1)
    s2, c2 = math.sin(theta2), math.cos(theta2)
    a = 2 * l4 * l2 * s2 - 2 * l1 * l4 * s1
    b = 2 * l4 * l0 - 2 * l1 * l4 * c1 + 2 * l4 * l2 * c2
    c = (l0 * l0 + l1 * l1 + l2 * l2 - l3 * l3 + l4 * l4 - 2 * l1 * l2 * s1 * s2
         - 2 * l1 * l0 * c1 + 2 * l2 * l0 * c2 - 2 * l1 * l2 * c1 * c2)
    scale = a * a + b * b + c * c
    disc = a * a + b * b - c * c
    if disc < -1e-12 * scale:
        raise UnreachableConfiguration(
            f"linkage cannot close at theta1={theta1}, theta2={theta2}")
    root = math.sqrt(max(disc, 0.0))
    num = a + sign * root
    den = b - c
    tiny = 1e-14 * math.sqrt(scale)
    if abs(num) <= tiny and abs(den) <= tiny:
        num, den = -(b + c), a - sign * root
        if abs(num) <= tiny and abs(den) <= tiny:
            raise DegenerateDenominator(
                f"both half-angle forms are 0/0 at theta1={theta1}, theta2={theta2}")
    theta4 = 2.0 * math.atan2(num, den)
    if theta4 > math.pi:
        theta4 -= 2.0 * math.pi
    elif theta4 <= -math.pi:
        theta4 += 2.0 * math.pi
    s4, c4 = math.sin(theta4), math.cos(theta4)
    arg = (l4 * s4 + l2 * s2 - l1 * s1) / l3
    if abs(arg) > 1.0 + ASIN_SLACK:
        raise UnreachableConfiguration(f"arcsin argument {arg} out of range")
    base = math.asin(min(1.0, max(-1.0, arg)))
    if l0 + l2 * c2 + l4 * c4 - l1 * c1 >= 0.0:
        theta3 = base
    else:
        theta3 = math.pi - base
        if theta3 > math.pi:
            theta3 -= 2.0 * math.pi
    return theta3, theta4


def solve_closure(theta1, theta2, geom: LegGeometry, branch: Branch = KNEE_OUT):
    """Passive calf angles ``(theta3, theta4)`` for the given motor angles.

    Accepts floats or arrays; arrays raise if any entry fails to close.
    """
    if np.ndim(theta1) == 0 and np.ndim(theta2) == 0:
        sign = 1.0 if Branch(branch) is Branch.PLUS else -1.0
        return _closure_scalar(float(theta1), float(theta2), geom, sign)
    theta3, theta4, ok, degenerate = _closure_arrays(theta1, theta2, geom, branch)
    if np.any(degenerate):
        raise DegenerateDenominator(
            f"both half-angle forms are 0/0 at theta1={theta1}, theta2={theta2}")
    if not np.all(ok):
        raise UnreachableConfiguration(
            f"linkage cannot close at theta1={theta1}, theta2={theta2}")
    if theta3.ndim == 0:
        return float(theta3), float(theta4)
    return theta3, theta4


def configure(angles: ControlAngles, geom: LegGeometry,
              branch: Branch = KNEE_OUT) -> JointConfiguration:
    theta1, theta2 = control_to_kinematic(angles)
    theta3, theta4 = solve_closure(theta1, theta2, geom, branch)
    return JointConfiguration(theta1, theta2, theta3, theta4, Branch(branch))


def paw_position(cfg: JointConfiguration, geom: LegGeometry) -> tuple[float, float]:
    x = geom.l1 * math.cos(cfg.theta1) + geom.l3 * math.cos(cfg.theta3)
    z = geom.l1 * math.sin(cfg.theta1) + geom.l3 * math.sin(cfg.theta3)
    return x, z


def closure_residual(cfg: JointConfiguration, geom: LegGeometry) -> float:
    """Distance between the paw computed through the left and right chains."""
    xl, zl = paw_position(cfg, geom)
    xr = geom.l0 + geom.l2 * math.cos(cfg.theta2) + geom.l4 * math.cos(cfg.theta4)
    zr = geom.l2 * math.sin(cfg.theta2) + geom.l4 * math.sin(cfg.theta4)
    return math.hypot(xl - xr, zl - zr)


def knee_positions(angles: ControlAngles, geom: LegGeometry):
    theta1, theta2 = control_to_kinematic(angles)
    k1 = (geom.l1 * math.cos(theta1), geom.l1 * math.sin(theta1))
    k2 = (geom.l0 + geom.l2 * math.cos(theta2), geom.l2 * math.sin(theta2))
    return k1, k2


def knee_distance(angles: ControlAngles, geom: LegGeometry) -> float:
    (x1, z1), (x2, z2) = knee_positions(angles, geom)
    return math.hypot(x2 - x1, z2 - z1)


def paw_jacobian(cfg: JointConfiguration, geom: LegGeometry) -> np.ndarray:
    """d(x_p, z_p)/d(theta1, theta2) with the passive angles eliminated.

    The calf vectors ``r1 = p - k1`` and ``r2 = p - k2`` have fixed length, so
    ``r_i . (pdot - kdot_i) = 0``; solving that 2x2 system gives the Jacobian.
    """
    c1, s1 = math.cos(cfg.theta1), math.sin(cfg.theta1)
    c2, s2 = math.cos(cfg.theta2), math.sin(cfg.theta2)
    r1 = (geom.l3 * math.cos(cfg.theta3), geom.l3 * math.sin(cfg.theta3))
    r2 = (geom.l4 * math.cos(cfg.theta4), geom.l4 * math.sin(cfg.theta4))
    det = r1[0] * r2[1] - r1[1] * r2[0]
    if abs(det) <= SINGULAR_TOL * geom.l3 * geom.l4:
        raise SingularConfiguration("calf links are colinear")
    g1 = r1[0] * (-geom.l1 * s1) + r1[1] * (geom.l1 * c1)
    g2 = r2[0] * (-geom.l2 * s2) + r2[1] * (geom.l2 * c2)
    # inverse of [[r1x, r1z], [r2x, r2z]] times diag(g1, g2)
    return np.array([[r2[1] * g1, -r1[1] * g2],
                     [-r2[0] * g1, r1[0] * g2]]) / det


def control_jacobian(angles: ControlAngles, geom: LegGeometry) -> np.ndarray:
    """d(x_p, z_p)/d(alpha1, alpha2)."""
    jac = paw_jacobian(configure(angles, geom), geom)
    return jac * np.array([-1.0, 1.0])


def paw_from_control(angles: ControlAngles, geom: LegGeometry) -> tuple[float, float]:
    return paw_position(configure(angles, geom), geom)


def leg_reach(alpha: float, geom: LegGeometry) -> float:
    """Vertical distance from the motor axis down to the paw for a symmetric pose."""
    return -paw_from_control(ControlAngles(alpha, alpha), geom)[1]


# --------------------------------------------------------------------------
# workspace


@dataclass
class WorkspaceCloud:
    """Reachable paw set of one leg.

    ``points`` holds the slice boundaries rotated about the hip-abduction axis
    (the X axis through motor 1) for every hip angle. The full planar sample
    set is kept alongside so reachability of arbitrary points can be queried.
    """

    points: np.ndarray
    hip_angles: np.ndarray
    motor_limits: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    hip_increment: float
    planar_points: np.ndarray
    planar_motor_angles: np.ndarray
    boundary: np.ndarray
    motor_step: float
    _tree: cKDTree | None = field(default=None, repr=False, compare=False)

    @property
    def hip_of_point(self) -> np.ndarray:
        return np.repeat(self.hip_angles, len(self.boundary))

    def contains(self, x: float, z: float, tol: float | None = None) -> bool:
        """True when a sampled planar paw position lies within ``tol`` of (x, z).

        The default tolerance is the largest paw displacement a single motor
        step can produce.
        """
        if len(self.planar_points) == 0:
            return False
        if self._tree is None:
            self._tree = cKDTree(self.planar_points)
        if tol is None:
            tol = self.max_sample_spacing
        dist, _ = self._tree.query([x, z])
        return bool(dist <= tol)

    @property
    def max_sample_spacing(self) -> float:
        return self.motor_step * (self._reach_bound())

    def _reach_bound(self) -> float:
        # lever arm of a hip rotation never exceeds the largest paw radius
        return float(np.max(np.hypot(self.planar_points[:, 0], self.planar_points[:, 1])))

    def closure_residuals(self, geom: LegGeometry) -> np.ndarray:
        alpha1 = self.planar_motor_angles[:, 0]
        alpha2 = np.pi - self.planar_motor_angles[:, 1]
        theta1 = -HALF_PI - alpha1
        theta2 = -HALF_PI + alpha2
        theta3, theta4, _, _ = _closure_arrays(theta1, theta2, geom)
        xl = geom.l1 * np.cos(theta1) + geom.l3 * np.cos(theta3)
        zl = geom.l1 * np.sin(theta1) + geom.l3 * np.sin(theta3)
        xr = geom.l0 + geom.l2 * np.cos(theta2) + geom.l4 * np.cos(theta4)
        zr = geom.l2 * np.sin(theta2) + geom.l4 * np.sin(theta4)
        return np.hypot(xl - xr, zl - zr)

    def write_csv(self, path) -> Path:
        path = Path(path)
        hip_deg = np.degrees(self.hip_of_point)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["hip_deg", "x_m", "y_m", "z_m"])
            for h, (x, y, z) in zip(hip_deg, self.points):
                writer.writerow([f"{h:.9g}", f"{x:.9g}", f"{y:.9g}", f"{z:.9g}"])
        return path


def _inclusive_range(lo: float, hi: float, step: float) -> np.ndarray:
    if hi < lo:
        raise ValueError("empty range")
    n = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


def alpha_shape_boundary(points: np.ndarray, radius: float) -> np.ndarray:
    """Indices of ``points`` on the boundary of their alpha shape.

    Delaunay triangles whose circumradius exceeds ``radius`` are discarded;
    edges used by exactly one surviving triangle form the boundary.
    """
    if len(points) < 4:
        return np.arange(len(points))
    tri = Delaunay(points)
    p = points[tri.simplices]
    a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    b = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
    c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
    cross = np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                   - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    with np.errstate(divide="ignore", invalid="ignore"):
        circum = a * b * c / (2.0 * cross)
    keep = tri.simplices[np.isfinite(circum) & (circum < radius)]
    if len(keep) == 0:
        return np.arange(len(points))
    edges = np.concatenate([keep[:, [0, 1]], keep[:, [1, 2]], keep[:, [0, 2]]])
    edges.sort(axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    return np.unique(uniq[counts == 1])


def workspace_sweep(motor1_range: tuple[float, float], motor2_range: tuple[float, float],
                    hip_range: tuple[float, float], hip_increment: float,
                    geom: LegGeometry, motor_step: float = math.radians(1.0),
                    alpha_radius: float = 0.02) -> WorkspaceCloud:
    """Sample both five-bar motors on a grid and sweep the hip-abduction motor.

    Motor angle zeros are assumed to be: motor 1 reads ``alpha1`` directly and
    motor 2 reads ``pi - alpha2``. The hardware references are undocumented, so
    treat this alignment as a modelling assumption.
    """
    m1 = _inclusive_range(*motor1_range, motor_step)
    m2 = _inclusive_range(*motor2_range, motor_step)
    grid1, grid2 = np.meshgrid(m1, m2, indexing="ij")
    grid1, grid2 = grid1.ravel(), grid2.ravel()
    theta1 = -HALF_PI - grid1
    theta2 = -HALF_PI + (np.pi - grid2)
    theta3, _, ok, _ = _closure_arrays(theta1, theta2, geom)
    x = geom.l1 * np.cos(theta1[ok]) + geom.l3 * np.cos(theta3[ok])
    z = geom.l1 * np.sin(theta1[ok]) + geom.l3 * np.sin(theta3[ok])
    planar = np.column_stack([x, z])
    motors = np.column_stack([grid1[ok], grid2[ok]])

    if len(planar):
        _, first = np.unique(np.round(planar, 12), axis=0, return_index=True)
        first.sort()
        boundary = first[alpha_shape_boundary(planar[first], alpha_radius)]
    else:
        boundary = np.zeros(0, dtype=int)

    if hip_range[1] < hip_range[0]:
        raise ValueError("empty hip range")
    if hip_range[1] == hip_range[0]:
        hips = np.array([hip_range[0]], dtype=float)
    else:
        hips = _inclusive_range(hip_range[0], hip_range[1], hip_increment)
    bx, bz = planar[boundary, 0], planar[boundary, 1]
    xs = np.tile(bx, len(hips))
    ys = np.concatenate([-bz * math.sin(h) for h in hips]) if len(hips) else np.zeros(0)
    zs = np.concatenate([bz * math.cos(h) for h in hips]) if len(hips) else np.zeros(0)
    pts = np.column_stack([xs, ys, zs]) if len(xs) else np.zeros((0, 3))
    return WorkspaceCloud(
        points=pts,
        hip_angles=hips,
        motor_limits=(tuple(motor1_range), tuple(motor2_range), tuple(hip_range)),
        hip_increment=hip_increment,
        planar_points=planar,
        planar_motor_angles=motors,
        boundary=boundary,
        motor_step=motor_step,
    )


MOTOR_LIMITS_DEG = {"motor1": (-157.0, 160.0), "motor2": (20.0, 337.0), "hip": (-70.0, 180.0)}


def reference_workspace(geom: LegGeometry | None = None, hip_increment_deg: float = 2.5,
                    motor_step_deg: float = 1.0) -> WorkspaceCloud:
    geom = geom or LegGeometry()
    lim = {k: tuple(math.radians(v) for v in vals) for k, vals in MOTOR_LIMITS_DEG.items()}
    return workspace_sweep(lim["motor1"], lim["motor2"], lim["hip"],
                           math.radians(hip_increment_deg), geom,
                           motor_step=math.radians(motor_step_deg))
