"""The squat-and-thrust jump protocol on top of the biped model.

Timeline (control angles, both legs mirrored)::

    stand at 17.5 deg -> linear ramp to the squat angle -> hold -> thrust
    (setpoint back to 17.5 deg, torques saturate) -> liftoff -> flight -> touchdown

Stance runs through the adaptive integrator with motor torques refreshed on
the 500 Hz controller grid. At liftoff the legs are locked in their current
pose, conserving linear momentum, after which the robot is a rigid body in
ballistic flight and apex and touchdown follow in closed form.

Forward jumps run stance in a frame tilted by ``pitch`` so the legs thrust
along the tilted axis. The liftoff state is then rotated into the level world
frame, whose origin is the initial paw contact.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from ._kernel import CompiledModel
from .actuation import PidState, pid_torque, static_hold_torque
from .design import RobotDesign
from .errors import LeapsimError
from .integrator import DormandPrince, Event
from .kinematics import ControlAngles, leg_reach
from .model import (IDX_WORK_CONTACT, IDX_WORK_FRICTION, IDX_WORK_MOTOR, N_Q, N_Y,
                    BipedModel)

EARTH = 9.81
MARS = 3.71
MAX_SQUAT_DEG = 120.0


class Phase(str, Enum):
    STAND = "stand"
    SQUAT_RAMP = "squat_ramp"
    HOLD = "hold"
    THRUST = "thrust"
    FLIGHT = "flight"
    LANDED = "landed"


PHASE_ORDER = tuple(Phase)


@dataclass(frozen=True)
class JumpScenario:
    """One run of the protocol.

    ``spring_rating`` (N/m), when given, overrides the design stiffness and is
    read as an equivalent or a physical stiffness per ``spring_interpretation``.
    """

    name: str = "jump"
    gravity: float = EARTH
    torque_saturation: float = 24.8
    squat_angle_deg: float = 120.0
    pitch_deg: float = 0.0
    stand_setpoint_deg: float = 17.5
    stand_s: float = 0.5
    ramp_s: float = 1.3
    hold_s: float = 0.5
    thrust_timeout_s: float = 1.0
    spring_rating: float | None = None
    spring_interpretation: str = "equivalent"
    forward_mode: str = "tilted_frame"
    asymmetric_offset_deg: float = 10.0

    def __post_init__(self):
        if not self.gravity > 0:
            raise ValueError("gravity must be positive")
        if not 0 < self.torque_saturation <= 24.8:
            raise ValueError("torque_saturation must lie in (0, 24.8] Nm")
        if not self.stand_setpoint_deg < self.squat_angle_deg <= MAX_SQUAT_DEG:
            raise ValueError("squat_angle_deg must lie in (stand_setpoint_deg, 120]")
        if self.spring_interpretation not in ("equivalent", "physical"):
            raise ValueError("spring_interpretation must be 'equivalent' or 'physical'")
        if self.forward_mode not in ("tilted_frame", "asymmetric_setpoints"):
            raise ValueError("forward_mode must be 'tilted_frame' or 'asymmetric_setpoints'")
        if min(self.stand_s, self.ramp_s, self.hold_s) < 0 or self.thrust_timeout_s <= 0:
            raise ValueError("phase durations must be non-negative")
        if not -60.0 <= self.pitch_deg <= 60.0:
            raise ValueError("pitch_deg must lie in [-60, 60]")
        if self.spring_rating is not None and not self.spring_rating > 0:
            raise ValueError("spring_rating must be positive")

    @property
    def pitch(self) -> float:
        return math.radians(self.pitch_deg)

    @property
    def is_forward(self) -> bool:
        return self.pitch_deg != 0.0 or self.forward_mode == "asymmetric_setpoints"

    def effective_stiffness(self, design: RobotDesign) -> float:
        if self.spring_rating is None:
            return design.spring.k_eq
        if self.spring_interpretation == "equivalent":
            return self.spring_rating
        return 0.5 * self.spring_rating

    def apply(self, design: RobotDesign) -> RobotDesign:
        """Design as flown in this scenario (saturation and spring overrides)."""
        d = design.with_saturation(self.torque_saturation)
        return d.with_stiffness(self.effective_stiffness(design))


@dataclass
class SimState:
    """Snapshot of the simulator: model state vector, phase and controller memory."""

    t: float
    y: np.ndarray
    phase: Phase
    pid_integrals: tuple[float, ...]


@dataclass
class Trajectory:
    """Samples on the controller grid (plus event instants), world frame."""

    t: list[float] = field(default_factory=list)
    x: list[float] = field(default_factory=list)
    z: list[float] = field(default_factory=list)
    vz: list[float] = field(default_factory=list)
    alpha1: list[float] = field(default_factory=list)
    alpha2: list[float] = field(default_factory=list)
    tau1: list[float] = field(default_factory=list)
    tau2: list[float] = field(default_factory=list)
    spring: list[float] = field(default_factory=list)
    contact: list[float] = field(default_factory=list)
    phase: list[str] = field(default_factory=list)

    def append(self, t, x, z, vz, a1, a2, tau1, tau2, spring, contact, phase):
        self.t.append(t)
        self.x.append(x)
        self.z.append(z)
        self.vz.append(vz)
        self.alpha1.append(a1)
        self.alpha2.append(a2)
        self.tau1.append(tau1)
        self.tau2.append(tau2)
        self.spring.append(spring)
        self.contact.append(contact)
        self.phase.append(phase)

    def __len__(self):
        return len(self.t)


TRAJECTORY_HEADER = ("t_s", "x_b_m", "z_b_m", "vz_b_m_s", "alpha1_deg", "alpha2_deg",
                     "tau1_Nm", "tau2_Nm", "spring_N", "contact_N", "phase")
EVENTS_HEADER = ("event", "t_s", "z_b_m")


@dataclass
class EnergyLedger:
    """Terms of the stance work-energy balance (J)."""

    initial: float
    at_liftoff: float
    motor_work: float
    friction_work: float
    contact_work: float
    peak_kinetic: float
    lock_loss: float = 0.0

    @property
    def residual(self) -> float:
        return (self.at_liftoff - self.initial) - (
            self.motor_work + self.friction_work + self.contact_work)

    @property
    def relative_residual(self) -> float:
        return abs(self.residual) / self.peak_kinetic if self.peak_kinetic > 0 else 0.0


@dataclass
class JumpResult:
    scenario: JumpScenario
    body_apex: float
    paw_clearance: float
    standing_height: float
    liftoff_velocity: float
    liftoff_vz: float
    liftoff_height: float
    liftoff_time: float
    apex_time: float
    touchdown_time: float
    range: float
    no_liftoff: bool
    reason: str
    squat_reached: bool
    min_squat_deg: float
    peak_torque: float
    energy: EnergyLedger | None
    trajectory: Trajectory
    events: list[tuple[str, float, float]]
    final_state: SimState | None = None

    @property
    def apex_gain(self) -> float:
        return self.body_apex - self.standing_height

    @property
    def feasible(self) -> bool:
        return not self.no_liftoff

    def write_trajectory_csv(self, path) -> None:
        write_trajectory_csv(self.trajectory, path)

    def write_events_csv(self, path) -> None:
        write_events_csv(self.events, path)


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def write_trajectory_csv(traj: Trajectory, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for i in range(len(traj)):
            w.writerow([_fmt(traj.t[i]), _fmt(traj.x[i]), _fmt(traj.z[i]), _fmt(traj.vz[i]),
                        _fmt(traj.alpha1[i]), _fmt(traj.alpha2[i]), _fmt(traj.tau1[i]),
                        _fmt(traj.tau2[i]), _fmt(traj.spring[i]), _fmt(traj.contact[i]),
                        traj.phase[i]])


def write_events_csv(events, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVENTS_HEADER)
        for name, t, z in events:
            w.writerow([name, _fmt(t), _fmt(z)])


# ---------------------------------------------------------------------------


def _rotation(pitch: float):
    # model frame axes expressed in the world frame
    c, s = math.cos(pitch), math.sin(pitch)
    return (c, -s), (s, c)


def _to_world(pitch: float, origin, x: float, z: float):
    ex, ez = _rotation(pitch)
    dx, dz = x - origin[0], z - origin[1]
    return dx * ex[0] + dz * ez[0], dx * ex[1] + dz * ez[1]


def _vec_to_world(pitch: float, vx: float, vz: float):
    ex, ez = _rotation(pitch)
    return vx * ex[0] + vz * ez[0], vx * ex[1] + vz * ez[1]


def standing_state(design: RobotDesign, gravity: float, alpha: float,
                   pitch: float = 0.0) -> np.ndarray:
    """Stance at rest on both paws with the static penetration of the penalty ground."""
    model = BipedModel(design, gravity)
    leg = model.leg_state(alpha, alpha, 0.0, 0.0)
    pen = design.masses.total_mass * gravity * math.cos(pitch) / (2.0 * design.contact.k_ground)
    y = np.zeros(N_Y)
    y[1] = -leg.paw[1] - pen
    y[2:6] = alpha
    return y


@dataclass
class _Controller:
    scenario: JumpScenario
    design: RobotDesign
    n_stand: int
    n_ramp: int
    n_hold: int
    dt: float

    def phase(self, tick: int) -> Phase:
        if tick < self.n_stand:
            return Phase.STAND
        if tick < self.n_stand + self.n_ramp:
            return Phase.SQUAT_RAMP
        if tick < self.n_stand + self.n_ramp + self.n_hold:
            return Phase.HOLD
        return Phase.THRUST

    def setpoints(self, tick: int):
        sc = self.scenario
        stand = math.radians(sc.stand_setpoint_deg)
        squat = math.radians(sc.squat_angle_deg)
        ph = self.phase(tick)
        if ph is Phase.STAND:
            a = stand
        elif ph is Phase.SQUAT_RAMP:
            frac = (tick - self.n_stand) / self.n_ramp
            a = stand + frac * (squat - stand)
        elif ph is Phase.HOLD:
            a = squat
        else:
            if sc.forward_mode == "asymmetric_setpoints" and sc.pitch_deg == 0.0:
                off = math.radians(sc.asymmetric_offset_deg)
                return (stand + off, stand - off, stand + off, stand - off)
            a = stand
        return (a, a, a, a)


def simulate_jump(design: RobotDesign, scenario: JumpScenario, rtol: float = 1e-6,
                  atol: float = 1e-8, record: bool = True,
                  free_x: bool | None = None) -> JumpResult:
    """Run the full protocol and measure the jump.

    Heights are body-reference (motor 2 axis) heights above level ground.
    Runs that never leave the ground come back flagged, not raised.
    """
    sc = scenario
    d = sc.apply(design)
    g = sc.gravity
    pitch = sc.pitch if sc.forward_mode == "tilted_frame" else 0.0
    if free_x is None:
        free_x = sc.is_forward
    ref = BipedModel(d, g, pitch=pitch, free_x=free_x)
    fun = CompiledModel(ref)
    tau = ref.torques

    dt = d.pid.dt
    ctl = _Controller(sc, d, round(sc.stand_s / dt), max(1, round(sc.ramp_s / dt)),
                      round(sc.hold_s / dt), dt)
    n_thrust_max = round(sc.thrust_timeout_s / dt)
    n_total = ctl.n_stand + ctl.n_ramp + ctl.n_hold + n_thrust_max

    stand = math.radians(sc.stand_setpoint_deg)
    y = standing_state(d, g, stand, pitch)
    paw0 = ref.leg_state(stand, stand, 0.0, 0.0).paw
    origin = (y[0] + paw0[0], 0.0)  # initial paw contact point, model frame
    standing_height = float(_to_world(pitch, origin, y[0], y[1])[1])

    hold = static_hold_torque(ControlAngles.symmetric(stand), d, g * math.cos(pitch))
    pids = []
    for i in range(4):
        st = PidState()
        if d.pid.ki > 0:
            bound = d.pid.integral_limit / d.pid.ki
            st.integral = min(bound, max(-bound, hold[i % 2] / d.pid.ki))
        pids.append(st)

    energy0 = ref.energies(y)
    e_initial = energy0["kinetic"] + energy0["gravity"] + energy0["spring"]
    peak_ke = 0.0

    traj = Trajectory()
    events: list[tuple[str, float, float]] = []
    solver = DormandPrince(rtol, atol)
    liftoff_ev = Event("liftoff", lambda t, yy: fun.support_measure(yy), -1)

    def sample(t, yy, phase, contact_n=None):
        if not record:
            return
        wx, wz = _to_world(pitch, origin, yy[0], yy[1])
        _, wvz = _vec_to_world(pitch, yy[N_Q], yy[N_Q + 1])
        if contact_n is None:
            contact_n = sum(c[3] for c in ref.paw_contacts(yy))
        leg = ref.leg_state(yy[2], yy[3], yy[N_Q + 2], yy[N_Q + 3])
        traj.append(t, wx, wz, wvz, math.degrees(yy[2]), math.degrees(yy[3]),
                    tau[0], tau[1], leg.spring_force, contact_n, phase.value)

    t = 0.0
    max_alpha = -math.inf
    peak_tau = 0.0
    lifted = False
    tick = 0
    phase = Phase.STAND
    thrust_start_alpha = None
    while tick < n_total:
        phase = ctl.phase(tick)
        if phase is Phase.THRUST and thrust_start_alpha is None:
            thrust_start_alpha = 0.5 * (y[2] + y[3])
            events.append(("thrust", t, _to_world(pitch, origin, y[0], y[1])[1]))
        sp = ctl.setpoints(tick)
        for i in range(4):
            tau[i] = pid_torque(sp[i], y[2 + i], y[N_Q + 2 + i], pids[i], d.pid, d.motor, dt)
        peak_tau = max(peak_tau, float(np.max(np.abs(tau))))
        sample(t, y, phase)
        if phase is Phase.HOLD:
            max_alpha = max(max_alpha, 0.5 * (y[2] + y[3]))
        t_next = (tick + 1) * dt
        evs = (liftoff_ev,) if phase is Phase.THRUST else ()
        while t < t_next:
            t, y, ev = solver.advance(fun, t, y, t_next, evs)
            if ev is None:
                break
            if _vec_to_world(pitch, y[N_Q], y[N_Q + 1])[1] > 0.0:
                lifted = True
                break
            # momentary unloading while still moving down: not a liftoff
            evs = ()
        if phase is Phase.THRUST:
            peak_ke = max(peak_ke, _kinetic(ref, y))
        if lifted:
            break
        tick += 1

    squat = math.radians(sc.squat_angle_deg)
    squat_reached = max_alpha >= squat - math.radians(5.0)
    if not lifted:
        # never left the ground within the timeout
        if not squat_reached:
            reason = "squat_not_reached"
        elif thrust_start_alpha is not None and 0.5 * (y[2] + y[3]) > thrust_start_alpha - math.radians(5.0):
            reason = "standup_failed"
        else:
            reason = "no_liftoff"
        sample(t, y, Phase.THRUST)
        return JumpResult(sc, standing_height, standing_height - leg_reach(stand, d.geom),
                          standing_height, 0.0, 0.0, standing_height, math.nan, math.nan,
                          math.nan, 0.0, True, reason, squat_reached,
                          math.degrees(max_alpha), peak_tau, None, traj, events,
                          SimState(t, y.copy(), Phase.THRUST,
                                   tuple(p.integral for p in pids)))

    # -------------------------------------------------------------- liftoff
    t_lo = t
    e_lo = ref.energies(y)
    p_model = ref.momentum(y)
    mt = d.masses.total_mass
    vcm_model = p_model / mt
    ledger = EnergyLedger(
        initial=e_initial,
        at_liftoff=e_lo["kinetic"] + e_lo["gravity"] + e_lo["spring"],
        motor_work=float(y[IDX_WORK_MOTOR]),
        friction_work=float(y[IDX_WORK_FRICTION]),
        contact_work=float(y[IDX_WORK_CONTACT]),
        peak_kinetic=peak_ke,
    )
    y_lock = y.copy()
    y_lock[N_Q + 2:2 * N_Q] = 0.0
    y_lock[N_Q] = vcm_model[0] if free_x else 0.0
    y_lock[N_Q + 1] = vcm_model[1]
    ledger.lock_loss = e_lo["kinetic"] - _kinetic(ref, y_lock)

    sample(t_lo, y_lock, Phase.FLIGHT, 0.0)
    bx, bz = map(float, _to_world(pitch, origin, y[0], y[1]))
    vx, vz = map(float, _vec_to_world(pitch, y_lock[N_Q], y_lock[N_Q + 1]))
    events.append(("liftoff", t_lo, bz))
    legs = ref.legs(y_lock)
    paws = []
    for leg in legs:
        # paw offsets in the world frame; the body does not rotate in flight
        ex, ez = _rotation(pitch)
        px, pz = leg.paw
        paws.append((px * ex[0] + pz * ez[0], px * ex[1] + pz * ez[1]))

    t_apex = vz / g
    apex = bz + vz * vz / (2.0 * g)
    # touchdown: the lowest paw comes back to z = 0 on the way down
    low_x, low_z = min(paws, key=lambda pw: pw[1])
    h0 = bz + low_z
    t_td = (vz + math.sqrt(max(vz * vz + 2.0 * g * h0, 0.0))) / g
    landing_x = bx + vx * t_td + low_x
    events.append(("apex", t_lo + t_apex, apex))
    events.append(("touchdown", t_lo + t_td, bz + vz * t_td - 0.5 * g * t_td * t_td))

    if record:
        a1, a2 = math.degrees(y_lock[2]), math.degrees(y_lock[3])
        spring_f = legs[0].spring_force
        n_fly = int(t_td / dt)
        for k in range(1, n_fly + 1):
            tk = k * dt
            if k == n_fly and tk >= t_td:
                break
            zk = bz + vz * tk - 0.5 * g * tk * tk
            traj.append(t_lo + tk, bx + vx * tk, zk, vz - g * tk, a1, a2, 0.0, 0.0,
                        spring_f, 0.0, Phase.FLIGHT.value)
        traj.append(t_lo + t_td, bx + vx * t_td, bz + vz * t_td - 0.5 * g * t_td * t_td,
                    vz - g * t_td, a1, a2, 0.0, 0.0, spring_f, 0.0, Phase.LANDED.value)

    stand_reach = leg_reach(stand, d.geom)
    return JumpResult(
        scenario=sc,
        body_apex=apex,
        paw_clearance=apex - stand_reach,
        standing_height=standing_height,
        liftoff_velocity=math.hypot(vx, vz),
        liftoff_vz=vz,
        liftoff_height=bz,
        liftoff_time=t_lo,
        apex_time=t_lo + t_apex,
        touchdown_time=t_lo + t_td,
        range=landing_x,
        no_liftoff=False,
        reason="",
        squat_reached=squat_reached,
        min_squat_deg=math.degrees(max_alpha),
        peak_torque=peak_tau,
        energy=ledger,
        trajectory=traj,
        events=events,
        final_state=SimState(t_lo, y_lock, Phase.FLIGHT, tuple(p.integral for p in pids)),
    )


def _kinetic(model: BipedModel, y: np.ndarray) -> float:
    qd = y[N_Q:2 * N_Q]
    return 0.5 * float(qd @ model.mass_matrix(y) @ qd)


def simulate_forward_jump(design: RobotDesign, scenario: JumpScenario, **kw) -> JumpResult:
    """Forward jump with the body free to move horizontally.

    ``scenario.pitch_deg`` (30 in the reference runs) tilts the thrust frame.
    """
    return simulate_jump(design, scenario, free_x=True, **kw)


__all__ = [
    "EARTH", "MARS", "Phase", "JumpScenario", "SimState", "Trajectory", "JumpResult",
    "EnergyLedger", "simulate_jump", "simulate_forward_jump", "standing_state",
    "write_trajectory_csv", "write_events_csv", "LeapsimError",
]
