"""Planar multibody model of the biped: body plus two five-bar legs.

Generalised coordinates ``q = (x_b, z_b, a1L, a2L, a1R, a2R)`` where ``(x_b, z_b)``
is the motor-2 axis (the body reference) and ``a*`` are control angles. The
passive calf angles never appear as coordinates; they are recovered through
the closure solve. Every mass is a point: the body (motors and electronics)
at the reference, and each link at its midpoint.

With ``T = 1/2 sum m_i |J_i qdot|^2 + 1/2 I_r |alpha_dot|^2`` the equations of
motion are::

    M(q) qddot + sum m_i J_i^T (Jdot_i qdot) = Q

where ``Jdot_i qdot`` comes from differentiating the loop closure twice.

The state vector carries three work accumulators after ``q`` and ``qdot``:
motor work, viscous losses (negative) and ground contact work.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import ContactModel, RobotDesign
from .errors import SingularConfiguration
from .kinematics import SINGULAR_TOL, _closure_scalar

N_Q = 6
N_Y = 2 * N_Q + 3
IDX_WORK_MOTOR = 2 * N_Q
IDX_WORK_FRICTION = 2 * N_Q + 1
IDX_WORK_CONTACT = 2 * N_Q + 2
HALF_PI = 0.5 * math.pi


def contact_force(paw_height: float, paw_vz: float, model: ContactModel,
                  paw_vx: float = 0.0) -> tuple[float, float]:
    """Penalty ground reaction ``(normal, tangential)`` on one paw."""
    if paw_height >= 0.0:
        return 0.0, 0.0
    normal = -model.k_ground * paw_height - model.c_ground * paw_vz
    if normal <= 0.0:
        return 0.0, 0.0
    tangential = -model.mu * normal * math.tanh(paw_vx / model.slip_velocity)
    return normal, tangential


@dataclass
class LegState:
    """Kinematic and inertial terms of one leg at a given (alpha, alpha_dot)."""

    paw: tuple[float, float]           # relative to the body reference
    paw_vel: tuple[float, float]       # relative velocity
    jac_paw: tuple[float, float, float, float]  # (xa1, xa2, za1, za2)
    mass_aa: tuple[float, float, float]  # (11, 12, 22) leg block of M
    mass_ba: tuple[float, float, float, float]  # body-row coupling (xa1, xa2, za1, za2)
    bias_b: tuple[float, float]
    bias_a: tuple[float, float]
    link_z: float                      # sum m_i z_i, used for potential energy
    link_x: float
    spring_force: float
    spring_energy: float
    q_spring: tuple[float, float]
    q_joint: tuple[float, float]       # passive-joint friction, generalised
    joint_power: float


class BipedModel:
    """Right-hand side of the stance/flight equations of motion.

    ``pitch`` tilts gravity inside the model frame (forward jumps). ``free_x``
    releases the horizontal body coordinate. ``legs_locked`` freezes all four
    control angles, leaving a rigid body in ballistic flight.
    """

    def __init__(self, design: RobotDesign, gravity: float, pitch: float = 0.0,
                 free_x: bool = False, legs_locked: bool = False):
        self.design = design
        self.gravity = gravity
        self.pitch = pitch
        self.gvec = (gravity * math.sin(pitch), -gravity * math.cos(pitch))
        self.free_x = free_x
        self.legs_locked = legs_locked
        g = design.geom
        self._geom = g
        self._l = (g.l0, g.l1, g.l2, g.l3, g.l4)
        m = design.masses
        self._m_hip = m.hip_link_mass
        self._m_calf = m.calf_link_mass
        self.total_mass = m.total_mass
        self._inertia = design.motor.reflected_inertia
        self._damping = design.motor.viscous_damping
        self._joint_friction = design.joint_friction
        self._k = design.spring.k_eq
        self._l_nat = design.spring.natural_length
        self._contact = design.contact
        active = []
        if free_x:
            active.append(0)
        active.append(1)
        if not legs_locked:
            active.extend([2, 3, 4, 5])
        self.active = np.array(active)
        self.torques = np.zeros(4)

    # ------------------------------------------------------------------ legs
    def leg_state(self, a1: float, a2: float, w1: float, w2: float) -> LegState:
        l0, l1, l2, l3, l4 = self._l
        th1 = -HALF_PI - a1
        th2 = -HALF_PI + a2
        c1, s1 = math.cos(th1), math.sin(th1)
        c2, s2 = math.cos(th2), math.sin(th2)
        th3, th4 = _closure_scalar(th1, th2, self._geom)
        r1x, r1z = l3 * math.cos(th3), l3 * math.sin(th3)
        r2x, r2z = l4 * math.cos(th4), l4 * math.sin(th4)
        # positions relative to the body reference (motor 2 at (l0, 0))
        k1x, k1z = l1 * c1 - l0, l1 * s1
        k2x, k2z = l2 * c2, l2 * s2
        px, pz = k1x + r1x, k1z + r1z

        det = r1x * r2z - r1z * r2x
        if abs(det) <= SINGULAR_TOL * l3 * l4:
            raise SingularConfiguration("calf links are colinear")
        inv = 1.0 / det
        d1x, d1z = l1 * s1, -l1 * c1          # dk1/da1
        d2x, d2z = -l2 * s2, l2 * c2          # dk2/da2
        g1 = r1x * d1x + r1z * d1z
        g2 = r2x * d2x + r2z * d2z
        jxa1 = r2z * g1 * inv
        jxa2 = -r1z * g2 * inv
        jza1 = -r2x * g1 * inv
        jza2 = r1x * g2 * inv

        v1x, v1z = d1x * w1, d1z * w1
        v2x, v2z = d2x * w2, d2z * w2
        vpx = jxa1 * w1 + jxa2 * w2
        vpz = jza1 * w1 + jza2 * w2
        b1x, b1z = -l1 * c1 * w1 * w1, -l1 * s1 * w1 * w1
        b2x, b2z = -l2 * c2 * w2 * w2, -l2 * s2 * w2 * w2
        e1x, e1z = vpx - v1x, vpz - v1z
        e2x, e2z = vpx - v2x, vpz - v2z
        rhs1 = r1x * b1x + r1z * b1z - (e1x * e1x + e1z * e1z)
        rhs2 = r2x * b2x + r2z * b2z - (e2x * e2x + e2z * e2z)
        bpx = (r2z * rhs1 - r1z * rhs2) * inv
        bpz = (-r2x * rhs1 + r1x * rhs2) * inv

        mh, mc = self._m_hip, self._m_calf
        # point masses: (m, Jx1, Jx2, Jz1, Jz2, bias_x, bias_z, x, z)
        points = (
            (mh, 0.5 * d1x, 0.0, 0.5 * d1z, 0.0, 0.5 * b1x, 0.5 * b1z,
             0.5 * (k1x - l0), 0.5 * k1z),
            (mh, 0.0, 0.5 * d2x, 0.0, 0.5 * d2z, 0.5 * b2x, 0.5 * b2z,
             0.5 * k2x, 0.5 * k2z),
            (mc, 0.5 * (d1x + jxa1), 0.5 * jxa2, 0.5 * (d1z + jza1), 0.5 * jza2,
             0.5 * (b1x + bpx), 0.5 * (b1z + bpz), 0.5 * (k1x + px), 0.5 * (k1z + pz)),
            (mc, 0.5 * jxa1, 0.5 * (d2x + jxa2), 0.5 * jza1, 0.5 * (d2z + jza2),
             0.5 * (b2x + bpx), 0.5 * (b2z + bpz), 0.5 * (k2x + px), 0.5 * (k2z + pz)),
        )
        m11 = m22 = self._inertia
        m12 = 0.0
        sxa1 = sxa2 = sza1 = sza2 = 0.0
        hbx = hbz = ha1 = ha2 = 0.0
        link_x = link_z = 0.0
        for m, jx1, jx2, jz1, jz2, bx, bz, x, z in points:
            m11 += m * (jx1 * jx1 + jz1 * jz1)
            m12 += m * (jx1 * jx2 + jz1 * jz2)
            m22 += m * (jx2 * jx2 + jz2 * jz2)
            sxa1 += m * jx1
            sxa2 += m * jx2
            sza1 += m * jz1
            sza2 += m * jz2
            hbx += m * bx
            hbz += m * bz
            ha1 += m * (jx1 * bx + jz1 * bz)
            ha2 += m * (jx2 * bx + jz2 * bz)
            link_x += m * x
            link_z += m * z

        # knee spring
        dx, dz = k2x - k1x, k2z - k1z
        d = math.hypot(dx, dz)
        stretch = d - self._l_nat
        if stretch > 0.0 and self._k > 0.0:
            tension = self._k * stretch
            ux, uz = dx / d, dz / d
            qs1 = tension * (ux * d1x + uz * d1z)
            qs2 = -tension * (ux * d2x + uz * d2z)
            energy = 0.5 * self._k * stretch * stretch
        else:
            tension = energy = qs1 = qs2 = 0.0

        # viscous friction in the three passive joints
        bj = self._joint_friction
        if bj > 0.0:
            il3 = 1.0 / (l3 * l3)
            il4 = 1.0 / (l4 * l4)
            g3a = (r1x * (jza1 - d1z) - r1z * (jxa1 - d1x)) * il3
            g3b = (r1x * jza2 - r1z * jxa2) * il3
            g4a = (r2x * jza1 - r2z * jxa1) * il4
            g4b = (r2x * (jza2 - d2z) - r2z * (jxa2 - d2x)) * il4
            # knee 1: theta3 - theta1, knee 2: theta4 - theta2, paw: theta3 - theta4
            k1a, k1b = g3a + 1.0, g3b
            k2a, k2b = g4a, g4b - 1.0
            pa, pb = g3a - g4a, g3b - g4b
            wk1 = k1a * w1 + k1b * w2
            wk2 = k2a * w1 + k2b * w2
            wp = pa * w1 + pb * w2
            qj1 = -bj * (wk1 * k1a + wk2 * k2a + wp * pa)
            qj2 = -bj * (wk1 * k1b + wk2 * k2b + wp * pb)
            jpow = -bj * (wk1 * wk1 + wk2 * wk2 + wp * wp)
        else:
            qj1 = qj2 = jpow = 0.0

        return LegState(
            paw=(px, pz), paw_vel=(vpx, vpz), jac_paw=(jxa1, jxa2, jza1, jza2),
            mass_aa=(m11, m12, m22), mass_ba=(sxa1, sxa2, sza1, sza2),
            bias_b=(hbx, hbz), bias_a=(ha1, ha2), link_z=link_z, link_x=link_x,
            spring_force=tension, spring_energy=energy, q_spring=(qs1, qs2),
            q_joint=(qj1, qj2), joint_power=jpow,
        )

    def legs(self, y: np.ndarray) -> tuple[LegState, LegState]:
        q = y[:N_Q]
        qd = y[N_Q:2 * N_Q]
        left = self.leg_state(q[2], q[3], qd[2], qd[3])
        if q[2] == q[4] and q[3] == q[5] and qd[2] == qd[4] and qd[3] == qd[5]:
            right = left  # mirrored legs: identical terms
        else:
            right = self.leg_state(q[4], q[5], qd[4], qd[5])
        return left, right

    def paw_contacts(self, y: np.ndarray, legs=None):
        """Per-paw ``(height, vx, vz, normal, tangential)`` in the model frame."""
        if legs is None:
            legs = self.legs(y)
        out = []
        for leg in legs:
            h = y[1] + leg.paw[1]
            vx = y[N_Q] + leg.paw_vel[0]
            vz = y[N_Q + 1] + leg.paw_vel[1]
            n, t = contact_force(h, vz, self._contact, vx)
            out.append((h, vx, vz, n, t))
        return out

    # ------------------------------------------------------------- dynamics
    def derivative(self, t: float, y: np.ndarray) -> np.ndarray:
        qd = y[N_Q:2 * N_Q]
        dy = np.zeros(N_Y)
        dy[:N_Q] = qd
        gx, gz = self.gvec
        mt = self.total_mass

        if self.legs_locked:
            dy[N_Q:N_Q + 2] = (gx if self.free_x else 0.0, gz)
            for leg_h, vx, vz, n, tf in self.paw_contacts(y):
                if n:
                    dy[N_Q + 1] += n / mt
                    if self.free_x:
                        dy[N_Q] += tf / mt
                    dy[IDX_WORK_CONTACT] += n * vz + tf * vx
            return dy

        legs = self.legs(y)
        M = np.zeros((N_Q, N_Q))
        rhs = np.zeros(N_Q)
        M[0, 0] = M[1, 1] = mt
        rhs[0] = mt * gx
        rhs[1] = mt * gz
        tau = self.torques
        b = self._damping
        p_motor = 0.0
        p_fric = 0.0
        p_contact = 0.0
        contacts = self.paw_contacts(y, legs)
        for i, leg in enumerate(legs):
            ia, ib = 2 + 2 * i, 3 + 2 * i
            w1, w2 = qd[ia], qd[ib]
            m11, m12, m22 = leg.mass_aa
            sxa1, sxa2, sza1, sza2 = leg.mass_ba
            M[ia, ia] = m11
            M[ia, ib] = M[ib, ia] = m12
            M[ib, ib] = m22
            M[0, ia] = M[ia, 0] = sxa1
            M[0, ib] = M[ib, 0] = sxa2
            M[1, ia] = M[ia, 1] = sza1
            M[1, ib] = M[ib, 1] = sza2
            rhs[0] -= leg.bias_b[0]
            rhs[1] -= leg.bias_b[1]
            # gravity on the links (the body-row share is in mt * g above)
            qa1 = gx * sxa1 + gz * sza1 - leg.bias_a[0]
            qa2 = gx * sxa2 + gz * sza2 - leg.bias_a[1]
            t1, t2 = tau[2 * i], tau[2 * i + 1]
            qa1 += t1 - b * w1 + leg.q_spring[0] + leg.q_joint[0]
            qa2 += t2 - b * w2 + leg.q_spring[1] + leg.q_joint[1]
            _, vx, vz, n, tf = contacts[i]
            if n:
                jxa1, jxa2, jza1, jza2 = leg.jac_paw
                rhs[0] += tf
                rhs[1] += n
                qa1 += jxa1 * tf + jza1 * n
                qa2 += jxa2 * tf + jza2 * n
                p_contact += tf * vx + n * vz
            rhs[ia] = qa1
            rhs[ib] = qa2
            p_motor += t1 * w1 + t2 * w2
            p_fric += -b * (w1 * w1 + w2 * w2) + leg.joint_power

        act = self.active
        try:
            acc = np.linalg.solve(M[np.ix_(act, act)], rhs[act])
        except np.linalg.LinAlgError as exc:
            raise SingularConfiguration("mass matrix is singular") from exc
        dy[N_Q + act] = acc
        dy[IDX_WORK_MOTOR] = p_motor
        dy[IDX_WORK_FRICTION] = p_fric
        dy[IDX_WORK_CONTACT] = p_contact
        return dy

    __call__ = derivative

    # ---------------------------------------------------------------- energy
    def mass_matrix(self, y: np.ndarray) -> np.ndarray:
        legs = self.legs(y)
        M = np.zeros((N_Q, N_Q))
        M[0, 0] = M[1, 1] = self.total_mass
        for i, leg in enumerate(legs):
            ia, ib = 2 + 2 * i, 3 + 2 * i
            m11, m12, m22 = leg.mass_aa
            sxa1, sxa2, sza1, sza2 = leg.mass_ba
            M[ia, ia], M[ia, ib], M[ib, ia], M[ib, ib] = m11, m12, m12, m22
            M[0, ia] = M[ia, 0] = sxa1
            M[0, ib] = M[ib, 0] = sxa2
            M[1, ia] = M[ia, 1] = sza1
            M[1, ib] = M[ib, 1] = sza2
        return M

    def energies(self, y: np.ndarray) -> dict:
        """Kinetic, gravitational and spring energy of a state."""
        qd = y[N_Q:2 * N_Q]
        legs = self.legs(y)
        M = self.mass_matrix(y)
        ke = 0.5 * float(qd @ M @ qd)
        gx, gz = self.gvec
        pe_g = -self.total_mass * (gx * y[0] + gz * y[1])
        pe_g -= sum(gx * leg.link_x + gz * leg.link_z for leg in legs)
        pe_s = sum(leg.spring_energy for leg in legs)
        return {"kinetic": ke, "gravity": pe_g, "spring": pe_s}

    def momentum(self, y: np.ndarray) -> np.ndarray:
        """Linear momentum (model frame)."""
        return (self.mass_matrix(y) @ y[N_Q:2 * N_Q])[:2]


def initial_state(x: float, z: float, alpha: float) -> np.ndarray:
    y = np.zeros(N_Y)
    y[0], y[1] = x, z
    y[2:6] = alpha
    return y
