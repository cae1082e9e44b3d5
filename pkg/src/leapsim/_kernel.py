"""Compiled right-hand side of the biped equations of motion.

This is a line-for-line port of :meth:`BipedModel.derivative` onto flat float
arrays so numba can compile it. The pure-Python model stays the readable
reference; tests hold the two to round-off agreement.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .model import IDX_WORK_CONTACT, IDX_WORK_FRICTION, IDX_WORK_MOTOR, N_Q, N_Y

# parameter vector layout
P_L0, P_L1, P_L2, P_L3, P_L4 = 0, 1, 2, 3, 4
P_MHIP, P_MCALF, P_MTOT = 5, 6, 7
P_INERTIA, P_DAMP, P_JFRIC = 8, 9, 10
P_K, P_LNAT = 11, 12
P_KG, P_CG, P_MU, P_VSLIP = 13, 14, 15, 16
P_GX, P_GZ = 17, 18
P_FREEX, P_LOCKED = 19, 20
N_PARAMS = 21

# status codes returned by the kernel
OK = 0
SINGULAR = 1
UNREACHABLE = 2

_HALF_PI = 0.5 * math.pi


def pack_params(model) -> np.ndarray:
    p = np.zeros(N_PARAMS)
    p[P_L0:P_L4 + 1] = model._l
    p[P_MHIP] = model._m_hip
    p[P_MCALF] = model._m_calf
    p[P_MTOT] = model.total_mass
    p[P_INERTIA] = model._inertia
    p[P_DAMP] = model._damping
    p[P_JFRIC] = model._joint_friction
    p[P_K] = model._k
    p[P_LNAT] = model._l_nat
    c = model._contact
    p[P_KG], p[P_CG], p[P_MU], p[P_VSLIP] = c.k_ground, c.c_ground, c.mu, c.slip_velocity
    p[P_GX], p[P_GZ] = model.gvec
    p[P_FREEX] = 1.0 if model.free_x else 0.0
    p[P_LOCKED] = 1.0 if model.legs_locked else 0.0
    return p


@njit(cache=True)
def _closure(th1, th2, l0, l1, l2, l3, l4, out):
    s1, c1 = math.sin(th1), math.cos(th1)
    s2, c2 = math.sin(th2), math.cos(th2)
    a = 2 * l4 * l2 * s2 - 2 * l1 * l4 * s1
    b = 2 * l4 * l0 - 2 * l1 * l4 * c1 + 2 * l4 * l2 * c2
    c = (l0 * l0 + l1 * l1 + l2 * l2 - l3 * l3 + l4 * l4 - 2 * l1 * l2 * s1 * s2
         - 2 * l1 * l0 * c1 + 2 * l2 * l0 * c2 - 2 * l1 * l2 * c1 * c2)
    scale = a * a + b * b + c * c
    disc = a * a + b * b - c * c
    if disc < -1e-12 * scale:
        return UNREACHABLE
    root = math.sqrt(max(disc, 0.0))
    num = a - root
    den = b - c
    tiny = 1e-14 * math.sqrt(scale)
    if abs(num) <= tiny and abs(den) <= tiny:
        num, den = -(b + c), a + root
        if abs(num) <= tiny and abs(den) <= tiny:
            return UNREACHABLE
    th4 = 2.0 * math.atan2(num, den)
    if th4 > math.pi:
        th4 -= 2.0 * math.pi
    elif th4 <= -math.pi:
        th4 += 2.0 * math.pi
    s4, c4 = math.sin(th4), math.cos(th4)
    arg = (l4 * s4 + l2 * s2 - l1 * s1) / l3
    if abs(arg) > 1.0 + 1e-12:
        return UNREACHABLE
    base = math.asin(min(1.0, max(-1.0, arg)))
    if l0 + l2 * c2 + l4 * c4 - l1 * c1 >= 0.0:
        th3 = base
    else:
        th3 = math.pi - base
        if th3 > math.pi:
            th3 -= 2.0 * math.pi
    out[0] = th3
    out[1] = th4
    return OK


@njit(cache=True)
def _leg(a1, a2, w1, w2, p, leg):
    """Fill ``leg`` with the terms of one leg; returns a status code.

    leg layout: 0-1 paw, 2-3 paw vel, 4-7 jac (xa1, xa2, za1, za2), 8-10 mass_aa,
    11-14 mass_ba, 15-16 bias_b, 17-18 bias_a, 19 link_x, 20 link_z,
    21 spring force, 22 spring energy, 23-24 q_spring, 25-26 q_joint, 27 joint power
    """
    l0, l1, l2, l3, l4 = p[P_L0], p[P_L1], p[P_L2], p[P_L3], p[P_L4]
    th1 = -_HALF_PI - a1
    th2 = -_HALF_PI + a2
    c1, s1 = math.cos(th1), math.sin(th1)
    c2, s2 = math.cos(th2), math.sin(th2)
    ang = np.empty(2)
    if _closure(th1, th2, l0, l1, l2, l3, l4, ang) != OK:
        return UNREACHABLE
    r1x, r1z = l3 * math.cos(ang[0]), l3 * math.sin(ang[0])
    r2x, r2z = l4 * math.cos(ang[1]), l4 * math.sin(ang[1])
    k1x, k1z = l1 * c1 - l0, l1 * s1
    k2x, k2z = l2 * c2, l2 * s2
    px, pz = k1x + r1x, k1z + r1z

    det = r1x * r2z - r1z * r2x
    if abs(det) <= 1e-9 * l3 * l4:
        return SINGULAR
    inv = 1.0 / det
    d1x, d1z = l1 * s1, -l1 * c1
    d2x, d2z = -l2 * s2, l2 * c2
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

    mh, mc = p[P_MHIP], p[P_MCALF]
    pts = np.empty((4, 9))
    pts[0, 0], pts[0, 1], pts[0, 2], pts[0, 3], pts[0, 4] = mh, 0.5 * d1x, 0.0, 0.5 * d1z, 0.0
    pts[0, 5], pts[0, 6], pts[0, 7], pts[0, 8] = 0.5 * b1x, 0.5 * b1z, 0.5 * (k1x - l0), 0.5 * k1z
    pts[1, 0], pts[1, 1], pts[1, 2], pts[1, 3], pts[1, 4] = mh, 0.0, 0.5 * d2x, 0.0, 0.5 * d2z
    pts[1, 5], pts[1, 6], pts[1, 7], pts[1, 8] = 0.5 * b2x, 0.5 * b2z, 0.5 * k2x, 0.5 * k2z
    pts[2, 0], pts[2, 1], pts[2, 2] = mc, 0.5 * (d1x + jxa1), 0.5 * jxa2
    pts[2, 3], pts[2, 4] = 0.5 * (d1z + jza1), 0.5 * jza2
    pts[2, 5], pts[2, 6] = 0.5 * (b1x + bpx), 0.5 * (b1z + bpz)
    pts[2, 7], pts[2, 8] = 0.5 * (k1x + px), 0.5 * (k1z + pz)
    pts[3, 0], pts[3, 1], pts[3, 2] = mc, 0.5 * jxa1, 0.5 * (d2x + jxa2)
    pts[3, 3], pts[3, 4] = 0.5 * jza1, 0.5 * (d2z + jza2)
    pts[3, 5], pts[3, 6] = 0.5 * (b2x + bpx), 0.5 * (b2z + bpz)
    pts[3, 7], pts[3, 8] = 0.5 * (k2x + px), 0.5 * (k2z + pz)

    m11 = m22 = p[P_INERTIA]
    m12 = 0.0
    sxa1 = sxa2 = sza1 = sza2 = 0.0
    hbx = hbz = ha1 = ha2 = 0.0
    link_x = link_z = 0.0
    for i in range(4):
        m, jx1, jx2, jz1, jz2 = pts[i, 0], pts[i, 1], pts[i, 2], pts[i, 3], pts[i, 4]
        bx, bz, x, z = pts[i, 5], pts[i, 6], pts[i, 7], pts[i, 8]
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

    dx, dz = k2x - k1x, k2z - k1z
    d = math.hypot(dx, dz)
    stretch = d - p[P_LNAT]
    k = p[P_K]
    if stretch > 0.0 and k > 0.0:
        tension = k * stretch
        ux, uz = dx / d, dz / d
        qs1 = tension * (ux * d1x + uz * d1z)
        qs2 = -tension * (ux * d2x + uz * d2z)
        energy = 0.5 * k * stretch * stretch
    else:
        tension = energy = qs1 = qs2 = 0.0

    bj = p[P_JFRIC]
    if bj > 0.0:
        il3 = 1.0 / (l3 * l3)
        il4 = 1.0 / (l4 * l4)
        g3a = (r1x * (jza1 - d1z) - r1z * (jxa1 - d1x)) * il3
        g3b = (r1x * jza2 - r1z * jxa2) * il3
        g4a = (r2x * jza1 - r2z * jxa1) * il4
        g4b = (r2x * (jza2 - d2z) - r2z * (jxa2 - d2x)) * il4
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

    leg[0], leg[1], leg[2], leg[3] = px, pz, vpx, vpz
    leg[4], leg[5], leg[6], leg[7] = jxa1, jxa2, jza1, jza2
    leg[8], leg[9], leg[10] = m11, m12, m22
    leg[11], leg[12], leg[13], leg[14] = sxa1, sxa2, sza1, sza2
    leg[15], leg[16], leg[17], leg[18] = hbx, hbz, ha1, ha2
    leg[19], leg[20] = link_x, link_z
    leg[21], leg[22], leg[23], leg[24] = tension, energy, qs1, qs2
    leg[25], leg[26], leg[27] = qj1, qj2, jpow
    return OK


N_LEG = 28


@njit(cache=True)
def contact(h, vx, vz, p, out):
    if h >= 0.0:
        out[0] = 0.0
        out[1] = 0.0
        return
    n = -p[P_KG] * h - p[P_CG] * vz
    if n <= 0.0:
        out[0] = 0.0
        out[1] = 0.0
        return
    out[0] = n
    out[1] = -p[P_MU] * n * math.tanh(vx / p[P_VSLIP])


@njit(cache=True)
def legs_into(y, p, legs):
    st = _leg(y[2], y[3], y[N_Q + 2], y[N_Q + 3], p, legs[0])
    if st != OK:
        return st
    if (y[2] == y[4] and y[3] == y[5] and y[N_Q + 2] == y[N_Q + 4]
            and y[N_Q + 3] == y[N_Q + 5]):
        legs[1, :] = legs[0, :]
        return OK
    return _leg(y[4], y[5], y[N_Q + 4], y[N_Q + 5], p, legs[1])


@njit(cache=True)
def derivative(y, p, tau, dy):
    """Write ``dy/dt`` into ``dy``; returns a status code."""
    for i in range(N_Y):
        dy[i] = 0.0
    for i in range(N_Q):
        dy[i] = y[N_Q + i]
    gx, gz = p[P_GX], p[P_GZ]
    mt = p[P_MTOT]
    free_x = p[P_FREEX] != 0.0
    cf = np.empty(2)
    legs = np.empty((2, N_LEG))

    if p[P_LOCKED] != 0.0:
        dy[N_Q] = gx if free_x else 0.0
        dy[N_Q + 1] = gz
        st = legs_into(y, p, legs)
        if st != OK:
            return st
        for i in range(2):
            h = y[1] + legs[i, 1]
            vx = y[N_Q] + legs[i, 2]
            vz = y[N_Q + 1] + legs[i, 3]
            contact(h, vx, vz, p, cf)
            if cf[0] != 0.0:
                dy[N_Q + 1] += cf[0] / mt
                if free_x:
                    dy[N_Q] += cf[1] / mt
                dy[IDX_WORK_CONTACT] += cf[0] * vz + cf[1] * vx
        return OK

    st = legs_into(y, p, legs)
    if st != OK:
        return st
    M = np.zeros((N_Q, N_Q))
    rhs = np.zeros(N_Q)
    M[0, 0] = mt
    M[1, 1] = mt
    rhs[0] = mt * gx
    rhs[1] = mt * gz
    b = p[P_DAMP]
    p_motor = 0.0
    p_fric = 0.0
    p_contact = 0.0
    for i in range(2):
        L = legs[i]
        ia, ib = 2 + 2 * i, 3 + 2 * i
        w1, w2 = y[N_Q + ia], y[N_Q + ib]
        M[ia, ia] = L[8]
        M[ia, ib] = L[9]
        M[ib, ia] = L[9]
        M[ib, ib] = L[10]
        M[0, ia] = M[ia, 0] = L[11]
        M[0, ib] = M[ib, 0] = L[12]
        M[1, ia] = M[ia, 1] = L[13]
        M[1, ib] = M[ib, 1] = L[14]
        rhs[0] -= L[15]
        rhs[1] -= L[16]
        qa1 = gx * L[11] + gz * L[13] - L[17]
        qa2 = gx * L[12] + gz * L[14] - L[18]
        t1, t2 = tau[2 * i], tau[2 * i + 1]
        qa1 += t1 - b * w1 + L[23] + L[25]
        qa2 += t2 - b * w2 + L[24] + L[26]
        h = y[1] + L[1]
        vx = y[N_Q] + L[2]
        vz = y[N_Q + 1] + L[3]
        contact(h, vx, vz, p, cf)
        n, tf = cf[0], cf[1]
        if n != 0.0:
            rhs[0] += tf
            rhs[1] += n
            qa1 += L[4] * tf + L[6] * n
            qa2 += L[5] * tf + L[7] * n
            p_contact += tf * vx + n * vz
        rhs[ia] = qa1
        rhs[ib] = qa2
        p_motor += t1 * w1 + t2 * w2
        p_fric += -b * (w1 * w1 + w2 * w2) + L[27]

    # Cholesky solve on the active block
    first = 0 if free_x else 1
    n_act = N_Q - first
    A = np.empty((n_act, n_act))
    r = np.empty(n_act)
    for i in range(n_act):
        r[i] = rhs[first + i]
        for j in range(n_act):
            A[i, j] = M[first + i, first + j]
    for j in range(n_act):
        s = A[j, j]
        for k in range(j):
            s -= A[j, k] * A[j, k]
        if s <= 1e-14 * (1.0 + abs(A[j, j])):
            return SINGULAR
        A[j, j] = math.sqrt(s)
        for i in range(j + 1, n_act):
            s = A[i, j]
            for k in range(j):
                s -= A[i, k] * A[j, k]
            A[i, j] = s / A[j, j]
    for i in range(n_act):
        s = r[i]
        for k in range(i):
            s -= A[i, k] * r[k]
        r[i] = s / A[i, i]
    for i in range(n_act - 1, -1, -1):
        s = r[i]
        for k in range(i + 1, n_act):
            s -= A[k, i] * r[k]
        r[i] = s / A[i, i]
    for i in range(n_act):
        dy[N_Q + first + i] = r[i]
    dy[IDX_WORK_MOTOR] = p_motor
    dy[IDX_WORK_FRICTION] = p_fric
    dy[IDX_WORK_CONTACT] = p_contact
    return OK


@njit(cache=True)
def support_measure(y, p):
    """Largest unclamped penalty force over the paws; negative once both unload.

    A paw above ground contributes ``-inf`` so flight is always negative.
    """
    legs = np.empty((2, N_LEG))
    if legs_into(y, p, legs) != OK:
        return np.nan
    best = -np.inf
    for i in range(2):
        h = y[1] + legs[i, 1]
        if h < 0.0:
            vz = y[N_Q + 1] + legs[i, 3]
            f = -p[P_KG] * h - p[P_CG] * vz
            if f > best:
                best = f
    return best


@njit(cache=True)
def min_paw_height(y, p):
    legs = np.empty((2, N_LEG))
    if legs_into(y, p, legs) != OK:
        return np.nan
    return min(y[1] + legs[0, 1], y[1] + legs[1, 1])


# Dormand-Prince tableau, duplicated here as literals for the compiled stepper
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.zeros((7, 7))
_DP_A[1, :1] = [1 / 5]
_DP_A[2, :2] = [3 / 40, 9 / 40]
_DP_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_DP_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_DP_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_DP_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@njit(cache=True)
def dp_attempt(y, h, p, tau, k1, y_new, err, k_last):
    """One Dormand-Prince trial step; a failed stage poisons ``y_new`` with NaN."""
    n = y.shape[0]
    ks = np.empty((7, n))
    ks[0, :] = k1
    yi = np.empty(n)
    for i in range(1, 7):
        for m in range(n):
            acc = y[m]
            for j in range(i):
                a = _DP_A[i, j]
                if a != 0.0:
                    acc += h * a * ks[j, m]
            yi[m] = acc
        if derivative(yi, p, tau, ks[i]) != OK:
            for m in range(n):
                y_new[m] = np.nan
            return
    for m in range(n):
        y_new[m] = yi[m]  # stage 7 sits at the fifth-order solution (FSAL)
        e = 0.0
        for j in range(7):
            e += _DP_E[j] * ks[j, m]
        err[m] = h * e
        k_last[m] = ks[6, m]


class CompiledModel:
    """Drop-in replacement for a :class:`BipedModel` right-hand side.

    Shares the reference model's torque vector, so a controller writing to
    ``model.torques`` drives both.
    """

    def __init__(self, model):
        self.model = model
        self.params = pack_params(model)
        self.torques = model.torques
        self._dy = np.empty(N_Y)

    def __call__(self, t, y):
        dy = np.empty(N_Y)
        status = derivative(y, self.params, self.torques, dy)
        if status != OK:
            from .errors import SingularConfiguration, UnreachableConfiguration
            if status == SINGULAR:
                raise SingularConfiguration(f"singular configuration at t={t:.6f}")
            raise UnreachableConfiguration(f"linkage cannot close at t={t:.6f}")
        return dy

    def dp_attempt(self, y, h, k1):
        y_new = np.empty(N_Y)
        err = np.empty(N_Y)
        k_last = np.empty(N_Y)
        dp_attempt(y, h, self.params, self.torques, k1, y_new, err, k_last)
        return y_new, err, k_last

    def support_measure(self, y) -> float:
        return float(support_measure(y, self.params))

    def min_paw_height(self, y) -> float:
        return float(min_paw_height(y, self.params))
