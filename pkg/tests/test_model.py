import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leapsim._kernel import CompiledModel
from leapsim.actuation import MotorConfig, static_hold_torque
from leapsim.design import ContactModel, RobotDesign
from leapsim.errors import SingularConfiguration, UnreachableConfiguration
from leapsim.integrator import integrate
from leapsim.jump import standing_state
from leapsim.kinematics import ControlAngles
from leapsim.model import (IDX_WORK_CONTACT, IDX_WORK_FRICTION, IDX_WORK_MOTOR, N_Q, N_Y,
                           BipedModel, contact_force, initial_state)

G = 9.81
DESIGN = RobotDesign()
# inertia on the motors keeps the leg block well conditioned, damping off for audits
LOSSLESS = RobotDesign(motor=MotorConfig(reflected_inertia=0.002))


def flying_state(alpha_deg=10.0, z=5.0):
    return initial_state(0.0, z, math.radians(alpha_deg))


# ---------------------------------------------------------------- contact

def test_contact_above_ground_is_zero():
    assert contact_force(0.01, -3.0, ContactModel()) == (0.0, 0.0)
    assert contact_force(0.0, -3.0, ContactModel()) == (0.0, 0.0)


def test_contact_never_adhesive():
    n, t = contact_force(-1e-3, 10.0, ContactModel())
    assert n == 0.0 and t == 0.0


@given(st.floats(-0.05, 0.05), st.floats(-20, 20), st.floats(-5, 5))
def test_contact_unilateral_and_friction_cone(h, vz, vx):
    c = ContactModel()
    n, t = contact_force(h, vz, c, vx)
    assert n >= 0.0
    assert abs(t) <= c.mu * n + 1e-12
    if vx:
        assert t * vx <= 0.0


def test_static_stance_force_balance():
    y = standing_state(DESIGN, G, math.radians(17.5))
    model = BipedModel(DESIGN, G)
    contacts = model.paw_contacts(y)
    total = sum(c[3] for c in contacts)
    assert total == pytest.approx(7.9 * 9.81, rel=1e-12)
    assert total == pytest.approx(77.5, abs=0.05)
    for h, *_ in contacts:
        assert -h == pytest.approx(77.499 / (2 * 5e4), rel=1e-3)


# ---------------------------------------------------------------- derivative

def test_ballistic_body_acceleration():
    model = BipedModel(DESIGN, G)
    dy = model.derivative(0.0, flying_state())
    assert dy[N_Q + 1] == pytest.approx(-G, abs=1e-12)
    assert np.allclose(dy[N_Q + 2:2 * N_Q], 0.0, atol=1e-12)


def test_locked_legs_ballistic():
    model = BipedModel(DESIGN, G, legs_locked=True)
    dy = model.derivative(0.0, flying_state(60.0))
    assert dy[N_Q + 1] == -G


def test_compiled_kernel_matches_python():
    rng = np.random.default_rng(2)
    for free_x, pitch in ((False, 0.0), (True, math.radians(30.0))):
        model = BipedModel(LOSSLESS, G, pitch=pitch, free_x=free_x)
        fast = CompiledModel(model)
        for _ in range(30):
            y = np.zeros(N_Y)
            y[1] = rng.uniform(0.3, 0.5)
            y[2:6] = np.radians(rng.uniform(10, 115, 4))
            y[N_Q:2 * N_Q] = rng.normal(0, 1, N_Q)
            model.torques[:] = rng.uniform(-20, 20, 4)
            a, b = model.derivative(0.0, y), fast(0.0, y)
            assert np.allclose(a, b, rtol=1e-10, atol=1e-9)


def test_compiled_support_measure():
    model = BipedModel(DESIGN, G)
    fast = CompiledModel(model)
    y = standing_state(DESIGN, G, math.radians(17.5))
    assert fast.support_measure(y) == pytest.approx(7.9 * 9.81 / 2, rel=1e-9)
    assert fast.support_measure(flying_state()) == -math.inf
    assert fast.min_paw_height(flying_state(z=5.0)) > 4.0


def test_static_squat_equilibrium():
    for deg in (17.5, 60.0, 90.0, 120.0):
        a = math.radians(deg)
        y = standing_state(DESIGN, G, a)
        model = BipedModel(DESIGN, G)
        t1, t2 = static_hold_torque(ControlAngles.symmetric(a), DESIGN, G)
        model.torques[:] = (t1, t2, t1, t2)
        dy = model.derivative(0.0, y)
        assert np.max(np.abs(dy[N_Q:2 * N_Q])) < 1e-8, deg


def test_collapsing_knees_raise():
    model = BipedModel(DESIGN, G)
    y = flying_state()
    y[2:6] = -math.asin(0.09 / 0.36)  # hip links cross, knees meet
    with pytest.raises((SingularConfiguration, UnreachableConfiguration)):
        CompiledModel(model)(0.0, y)


def test_mass_matrix_symmetric_positive():
    model = BipedModel(DESIGN, G)
    M = model.mass_matrix(flying_state(75.0))
    assert np.allclose(M, M.T)
    assert np.all(np.linalg.eigvalsh(M) > 0)


# ---------------------------------------------------------------- energy

def _energy_drift(design, y0, t_end, free_x=False):
    model = BipedModel(design, G, free_x=free_x)
    _, ys, _ = integrate(CompiledModel(model), 0.0, y0, t_end, rtol=1e-10, atol=1e-12)
    e0 = sum(model.energies(y0).values())
    e1 = sum(model.energies(ys[-1]).values())
    assert ys[-1][IDX_WORK_CONTACT] == 0.0
    return abs(e1 - e0) / abs(e0)


@settings(max_examples=5, deadline=None)
@given(st.floats(40.0, 100.0), st.integers(0, 1000))
def test_flight_energy_drift_one_second(alpha_deg, seed):
    """Zero torque, zero friction, no contact: 1 s of free flight conserves energy.

    With nothing holding them, the unloaded links would snap the spring shut
    and cross within a tenth of a second, so this run drops the spring and lets
    the legs coast slowly.
    """
    rng = np.random.default_rng(seed)
    y0 = flying_state(alpha_deg, z=50.0)
    y0[N_Q:N_Q + 2] = rng.normal(0, 1, 2)
    y0[N_Q + 2:2 * N_Q] = rng.normal(0, 0.2, 4)
    assert _energy_drift(LOSSLESS.with_stiffness(0.0), y0, 1.0, free_x=True) < 1e-6
    y0[N_Q] = 0.0  # x is held when not free; a sideways velocity would be fed by the constraint
    assert _energy_drift(LOSSLESS.with_stiffness(0.0), y0, 1.0) < 1e-6


@settings(max_examples=5, deadline=None)
@given(st.floats(40.0, 110.0), st.integers(0, 1000))
def test_flight_energy_drift_with_spring(alpha_deg, seed):
    # spring stretched: the legs swing shut within ~0.05 s, conserve energy on the way
    rng = np.random.default_rng(seed)
    y0 = flying_state(alpha_deg, z=50.0)
    y0[N_Q:N_Q + 2] = rng.normal(0, 1, 2)
    y0[N_Q + 2:2 * N_Q] = rng.normal(0, 0.5, 4)
    assert _energy_drift(LOSSLESS, y0, 0.03, free_x=True) < 1e-6
    y0[N_Q] = 0.0
    assert _energy_drift(LOSSLESS, y0, 0.03) < 1e-6


def test_work_accumulators_close_balance():
    """Motor torque and damping on: energy change equals accumulated work."""
    d = RobotDesign(motor=MotorConfig(viscous_damping=0.3, reflected_inertia=0.002),
                    joint_friction=0.05)
    model = BipedModel(d, G)
    model.torques[:] = (3.0, -2.0, 1.0, 0.5)
    fast = CompiledModel(model)
    y0 = flying_state(50.0, z=50.0)
    y0[N_Q + 2:2 * N_Q] = (1.0, -1.0, 0.5, 0.0)
    _, ys, _ = integrate(fast, 0.0, y0, 0.5, rtol=1e-10, atol=1e-12)
    y1 = ys[-1]
    de = sum(model.energies(y1).values()) - sum(model.energies(y0).values())
    work = y1[IDX_WORK_MOTOR] + y1[IDX_WORK_FRICTION] + y1[IDX_WORK_CONTACT]
    assert y1[IDX_WORK_FRICTION] < 0
    assert de == pytest.approx(work, abs=1e-7)


def test_free_fall_momentum_rate():
    model = BipedModel(LOSSLESS, G, free_x=True, pitch=math.radians(30.0))
    fast = CompiledModel(model)
    y0 = flying_state(40.0, z=50.0)
    y0[N_Q + 2:2 * N_Q] = (2.0, -1.0, 0.0, 1.0)
    _, ys, _ = integrate(fast, 0.0, y0, 0.03, rtol=1e-10, atol=1e-12)
    dp = model.momentum(ys[-1]) - model.momentum(y0)
    expected = 7.9 * 0.03 * np.array(model.gvec)
    assert np.allclose(dp, expected, atol=1e-7)
