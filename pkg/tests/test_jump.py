import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from leapsim.integrator import DormandPrince, Event
from leapsim.jump import (EARTH, EVENTS_HEADER, MARS, PHASE_ORDER, TRAJECTORY_HEADER,
                          JumpScenario, simulate_forward_jump, simulate_jump)
from leapsim.kinematics import leg_reach
from leapsim.model import N_Q, BipedModel

REGRESSION = ("experiment_18Nm_115deg", "experiment_14p4Nm_90deg", "experiment_18Nm_90deg",
              "experiment_21p6Nm_90deg", "max_earth", "max_mars", "forward_mars",
              "forward_earth", "performant_equivalent_earth", "performant_physical_mars")


@pytest.mark.parametrize("name", REGRESSION)
def test_ballistic_identity(run, name):
    r = run(name)
    assert not r.no_liftoff
    g = r.scenario.gravity
    tol = 2 * (1e-8 + 1e-6 * abs(r.body_apex))
    assert r.body_apex - r.liftoff_height == pytest.approx(r.liftoff_vz ** 2 / (2 * g), abs=tol)
    assert r.body_apex >= r.standing_height


@pytest.mark.parametrize("name", ("max_earth", "experiment_18Nm_115deg"))
def test_phase_and_event_order(run, name):
    r = run(name)
    idx = [PHASE_ORDER.index(p) for p in r.trajectory.phase]
    assert idx == sorted(idx)
    assert r.trajectory.phase[0] == "stand" and r.trajectory.phase[-1] == "landed"
    names = [e[0] for e in r.events]
    assert names == ["thrust", "liftoff", "apex", "touchdown"]
    times = [e[1] for e in r.events]
    assert times == sorted(times)
    assert r.liftoff_time < r.apex_time < r.touchdown_time


def test_protocol_timing(run):
    r = run("max_earth")
    t, ph = np.array(r.trajectory.t), r.trajectory.phase
    first = {p: t[ph.index(p)] for p in ("squat_ramp", "hold", "thrust")}
    assert first["squat_ramp"] == pytest.approx(0.5)
    assert first["hold"] == pytest.approx(1.8)
    assert first["thrust"] == pytest.approx(2.3)
    ramp = [a for a, p in zip(r.trajectory.alpha1, ph) if p == "hold"]
    assert max(ramp) > 115.0  # the squat is actually reached


def test_contact_unilateral_and_zero_in_flight(run):
    r = run("max_earth")
    contact = np.array(r.trajectory.contact)
    assert np.all(contact >= 0.0)
    flight = [c for c, p in zip(contact, r.trajectory.phase) if p in ("flight", "landed")]
    assert flight and all(c == 0.0 for c in flight)


def test_torques_saturated(run):
    r = run("experiment_18Nm_90deg")
    assert r.peak_torque <= 18.0
    assert r.peak_torque == pytest.approx(18.0)


def test_gravity_monotonicity(run):
    assert run("max_mars").body_apex > run("max_earth").body_apex


def test_torque_monotonicity(run, design):
    apexes = [run(n).body_apex for n in ("experiment_14p4Nm_90deg", "experiment_18Nm_90deg",
                                         "experiment_21p6Nm_90deg")]
    apexes.append(simulate_jump(design, JumpScenario("t24", EARTH, 24.8, 90.0),
                                record=False).body_apex)
    assert all(b >= a for a, b in zip(apexes, apexes[1:]))


def test_squat_monotonicity(run):
    assert run("experiment_18Nm_115deg").body_apex > run("experiment_18Nm_90deg").body_apex


def test_stiffer_spring_jumps_higher(run):
    assert run("performant_equivalent_earth").body_apex > run("max_earth").body_apex


def test_spring_interpretations(run, design):
    phys = run("performant_physical_earth")
    assert phys.scenario.effective_stiffness(design) == 435.0
    assert phys.body_apex == run("max_earth").body_apex


def test_determinism(design):
    sc = JumpScenario("det", EARTH, 18.0, 90.0)
    a = simulate_jump(design, sc)
    b = simulate_jump(design, sc)
    assert a.trajectory == b.trajectory
    assert a.events == b.events
    assert a.body_apex == b.body_apex


def test_paw_clearance_definition(run, design):
    r = run("experiment_18Nm_115deg")
    reach = leg_reach(math.radians(17.5), design.geom)
    assert r.paw_clearance == pytest.approx(r.body_apex - reach, abs=1e-12)


def test_no_liftoff_is_flagged(design):
    r = simulate_jump(design, JumpScenario("weak", EARTH, 2.0, 90.0))
    assert r.no_liftoff and not r.feasible
    assert r.reason in ("squat_not_reached", "standup_failed", "no_liftoff")
    assert r.body_apex == r.standing_height
    assert r.energy is None
    assert [e[0] for e in r.events] == ["thrust"]


def test_zero_pitch_forward_matches_vertical(design):
    sc = JumpScenario("v", EARTH, 24.8, 120.0)
    vert = simulate_jump(design, sc, record=False)
    fwd = simulate_forward_jump(design, sc, record=False)
    assert fwd.body_apex == pytest.approx(vert.body_apex, abs=1e-4)
    assert abs(fwd.range - vert.range) < 1e-4


def test_forward_jump_moves_forward(run):
    r = run("forward_mars")
    assert r.range > 1.0
    assert r.liftoff_velocity > r.liftoff_vz > 0


def _world(pitch, v):
    # model frame axes expressed in the world frame
    ex = (math.cos(pitch), -math.sin(pitch))
    ez = (math.sin(pitch), math.cos(pitch))
    return v[0] * ex[0] + v[1] * ez[0], v[0] * ex[1] + v[1] * ez[1]


@pytest.mark.parametrize("name", ("forward_mars", "forward_earth", "max_earth"))
def test_projectile_oracle(run, design, name):
    """Integrate the locked biped numerically from the liftoff state and compare."""
    r = run(name)
    sc = r.scenario
    d = sc.apply(design)
    p = sc.pitch
    model = BipedModel(d, sc.gravity, pitch=p, free_x=True, legs_locked=True)
    stand = math.radians(sc.stand_setpoint_deg)
    ref = BipedModel(d, sc.gravity)
    paw0 = ref.leg_state(stand, stand, 0.0, 0.0).paw
    y = r.final_state.y.copy()
    origin = (paw0[0], 0.0)
    legs = model.legs(y)
    paws = [leg.paw for leg in legs]

    def body_world(yy):
        return _world(p, (yy[0] - origin[0], yy[1] - origin[1]))

    def lowest_paw(yy):
        pts = [_world(p, (yy[0] - origin[0] + px, yy[1] + pz)) for px, pz in paws]
        return min(pts, key=lambda q: q[1])

    apex_ev = Event("apex", lambda t, yy: _world(p, (yy[N_Q], yy[N_Q + 1]))[1], -1)
    land_ev = Event("land", lambda t, yy: lowest_paw(yy)[1], -1)
    solver = DormandPrince(1e-10, 1e-12)
    t, y, ev = solver.advance(model, 0.0, y, 100.0, [apex_ev])
    assert ev is apex_ev
    assert body_world(y)[1] == pytest.approx(r.body_apex, abs=1e-6)
    assert t == pytest.approx(r.apex_time - r.liftoff_time, abs=1e-6)
    t, y, ev = solver.advance(model, t, y, 100.0, [land_ev])
    assert ev is land_ev
    assert lowest_paw(y)[0] == pytest.approx(r.range, abs=1e-6)
    assert t == pytest.approx(r.touchdown_time - r.liftoff_time, abs=1e-6)


def test_liftoff_momentum_transfer(run):
    r = run("max_earth")
    # the body leaves with the centre-of-mass velocity of the whole biped
    assert r.energy.lock_loss >= -1e-9
    assert r.liftoff_vz == pytest.approx(r.final_state.y[N_Q + 1])


def test_stance_energy_ledger_closes(run):
    r = run("experiment_18Nm_115deg")
    assert r.energy.relative_residual < 5e-3
    assert r.energy.motor_work > 0 and r.energy.friction_work < 0


def test_csv_outputs(run, tmp_path):
    r = run("experiment_18Nm_90deg")
    r.write_trajectory_csv(tmp_path / "t.csv")
    r.write_events_csv(tmp_path / "e.csv")
    with open(tmp_path / "t.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == TRAJECTORY_HEADER
    assert ",".join(TRAJECTORY_HEADER) == ("t_s,x_b_m,z_b_m,vz_b_m_s,alpha1_deg,alpha2_deg,"
                                           "tau1_Nm,tau2_Nm,spring_N,contact_N,phase")
    assert len(rows) == len(r.trajectory) + 1
    with open(tmp_path / "e.csv") as fh:
        ev = list(csv.reader(fh))
    assert tuple(ev[0]) == EVENTS_HEADER == ("event", "t_s", "z_b_m")
    assert [e[0] for e in ev[1:]] == ["thrust", "liftoff", "apex", "touchdown"]


@pytest.mark.parametrize("kw", [dict(gravity=0.0), dict(torque_saturation=30.0),
                                dict(squat_angle_deg=130.0), dict(squat_angle_deg=10.0),
                                dict(spring_interpretation="both"), dict(pitch_deg=80.0),
                                dict(spring_rating=-5.0), dict(forward_mode="hop")])
def test_invalid_scenarios(kw):
    with pytest.raises(ValueError):
        JumpScenario(**kw)


def test_scenario_stiffness_override(design):
    assert JumpScenario(spring_rating=870.0).effective_stiffness(design) == 870.0
    sc = JumpScenario(spring_rating=870.0, spring_interpretation="physical")
    assert sc.effective_stiffness(design) == 435.0
    assert JumpScenario().apply(design).spring.k_eq == design.spring.k_eq
    assert replace(JumpScenario(), gravity=MARS).gravity == MARS
