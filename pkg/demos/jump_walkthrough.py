"""Walk through one calibrated vertical jump, phase by phase.

Runs the reference experiment (18 Nm, 115 deg squat) on the shipped design and
prints the event timeline, the headline numbers and the stance energy balance.
"""
import argparse

import numpy as np

from leapsim import load_default, simulate_jump


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="experiment_18Nm_115deg")
    ap.add_argument("--csv", help="write the trajectory here")
    args = ap.parse_args()

    cfg = load_default()
    res = simulate_jump(cfg.design, cfg.scenario(args.scenario))

    print(f"scenario {res.scenario.name}: g = {res.scenario.gravity} m/s^2, "
          f"saturation {res.scenario.torque_saturation} Nm, squat {res.scenario.squat_angle_deg} deg")
    print("\nevents")
    for name, t, z in res.events:
        print(f"  {t:7.4f} s  {name:<18} body at {z:.4f} m")

    # the squat hold is where the motors fight both gravity and the spring
    tau = np.abs(np.asarray(res.trajectory.tau1))
    # the PID overshoots the squat setpoint a little and settles back during the hold
    thrust_t = next(t for name, t, _ in res.events if name == "thrust")
    at_thrust = res.trajectory.alpha1[res.trajectory.t.index(thrust_t)]
    print(f"\npeak commanded torque {tau.max():.2f} Nm; squat deepest {res.min_squat_deg:.1f} deg, "
          f"{at_thrust:.1f} deg at thrust")
    print(f"liftoff at {res.liftoff_time:.4f} s, {res.liftoff_height:.4f} m, "
          f"vz {res.liftoff_vz:.3f} m/s")
    print(f"body apex {res.body_apex:.4f} m, paw clearance {res.paw_clearance:.4f} m")

    # flight is ballistic, so the apex gain is fixed by the liftoff velocity
    g = res.scenario.gravity
    print(f"apex gain {res.body_apex - res.liftoff_height:.6f} m vs "
          f"v^2/2g {res.liftoff_vz ** 2 / (2 * g):.6f} m")

    e = res.energy
    print("\nstance energy balance (J)")
    print(f"  mechanical energy change {e.at_liftoff - e.initial:9.4f}")
    print(f"  motor work               {e.motor_work:9.4f}")
    print(f"  friction work            {e.friction_work:9.4f}")
    print(f"  contact work             {e.contact_work:9.4f}")
    print(f"  residual / peak KE       {e.relative_residual:9.2e}")
    print(f"  lost to leg lock         {e.lock_loss:9.4f}")

    if args.csv:
        res.write_trajectory_csv(args.csv)
        print(f"\ntrajectory written to {args.csv}")


if __name__ == "__main__":
    main()
