"""Static hold torque over the squat range and the reachable paw set of one leg."""
import numpy as np

from leapsim import load_default, resting_poses
from leapsim.actuation import peak_squat_torque, static_torque_curve
from leapsim.jump import EARTH, MARS
from leapsim.kinematics import reference_workspace


def main():
    design = load_default().design

    alphas = np.arange(0.0, 121.0, 10.0)
    tau_e = static_torque_curve(design, EARTH, alphas)
    tau_m = static_torque_curve(design, MARS, alphas)
    print("squat deg   hold torque Earth   Mars (Nm per motor)")
    for a, te, tm in zip(alphas, tau_e, tau_m):
        print(f"  {a:5.0f}      {te:8.3f}        {tm:8.3f}")

    # zero crossings are where spring and weight balance with motors off
    for name, g in (("Earth", EARTH), ("Mars", MARS)):
        poses = ", ".join(f"{p:.2f}" for p in resting_poses(design, g))
        print(f"{name}: zero-torque poses at {poses} deg; "
              f"peak along the 120 deg ramp {peak_squat_torque(design, g, 120.0):.2f} Nm")

    cloud = reference_workspace(design.geom, hip_increment_deg=10.0, motor_step_deg=2.0)
    lo, hi = cloud.points.min(axis=0), cloud.points.max(axis=0)
    print(f"\nworkspace: {len(cloud.points)} boundary points over {len(cloud.hip_angles)} hip angles")
    for axis, a, b in zip("xyz", lo, hi):
        print(f"  {axis}: {a:+.3f} .. {b:+.3f} m")


if __name__ == "__main__":
    main()
