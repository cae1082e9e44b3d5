"""Same robot, two planets: vertical maxima and the 30 deg forward jump on Mars."""
from dataclasses import replace

from leapsim import EARTH, MARS, load_default, simulate_jump


def main():
    cfg = load_default()
    design = cfg.design

    earth = simulate_jump(design, cfg.scenario("max_earth"), record=False)
    mars = simulate_jump(design, cfg.scenario("max_mars"), record=False)
    print(f"full torque, 120 deg squat: Earth {earth.body_apex:.3f} m, Mars {mars.body_apex:.3f} m, "
          f"ratio {mars.body_apex / earth.body_apex:.2f} (gravity ratio {EARTH / MARS:.2f})")

    # the two readings of an 870 N/m spring rating
    for interp in ("equivalent", "physical"):
        e = simulate_jump(design, cfg.scenario(f"performant_{interp}_earth"), record=False)
        m = simulate_jump(design, cfg.scenario(f"performant_{interp}_mars"), record=False)
        k = e.scenario.effective_stiffness(design)
        print(f"870 N/m read as {interp:<10} (k_eq {k:.0f} N/m): "
              f"Earth {e.body_apex:.3f} m, Mars {m.body_apex:.3f} m")

    fwd = simulate_jump(design, cfg.scenario("forward_mars"), record=False)
    print(f"\nforward jump on Mars, thrust pitched {fwd.scenario.pitch_deg:g} deg: "
          f"range {fwd.range:.3f} m, apogee {fwd.body_apex:.3f} m, "
          f"flight {fwd.touchdown_time - fwd.liftoff_time:.3f} s")

    # weaker motors: where does the jump stop being worth it
    print("\nMars apex vs torque saturation")
    for sat in (6.0, 10.0, 14.4, 18.0, 21.6, 24.8):
        r = simulate_jump(design, replace(cfg.scenario("max_mars"), torque_saturation=sat),
                          record=False)
        label = "no liftoff" if r.no_liftoff else f"{r.body_apex:.3f} m"
        print(f"  {sat:5.1f} Nm  {label}")


if __name__ == "__main__":
    main()
