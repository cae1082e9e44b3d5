"""Coarse link-length and stiffness search on Mars, then the robust pick.

The full grid is available from ``leapsim optimize``; a 5 x 5 x 5 grid is enough
to see the shape of the landscape in well under a minute.
"""
import argparse

from leapsim import load_default
from leapsim.jump import MARS
from leapsim.optimizer import DesignSpace, grid_search, reference_grid_scenario, select_design


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-n", type=int, default=5, help="samples per axis")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    cfg = load_default()
    grid = grid_search(DesignSpace.coarse(args.n), reference_grid_scenario(MARS),
                       design=cfg.design, workers=args.workers)

    reasons = {}
    for c in grid.ordered():
        reasons[c.reason or "feasible"] = reasons.get(c.reason or "feasible", 0) + 1
    print(f"{len(grid)} cells: " + ", ".join(f"{v} {k}" for k, v in sorted(reasons.items())))

    print("\nbest apex per (l1, l3), over stiffness")
    best = {}
    for c in grid.ordered():
        if c.feasible and c.body_apex > best.get((c.l1, c.l3), (0.0,))[0]:
            best[(c.l1, c.l3)] = (c.body_apex, c.k)
    for (l1, l3), (apex, k) in sorted(best.items(), key=lambda kv: -kv[1][0])[:8]:
        print(f"  l1 {l1:.3f}  l3 {l3:.3f}  ratio {l1 / l3:.3f}  apex {apex:.3f} m at k {k:.0f}")

    raw = grid.argmax()
    o = cfg.optimizer
    sel = select_design(grid, o.k_window_N_m, o.torque_headroom, o.torque_saturation_Nm)
    print(f"\nraw argmax: l1 {raw.l1:.3f}, l3 {raw.l3:.3f}, k {raw.k:.0f}, apex {raw.body_apex:.3f} m")
    print(f"robust choice: l1 {sel.cell.l1:.3f}, l3 {sel.cell.l3:.3f} (ratio {sel.ratio:.3f}), "
          f"k {sel.cell.k:.0f}, worst apex within +/- {sel.k_window:.0f} N/m {sel.robust_apex:.3f} m")


if __name__ == "__main__":
    main()
