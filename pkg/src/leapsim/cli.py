"""Command-line entry point: ``leapsim <subcommand> [--config ...] [--out ...]``.

Exit codes: 0 success, 2 configuration error, 3 simulation failure,
4 no feasible design.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .actuation import resting_poses, static_torque_curve
from .config import Config, default_config_path, load_config, write_config
from .errors import ConfigInvariant, ConfigParse, LeapsimError, NoFeasibleDesign
from .jump import EARTH, MARS, JumpScenario
from .kinematics import reference_workspace
from .optimizer import DesignSpace, grid_search, reference_grid_scenario, select_design
from .suites import SUITES, RunManifest, calibrate, run_figure_suite, suite_scenarios

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIM = 3
EXIT_INFEASIBLE = 4


def parse_gravity(text: str) -> float:
    key = text.strip().lower()
    if key == "earth":
        return EARTH
    if key == "mars":
        return MARS
    try:
        g = float(key)
    except ValueError:
        raise argparse.ArgumentTypeError(f"gravity must be earth, mars or a number, got {text!r}")
    if not g > 0:
        raise argparse.ArgumentTypeError("gravity must be positive")
    return g


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="YAML configuration (default: shipped paper_biped.yaml)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--gravity", type=parse_gravity, default=None,
                   help="earth | mars | value in m/s^2")
    p.add_argument("--csv-only", action="store_true", help="skip SVG charts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leapsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sim", help="run one jump scenario")
    _common(p)
    p.add_argument("--scenario", help="scenario name from the config")
    p.add_argument("--torque", type=float, help="torque saturation [Nm]")
    p.add_argument("--squat", type=float, help="squat angle [deg]")
    p.add_argument("--pitch", type=float, help="thrust pitch [deg] (30 = forward jump)")
    p.add_argument("--spring-rating", type=float, help="spring stiffness override [N/m]")
    p.add_argument("--spring-interpretation", choices=("equivalent", "physical"))

    p = sub.add_parser("suite", help="run a reference scenario matrix")
    _common(p)
    p.add_argument("name", choices=SUITES)

    p = sub.add_parser("optimize", help="grid search over l1, l3 and k")
    _common(p)
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--coarse", type=int, default=None, metavar="N",
                   help="N samples per axis instead of the configured steps")

    p = sub.add_parser("workspace", help="sweep the reachable paw set")
    _common(p)
    p.add_argument("--hip-increment", type=float, default=2.5, help="hip step [deg]")
    p.add_argument("--motor-step", type=float, default=1.0, help="five-bar motor step [deg]")

    p = sub.add_parser("statics", help="static hold torque over the squat range")
    _common(p)
    p.add_argument("--step", type=float, default=0.5, help="angle step [deg]")

    p = sub.add_parser("calibrate", help="tune damping to the calibration jump")
    _common(p)
    p.add_argument("--write-config", type=Path, default=None,
                   help="save the calibrated configuration here")
    return parser


def _load(args) -> Config:
    return load_config(args.config or default_config_path())


def _gravity(args, default: float) -> float:
    return args.gravity if args.gravity is not None else default


def cmd_sim(args, cfg: Config) -> int:
    if args.scenario:
        try:
            sc = cfg.scenario(args.scenario)
        except KeyError:
            print(f"error: no scenario named {args.scenario!r} in the config", file=sys.stderr)
            return EXIT_CONFIG
    else:
        sc = JumpScenario(name="sim", torque_saturation=cfg.design.motor.torque_saturation)
    changes = {}
    if args.gravity is not None:
        changes["gravity"] = args.gravity
    if args.torque is not None:
        changes["torque_saturation"] = args.torque
    if args.squat is not None:
        changes["squat_angle_deg"] = args.squat
    if args.pitch is not None:
        changes["pitch_deg"] = args.pitch
    if args.spring_rating is not None:
        changes["spring_rating"] = args.spring_rating
    if args.spring_interpretation is not None:
        changes["spring_interpretation"] = args.spring_interpretation
    try:
        sc = replace(sc, **changes)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    results = run_figure_suite(sc.name, RunManifest(cfg.design, (sc,), args.out, args.csv_only))
    r = results[0]
    if r.no_liftoff:
        print(f"{sc.name}: no liftoff ({r.reason}); body stays at {r.body_apex:.3f} m")
    else:
        print(f"{sc.name}: body apex {r.body_apex:.3f} m, paw clearance {r.paw_clearance:.3f} m, "
              f"liftoff {r.liftoff_velocity:.3f} m/s at t = {r.liftoff_time:.3f} s"
              + (f", range {r.range:.3f} m" if sc.is_forward else ""))
    return EXIT_OK


def cmd_suite(args, cfg: Config) -> int:
    gravities = (args.gravity,) if args.gravity is not None else (EARTH, MARS)
    scenarios = suite_scenarios(args.name, gravities)
    results = run_figure_suite(args.name, RunManifest(cfg.design, tuple(scenarios), args.out,
                                                      args.csv_only))
    for r in results:
        print(f"{r.scenario.name:34s} apex {r.body_apex:7.3f} m  range {r.range:7.3f} m"
              + ("  (no liftoff)" if r.no_liftoff else ""))
    print(f"wrote {args.out / (args.name + '.csv')}")
    return EXIT_OK


def cmd_optimize(args, cfg: Config) -> int:
    o = cfg.optimizer
    if args.coarse:
        n = args.coarse
        if n < 2:
            print("error: --coarse needs at least 2 samples per axis", file=sys.stderr)
            return EXIT_CONFIG
        space = DesignSpace(o.l1_range_m, o.l3_range_m, o.k_range_N_m,
                            (o.l1_range_m[1] - o.l1_range_m[0]) / (n - 1) or 1.0,
                            (o.l3_range_m[1] - o.l3_range_m[0]) / (n - 1) or 1.0,
                            (o.k_range_N_m[1] - o.k_range_N_m[0]) / (n - 1) or 1.0,
                            cfg.design.geom.l0)
    else:
        space = DesignSpace(o.l1_range_m, o.l3_range_m, o.k_range_N_m, o.l1_step_m,
                            o.l3_step_m, o.k_step_N_m, cfg.design.geom.l0)
    g = _gravity(args, o.gravity_m_s2)
    sc = replace(reference_grid_scenario(g), torque_saturation=o.torque_saturation_Nm,
                 squat_angle_deg=o.squat_angle_deg)
    grid = grid_search(space, sc, design=cfg.design, workers=args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    grid.write_csv(args.out / "grid.csv")
    print(f"{len(grid)} cells, {len(grid.feasible_cells())} feasible; wrote {args.out / 'grid.csv'}")
    sel = select_design(grid, o.k_window_N_m, o.torque_headroom, o.torque_saturation_Nm)
    best = grid.argmax()
    c = sel.cell
    print(f"robust choice: l1 = {c.l1:.3f} m, l3 = {c.l3:.3f} m, k = {c.k:.0f} N/m "
          f"(l1/l3 = {sel.ratio:.3f}, apex {c.body_apex:.3f} m, worst in window {sel.robust_apex:.3f} m)")
    print(f"raw argmax:    l1 = {best.l1:.3f} m, l3 = {best.l3:.3f} m, k = {best.k:.0f} N/m "
          f"(apex {best.body_apex:.3f} m)")
    return EXIT_OK


def cmd_workspace(args, cfg: Config) -> int:
    cloud = reference_workspace(cfg.design.geom, args.hip_increment, args.motor_step)
    args.out.mkdir(parents=True, exist_ok=True)
    path = cloud.write_csv(args.out / "workspace.csv")
    print(f"{len(cloud.points)} points over {len(cloud.hip_angles)} hip angles; wrote {path}")
    return EXIT_OK


def cmd_statics(args, cfg: Config) -> int:
    g = _gravity(args, EARTH)
    alphas = np.arange(0.0, 120.0 + 1e-9, args.step)
    tau = static_torque_curve(cfg.design, g, alphas)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / "statics.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha_deg", "hold_torque_Nm"])
        for a, t in zip(alphas, tau):
            w.writerow([f"{a:.9g}", f"{t:.9g}"])
    poses = resting_poses(cfg.design, g)
    print("zero-torque poses [deg]: " + (", ".join(f"{p:.2f}" for p in poses) or "none"))
    print(f"peak |hold torque| {float(np.max(np.abs(tau))):.2f} Nm; wrote {path}")
    return EXIT_OK


def cmd_calibrate(args, cfg: Config) -> int:
    settings = cfg.calibration
    if args.gravity is not None:
        settings = replace(settings, gravity_m_s2=args.gravity)
    res = calibrate(cfg.design, settings)
    print(f"viscous_damping_Nm_s_rad: {res.viscous_damping:.6g}")
    print(f"joint_friction_Nm_s_rad: {res.joint_friction:.6g}")
    print(f"apex {res.body_apex:.4f} m (target {settings.target_apex_m} m), "
          f"paw clearance {res.paw_clearance:.3f} m (target {settings.target_clearance_m} m)")
    if args.write_config:
        write_config(replace(cfg, design=res.design), args.write_config)
        print(f"wrote {args.write_config}")
    return EXIT_OK


COMMANDS = {"sim": cmd_sim, "suite": cmd_suite, "optimize": cmd_optimize,
            "workspace": cmd_workspace, "statics": cmd_statics, "calibrate": cmd_calibrate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except (ConfigParse, ConfigInvariant) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args, cfg)
    except NoFeasibleDesign as exc:
        print(f"no feasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigParse, ConfigInvariant) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LeapsimError, ValueError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIM


if __name__ == "__main__":
    sys.exit(main())
