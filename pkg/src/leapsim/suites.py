"""Batch runners for the reference scenario matrices and the damping calibration."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path

from scipy.optimize import brentq

from .config import CalibrationSettings, Config
from .design import RobotDesign
from .jump import EARTH, MARS, JumpResult, JumpScenario, simulate_jump

SUMMARY_HEADER = ("scenario", "gravity_m_s2", "torque_saturation_Nm", "squat_angle_deg",
                  "pitch_deg", "k_eq_N_m", "body_apex_m", "apex_gain_m", "paw_clearance_m",
                  "liftoff_velocity_m_s", "liftoff_time_s", "apex_time_s", "range_m",
                  "no_liftoff", "reason")

# torque/squat pairs named in the source text (Nm, deg)
NAMED_SETTINGS = ((14.4, 90.0), (18.0, 90.0), (21.6, 90.0), (18.0, 115.0),
                  (22.5, 120.0), (24.8, 120.0))
EXPERIMENT_SETTINGS = ((14.4, 90.0), (18.0, 90.0), (21.6, 90.0), (18.0, 115.0))
EXPERIMENT_APEX_M = {(14.4, 90.0): 0.92, (18.0, 90.0): 1.01, (21.6, 90.0): 1.07,
                     (18.0, 115.0): 1.141}
SUITES = ("fig5_vertical", "fig6_forward", "fig8_experiments")


def _tag(value: float) -> str:
    return f"{value:g}".replace(".", "p")


def _gravity_tag(g: float) -> str:
    if g == EARTH:
        return "earth"
    if g == MARS:
        return "mars"
    return "g" + _tag(g)


def suite_scenarios(name: str, gravities=(EARTH, MARS)) -> list[JumpScenario]:
    """Fixed scenario matrix of a named suite."""
    if name == "fig5_vertical":
        return [JumpScenario(f"vertical_{_gravity_tag(g)}_{_tag(t)}Nm_{_tag(a)}deg", g, t, a)
                for g in gravities for t, a in NAMED_SETTINGS]
    if name == "fig6_forward":
        return [JumpScenario(f"forward_{_gravity_tag(g)}_{_tag(t)}Nm_{_tag(a)}deg", g, t, a,
                             pitch_deg=30.0)
                for g in gravities for t, a in NAMED_SETTINGS]
    if name == "fig8_experiments":
        return [JumpScenario(f"experiment_{_tag(t)}Nm_{_tag(a)}deg", EARTH, t, a)
                for t, a in EXPERIMENT_SETTINGS]
    raise ValueError(f"unknown suite '{name}', expected one of {', '.join(SUITES)}")


@dataclass
class RunManifest:
    """Everything a suite run depends on. Runs are deterministic, no seeds."""

    design: RobotDesign
    scenarios: tuple[JumpScenario, ...] | None = None
    out_dir: Path | None = None
    csv_only: bool = False
    write_trajectories: bool = True


def summary_row(res: JumpResult, design: RobotDesign) -> list[str]:
    sc = res.scenario
    f = lambda v: f"{v:.9g}"
    return [sc.name, f(sc.gravity), f(sc.torque_saturation), f(sc.squat_angle_deg),
            f(sc.pitch_deg), f(sc.effective_stiffness(design)), f(res.body_apex),
            f(res.apex_gain), f(res.paw_clearance), f(res.liftoff_velocity),
            f(res.liftoff_time), f(res.apex_time), f(res.range), int(res.no_liftoff), res.reason]


def write_summary(rows, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(rows)


def run_scenarios(manifest: RunManifest, summary_name: str = "summary") -> list[JumpResult]:
    results = []
    rows = []
    out = manifest.out_dir
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    for sc in manifest.scenarios or ():
        res = simulate_jump(manifest.design, sc, record=manifest.write_trajectories)
        results.append(res)
        rows.append(summary_row(res, manifest.design))
        if out is not None and manifest.write_trajectories:
            res.write_trajectory_csv(out / f"{sc.name}_trajectory.csv")
            res.write_events_csv(out / f"{sc.name}_events.csv")
    if out is not None:
        summary = out / f"{summary_name}.csv"
        write_summary(rows, summary)
        if not manifest.csv_only:
            from .plotting import render_summary_plot
            render_summary_plot(summary, out / f"{summary_name}.svg")
    return results


def run_figure_suite(name: str, manifest: RunManifest) -> list[JumpResult]:
    """Run a named suite; ``manifest.scenarios`` is replaced by the suite matrix
    unless it was given explicitly (an empty tuple gives a header-only summary)."""
    scenarios = manifest.scenarios if manifest.scenarios is not None else suite_scenarios(name)
    return run_scenarios(replace(manifest, scenarios=tuple(scenarios)), summary_name=name)


# ---------------------------------------------------------------------------
# calibration


@dataclass(frozen=True)
class CalibrationResult:
    viscous_damping: float
    joint_friction: float
    body_apex: float
    paw_clearance: float
    design: RobotDesign


def calibrated_design(design: RobotDesign, damping: float, ratio: float) -> RobotDesign:
    motor = replace(design.motor, viscous_damping=damping)
    return replace(design, motor=motor, joint_friction=ratio * damping)


def calibrate(design: RobotDesign, settings: CalibrationSettings | None = None,
              xtol: float = 1e-6) -> CalibrationResult:
    """Tune motor damping (joint friction tied to it by a fixed ratio) so the
    calibration scenario reaches the target apex."""
    s = settings or CalibrationSettings()
    sc = JumpScenario("calibration", s.gravity_m_s2, s.torque_saturation_Nm, s.squat_angle_deg)

    def miss(b: float) -> float:
        d = calibrated_design(design, b, s.joint_friction_ratio)
        return simulate_jump(d, sc, record=False).body_apex - s.target_apex_m

    lo, hi = s.damping_bracket_Nm_s_rad
    f_lo, f_hi = miss(lo), miss(hi)
    if f_lo < 0 or f_hi > 0:
        raise ValueError(
            f"target {s.target_apex_m} m not bracketed by damping {lo}..{hi} Nm s/rad "
            f"(apex misses {f_lo:+.3f}, {f_hi:+.3f} m)")
    b = brentq(miss, lo, hi, xtol=xtol)
    d = calibrated_design(design, b, s.joint_friction_ratio)
    res = simulate_jump(d, sc, record=False)
    return CalibrationResult(b, s.joint_friction_ratio * b, float(res.body_apex),
                             float(res.paw_clearance), d)


def apply_calibration(cfg: Config, result: CalibrationResult) -> Config:
    return replace(cfg, design=result.design)


def experiment_errors(results: list[JumpResult]) -> dict[tuple[float, float], float]:
    """Relative apex error of each experiment-matrix run against the measured height."""
    out = {}
    for r in results:
        key = (r.scenario.torque_saturation, r.scenario.squat_angle_deg)
        if key in EXPERIMENT_APEX_M and not math.isnan(r.body_apex):
            out[key] = r.body_apex / EXPERIMENT_APEX_M[key] - 1.0
    return out
