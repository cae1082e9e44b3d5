"""Grid search over hip length, calf length and spring stiffness.

Each cell is screened statically first (closure along the squat, static hold
torque against the saturation) and only survivors are simulated. Cells are
independent, so they can be farmed out to worker processes; results are
assembled by cell key and never depend on completion order.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .actuation import peak_squat_torque
from .design import RobotDesign
from .errors import LeapsimError, NoFeasibleDesign
from .jump import JumpScenario, simulate_jump
from .kinematics import ControlAngles, LegGeometry, configure, paw_position

GRID_HEADER = ("l1_m", "l3_m", "k_N_m", "gravity_m_s2", "body_apex_m", "paw_clearance_m",
               "feasible", "reason", "squat_torque_peak_Nm")

# reason codes
SQUAT_UNREACHABLE = "squat_unreachable"
TORQUE_EXCEEDS_SATURATION = "squat_torque_exceeds_saturation"
STANDUP_FAILED = "standup_failed"
NO_LIFTOFF = "no_liftoff"
SQUAT_NOT_REACHED = "squat_not_reached"
SIMULATION_FAILED = "simulation_failed"


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(n), 10)


@dataclass(frozen=True)
class DesignSpace:
    l1_range: tuple[float, float] = (0.10, 0.30)
    l3_range: tuple[float, float] = (0.15, 0.45)
    k_range: tuple[float, float] = (600.0, 1000.0)
    l1_step: float = 0.02
    l3_step: float = 0.03
    k_step: float = 50.0
    l0: float = 0.09

    def __post_init__(self):
        if min(self.l1_step, self.l3_step, self.k_step) <= 0:
            raise ValueError("grid steps must be positive")
        for lo, hi in (self.l1_range, self.l3_range, self.k_range):
            if not 0 < lo <= hi:
                raise ValueError("ranges must be positive and ordered")

    @property
    def l1_values(self) -> np.ndarray:
        return _axis(*self.l1_range, self.l1_step)

    @property
    def l3_values(self) -> np.ndarray:
        return _axis(*self.l3_range, self.l3_step)

    @property
    def k_values(self) -> np.ndarray:
        return _axis(*self.k_range, self.k_step)

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.l1_values), len(self.l3_values), len(self.k_values)

    def cells(self):
        for l1 in self.l1_values:
            for l3 in self.l3_values:
                for k in self.k_values:
                    yield float(l1), float(l3), float(k)

    @classmethod
    def coarse(cls, n: int = 5) -> "DesignSpace":
        """``n`` samples per axis over the default ranges."""
        base = cls()
        return cls(l1_step=(base.l1_range[1] - base.l1_range[0]) / (n - 1),
                   l3_step=(base.l3_range[1] - base.l3_range[0]) / (n - 1),
                   k_step=(base.k_range[1] - base.k_range[0]) / (n - 1))

    @classmethod
    def single(cls, l1: float, l3: float, k: float, l0: float = 0.09) -> "DesignSpace":
        return cls((l1, l1), (l3, l3), (k, k), 1.0, 1.0, 1.0, l0)


@dataclass
class CellResult:
    l1: float
    l3: float
    k: float
    body_apex: float
    paw_clearance: float
    feasible: bool
    reason: str
    squat_torque_peak: float

    @property
    def key(self) -> tuple[float, float, float]:
        return (self.l1, self.l3, self.k)


@dataclass
class DesignGrid:
    gravity: float
    space: DesignSpace
    cells: dict[tuple[float, float, float], CellResult] = field(default_factory=dict)

    def __len__(self):
        return len(self.cells)

    def feasible_cells(self) -> list[CellResult]:
        return [c for c in self.ordered() if c.feasible]

    def ordered(self) -> list[CellResult]:
        return [self.cells[k] for k in sorted(self.cells)]

    def argmax(self) -> CellResult:
        """Raw best feasible cell by apex, ignoring robustness."""
        feas = self.feasible_cells()
        if not feas:
            raise NoFeasibleDesign("no feasible cell in the grid")
        return max(feas, key=lambda c: (c.body_apex, -c.l1))

    def write_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(GRID_HEADER)
            for c in self.ordered():
                w.writerow([f"{c.l1:.9g}", f"{c.l3:.9g}", f"{c.k:.9g}", f"{self.gravity:.9g}",
                            f"{c.body_apex:.9g}", f"{c.paw_clearance:.9g}",
                            int(c.feasible), c.reason, f"{c.squat_torque_peak:.9g}"])


# ---------------------------------------------------------------------------


def squat_reachable(geom: LegGeometry, stand_deg: float, squat_deg: float,
                    margin_deg: float = 5.0, step_deg: float = 0.5) -> bool:
    """Closure holds, the calves stay non-colinear and the paw stays below the hips
    over the whole squat ramp (plus a small overshoot margin)."""
    alphas = np.arange(stand_deg, squat_deg + margin_deg + 1e-9, step_deg)
    for a in alphas:
        try:
            cfg = configure(ControlAngles.from_degrees(float(a)), geom)
        except LeapsimError:
            return False
        _, pz = paw_position(cfg, geom)
        if pz >= -0.25 * geom.l3:
            return False
        r1 = (math.cos(cfg.theta3), math.sin(cfg.theta3))
        r2 = (math.cos(cfg.theta4), math.sin(cfg.theta4))
        if abs(r1[0] * r2[1] - r1[1] * r2[0]) < 0.05:
            return False
    return True


def evaluate_cell(design: RobotDesign, scenario: JumpScenario, l1: float, l3: float,
                  k: float, screen: bool = True) -> CellResult:
    """Screen and, if it survives, simulate one cell."""
    d = design.with_links(l1, l3).with_stiffness(k)
    sc = replace(scenario, spring_rating=None)
    stand = sc.stand_setpoint_deg
    if not squat_reachable(d.geom, stand, sc.squat_angle_deg):
        return CellResult(l1, l3, k, math.nan, math.nan, False, SQUAT_UNREACHABLE, math.nan)
    peak = peak_squat_torque(d, sc.gravity, sc.squat_angle_deg, stand)
    if screen and peak > sc.torque_saturation:
        return CellResult(l1, l3, k, math.nan, math.nan, False, TORQUE_EXCEEDS_SATURATION, peak)
    try:
        res = simulate_jump(d, sc, record=False)
    except LeapsimError as exc:
        return CellResult(l1, l3, k, math.nan, math.nan, False,
                          f"{SIMULATION_FAILED}:{type(exc).__name__}", peak)
    if res.no_liftoff:
        reason = res.reason
        if reason == "no_liftoff" and peak > sc.torque_saturation:
            reason = TORQUE_EXCEEDS_SATURATION
        return CellResult(l1, l3, k, float(res.body_apex), float(res.paw_clearance), False,
                          reason, peak)
    if not res.squat_reached:
        # a hop from a shallow crouch: the motors could not pull the squat down
        return CellResult(l1, l3, k, float(res.body_apex), float(res.paw_clearance), False,
                          SQUAT_NOT_REACHED, peak)
    return CellResult(l1, l3, k, float(res.body_apex), float(res.paw_clearance), True, "", peak)


def _evaluate_star(args):
    return evaluate_cell(*args)


def grid_search(space: DesignSpace, scenario: JumpScenario, gravity: float | None = None,
                design: RobotDesign | None = None, workers: int | None = None,
                screen: bool = True) -> DesignGrid:
    """Evaluate every cell of ``space``.

    ``workers`` > 1 fans cells out over processes; ``None`` uses every core.
    """
    design = design or RobotDesign()
    if gravity is not None:
        scenario = replace(scenario, gravity=gravity)
    jobs = [(design, scenario, l1, l3, k, screen) for l1, l3, k in space.cells()]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_star, jobs, chunksize=8))
    else:
        results = [_evaluate_star(j) for j in jobs]
    grid = DesignGrid(scenario.gravity, space)
    for r in results:
        grid.cells[r.key] = r
    return grid


def feasibility(cell: CellResult, design: RobotDesign, saturation: float) -> tuple[bool, str]:
    """Re-derive the verdict of a cell from its numbers and the motor limit."""
    if cell.reason == SQUAT_UNREACHABLE:
        return False, SQUAT_UNREACHABLE
    if cell.squat_torque_peak > saturation:
        return False, TORQUE_EXCEEDS_SATURATION
    if not cell.feasible:
        return False, cell.reason or NO_LIFTOFF
    return True, ""


@dataclass(frozen=True)
class Selection:
    cell: CellResult
    robust_apex: float
    k_window: float
    torque_headroom: float

    @property
    def ratio(self) -> float:
        return self.cell.l1 / self.cell.l3


def select_design(grid: DesignGrid, k_window: float = 100.0, torque_headroom: float = 0.2,
                  saturation: float | None = None) -> Selection:
    """Pick the cell whose worst apex across ``k +/- k_window`` is largest.

    Only cells whose peak static squat torque stays under
    ``(1 - torque_headroom) * saturation`` compete; infeasible neighbours in
    the stiffness window count as zero height.
    """
    if saturation is None:
        saturation = 22.5
    limit = (1.0 - torque_headroom) * saturation
    by_links: dict[tuple[float, float], list[CellResult]] = {}
    for c in grid.ordered():
        by_links.setdefault((c.l1, c.l3), []).append(c)
    best = None
    best_key = None
    for c in grid.ordered():
        if not c.feasible or not c.squat_torque_peak <= limit + 1e-12:
            continue
        window = [n for n in by_links[(c.l1, c.l3)] if abs(n.k - c.k) <= k_window + 1e-9]
        robust = min(n.body_apex if n.feasible else 0.0 for n in window)
        key = (robust, c.body_apex, -c.l1)
        if best_key is None or key > best_key:
            best, best_key = c, key
    if best is None:
        raise NoFeasibleDesign("no feasible cell satisfies the torque headroom")
    return Selection(best, best_key[0], k_window, torque_headroom)


def reference_grid_scenario(gravity: float) -> JumpScenario:
    """Protocol used for the design search: 22.5 Nm saturation, 120 deg squat."""
    return JumpScenario(name="grid", gravity=gravity, torque_saturation=22.5,
                        squat_angle_deg=120.0)
