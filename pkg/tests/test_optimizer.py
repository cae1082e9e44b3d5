import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leapsim.actuation import peak_squat_torque
from leapsim.errors import NoFeasibleDesign
from leapsim.jump import MARS, simulate_jump
from leapsim.optimizer import (GRID_HEADER, SQUAT_UNREACHABLE, TORQUE_EXCEEDS_SATURATION,
                               CellResult, DesignGrid, DesignSpace, evaluate_cell, feasibility,
                               grid_search, reference_grid_scenario, select_design,
                               squat_reachable)

SCENARIO = reference_grid_scenario(MARS)


@pytest.fixture(scope="module")
def coarse_grid(design):
    return grid_search(DesignSpace.coarse(5), SCENARIO, design=design, workers=1)


def test_default_space_matches_ranges():
    s = DesignSpace()
    assert s.shape == (11, 11, 9)
    assert s.l1_values[0] == 0.10 and s.l1_values[-1] == 0.30
    assert s.l3_values[0] == 0.15 and s.l3_values[-1] == 0.45
    assert s.k_values[0] == 600 and s.k_values[-1] == 1000


@pytest.mark.parametrize("kw", [dict(l1_step=0.0), dict(k_step=-50.0),
                                dict(l3_range=(0.45, 0.15)), dict(k_range=(0.0, 100.0))])
def test_invalid_space(kw):
    with pytest.raises(ValueError):
        DesignSpace(**kw)


def test_exhaustive_and_reasoned(coarse_grid):
    assert len(coarse_grid) == int(np.prod(coarse_grid.space.shape)) == 125
    assert set(coarse_grid.cells) == set(coarse_grid.space.cells())
    for c in coarse_grid.ordered():
        assert c.feasible == (c.reason == "")


def test_coarse_grid_best_cell_near_chosen_design(coarse_grid):
    best = coarse_grid.argmax()
    assert 0.16 <= best.l1 <= 0.20
    assert 0.26 <= best.l3 <= 0.34


def test_single_cell_grid_matches_direct_run(design):
    grid = grid_search(DesignSpace.single(0.18, 0.30, 800.0), SCENARIO, design=design, workers=1)
    assert len(grid) == 1
    cell = grid.cells[(0.18, 0.30, 800.0)]
    direct = simulate_jump(design.with_stiffness(800.0), SCENARIO, record=False)
    assert cell.feasible
    assert cell.body_apex == direct.body_apex


def test_squat_unreachable_cell(design):
    cell = evaluate_cell(design, SCENARIO, 0.30, 0.15, 800.0)
    assert not cell.feasible and cell.reason == SQUAT_UNREACHABLE
    assert not squat_reachable(design.with_links(0.30, 0.15).geom, 17.5, 120.0)
    assert squat_reachable(design.geom, 17.5, 120.0)


def test_strong_spring_long_links_screened(design):
    cell = evaluate_cell(design, SCENARIO, 0.30, 0.45, 1000.0)
    assert cell.reason == TORQUE_EXCEEDS_SATURATION
    d = design.with_links(0.30, 0.45).with_stiffness(1000.0)
    assert cell.squat_torque_peak == peak_squat_torque(d, MARS, 120.0)
    assert cell.squat_torque_peak > 22.5


def test_table_design_feasible(design):
    cell = evaluate_cell(design, SCENARIO, 0.18, 0.30, 435.0)
    assert cell.feasible
    assert feasibility(cell, design, 22.5) == (True, "")


def test_zero_stiffness_feasible_but_lower(design):
    springless = evaluate_cell(design, SCENARIO, 0.18, 0.30, 0.0)
    sprung = evaluate_cell(design, SCENARIO, 0.18, 0.30, 800.0)
    assert springless.feasible
    assert springless.body_apex < sprung.body_apex


def test_feasibility_rederives_verdict():
    ok = CellResult(0.18, 0.3, 800.0, 3.0, 2.6, True, "", 15.0)
    assert feasibility(ok, None, 22.5) == (True, "")
    assert feasibility(ok, None, 10.0) == (False, TORQUE_EXCEEDS_SATURATION)
    lost = CellResult(0.18, 0.3, 800.0, 0.5, 0.1, False, "standup_failed", 15.0)
    assert feasibility(lost, None, 22.5) == (False, "standup_failed")


def test_screen_soundness_random_sample(design):
    """Every statically rejected cell also fails in full simulation (5% sample)."""
    space = DesignSpace()
    rejected = []
    for l1, l3, k in space.cells():
        d = design.with_links(l1, l3).with_stiffness(k)
        if not squat_reachable(d.geom, 17.5, 120.0):
            continue
        if peak_squat_torque(d, MARS, 120.0) > 22.5:
            rejected.append((l1, l3, k))
    assert rejected
    rng = np.random.default_rng(5)
    n = max(1, int(np.ceil(0.05 * len(rejected))))
    for i in rng.choice(len(rejected), n, replace=False):
        cell = evaluate_cell(design, SCENARIO, *rejected[i], screen=False)
        assert not cell.feasible, rejected[i]


def test_reproducible_and_order_independent(design, tmp_path):
    space = DesignSpace.coarse(3)
    a = grid_search(space, SCENARIO, design=design, workers=1)
    b = grid_search(space, SCENARIO, design=design, workers=2)
    a.write_csv(tmp_path / "a.csv")
    b.write_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_grid_csv(coarse_grid, tmp_path):
    coarse_grid.write_csv(tmp_path / "grid.csv")
    with open(tmp_path / "grid.csv") as fh:
        rows = list(csv.reader(fh))
    assert ",".join(rows[0]) == ("l1_m,l3_m,k_N_m,gravity_m_s2,body_apex_m,paw_clearance_m,"
                                 "feasible,reason,squat_torque_peak_Nm")
    assert tuple(rows[0]) == GRID_HEADER
    assert len(rows) == 126


# ---------------------------------------------------------------- selection

def synthetic_grid(apexes, torques=None, feasible=None):
    space = DesignSpace((0.1, 0.2), (0.3, 0.3), (600.0, 800.0), 0.1, 0.03, 100.0)
    grid = DesignGrid(MARS, space)
    for i, key in enumerate(space.cells()):
        ok = True if feasible is None else feasible[i]
        grid.cells[key] = CellResult(*key, apexes[i], apexes[i] - 0.4, ok, "" if ok else "no_liftoff",
                                     10.0 if torques is None else torques[i])
    return grid


@settings(max_examples=100)
@given(st.lists(st.floats(0.5, 5.0), min_size=6, max_size=6, unique=True),
       st.floats(0.1, 10.0), st.sampled_from([0.0, 100.0, 200.0]))
def test_selection_scale_invariant(apexes, scale, window):
    base = select_design(synthetic_grid(apexes), window, 0.2, 22.5)
    scaled = select_design(synthetic_grid([a * scale for a in apexes]), window, 0.2, 22.5)
    assert base.cell.key == scaled.cell.key


@given(st.lists(st.floats(0.5, 5.0), min_size=6, max_size=6))
def test_degenerate_selection_is_argmax(apexes):
    grid = synthetic_grid(apexes, torques=[22.5] * 6)
    assert select_design(grid, 0.0, 0.0, 22.5).cell == grid.argmax()


def test_window_prefers_robust_cell():
    # l1 = 0.1 peaks higher at k = 800 but collapses at 700; l1 = 0.2 is flat
    grid = synthetic_grid([3.0, 0.5, 3.2, 2.5, 2.5, 2.5])
    assert grid.argmax().key == (0.1, 0.3, 800.0)
    sel = select_design(grid, 100.0, 0.2, 22.5)
    assert sel.cell.l1 == 0.2 and sel.robust_apex == 2.5


def test_headroom_excludes_hot_cells():
    grid = synthetic_grid([1.0, 1.0, 1.0, 2.0, 2.0, 2.0], torques=[10, 10, 10, 20, 20, 20])
    assert select_design(grid, 0.0, 0.2, 22.5).cell.l1 == 0.1
    assert select_design(grid, 0.0, 0.0, 22.5).cell.l1 == 0.2


def test_tie_breaks_on_smaller_l1():
    grid = synthetic_grid([2.0] * 6)
    assert select_design(grid, 100.0, 0.2, 22.5).cell.key == (0.1, 0.3, 600.0)


@pytest.mark.parametrize("window", [0.0, 100.0, 1e6])
def test_single_feasible_cell(window):
    grid = synthetic_grid([1.0] * 6, feasible=[False, False, False, False, True, False])
    sel = select_design(grid, window, 0.2, 22.5)
    assert sel.cell.key == (0.2, 0.3, 700.0)


def test_no_feasible_design_raises():
    grid = synthetic_grid([1.0] * 6, feasible=[False] * 6)
    with pytest.raises(NoFeasibleDesign):
        select_design(grid)
    with pytest.raises(NoFeasibleDesign):
        grid.argmax()
