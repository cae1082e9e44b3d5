import subprocess
import sys

import pytest
import yaml

from leapsim.cli import (EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, EXIT_SIM, main,
                         parse_gravity)
from leapsim.config import default_config_path


def custom_config(tmp_path, **sections):
    with open(default_config_path()) as fh:
        raw = yaml.safe_load(fh)
    for sec, values in sections.items():
        raw[sec].update(values)
    path = tmp_path / "custom.yaml"
    path.write_text(yaml.safe_dump(raw))
    return path


def test_parse_gravity():
    assert parse_gravity("earth") == 9.81
    assert parse_gravity("MARS") == 3.71
    assert parse_gravity("1.62") == 1.62


def test_bad_gravity_rejected():
    with pytest.raises(SystemExit) as exc:
        main(["sim", "--gravity", "venus"])
    assert exc.value.code == 2


def test_sim_named_scenario(tmp_path, capsys):
    code = main(["sim", "--scenario", "experiment_18Nm_90deg", "--out", str(tmp_path), "--csv-only"])
    assert code == EXIT_OK
    assert "body apex" in capsys.readouterr().out
    assert (tmp_path / "experiment_18Nm_90deg_trajectory.csv").exists()
    assert not list(tmp_path.glob("*.svg"))


def test_sim_overrides_and_forward(tmp_path, capsys):
    code = main(["sim", "--torque", "24.8", "--squat", "120", "--pitch", "30", "--gravity", "mars",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert "range" in capsys.readouterr().out
    assert (tmp_path / "sim.svg").exists()


def test_sim_spring_flags(tmp_path, capsys):
    code = main(["sim", "--spring-rating", "870", "--spring-interpretation", "physical",
                 "--out", str(tmp_path), "--csv-only"])
    assert code == EXIT_OK
    with open(tmp_path / "sim.csv") as fh:
        assert "435" in fh.read().splitlines()[1].split(",")[5]


def test_sim_invalid_squat_is_config_error(tmp_path, capsys):
    assert main(["sim", "--squat", "130", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "squat" in capsys.readouterr().err


def test_sim_unknown_scenario(tmp_path):
    assert main(["sim", "--scenario", "nope", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_config(tmp_path):
    assert main(["sim", "--config", str(tmp_path / "none.yaml")]) == EXIT_CONFIG


def test_invalid_config(tmp_path):
    path = custom_config(tmp_path, geometry={"l2_m": 0.2})
    assert main(["statics", "--config", str(path), "--out", str(tmp_path)]) == EXIT_CONFIG


def test_suite_csv_only(tmp_path, capsys):
    assert main(["suite", "fig8_experiments", "--out", str(tmp_path), "--csv-only"]) == EXIT_OK
    lines = (tmp_path / "fig8_experiments.csv").read_text().splitlines()
    assert len(lines) == 5


def test_optimize_coarse(tmp_path, capsys):
    code = main(["optimize", "--coarse", "2", "--workers", "1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert len((tmp_path / "grid.csv").read_text().splitlines()) == 9
    out = capsys.readouterr().out
    assert "robust choice" in out and "raw argmax" in out


def test_optimize_no_feasible(tmp_path):
    path = custom_config(tmp_path, optimizer={"torque_saturation_Nm": 0.5})
    code = main(["optimize", "--config", str(path), "--coarse", "2", "--workers", "1",
                 "--out", str(tmp_path)])
    assert code == EXIT_INFEASIBLE


def test_optimize_bad_coarse(tmp_path):
    assert main(["optimize", "--coarse", "1", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_workspace(tmp_path, capsys):
    code = main(["workspace", "--hip-increment", "20", "--motor-step", "4", "--out", str(tmp_path)])
    assert code == EXIT_OK
    assert (tmp_path / "workspace.csv").read_text().startswith("hip_deg,x_m,y_m,z_m\n")


def test_statics(tmp_path, capsys):
    assert main(["statics", "--step", "5", "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "statics.csv").read_text().splitlines()
    assert lines[0] == "alpha_deg,hold_torque_Nm"
    assert len(lines) == 26
    assert "zero-torque poses" in capsys.readouterr().out


def test_calibrate_writes_config(tmp_path, capsys):
    target = tmp_path / "calibrated.yaml"
    assert main(["calibrate", "--write-config", str(target), "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "viscous_damping_Nm_s_rad" in out
    cal = yaml.safe_load(target.read_text())
    assert cal["motor"]["viscous_damping_Nm_s_rad"] == pytest.approx(0.265578, rel=1e-4)


def test_calibrate_unbracketed_is_sim_failure(tmp_path):
    path = custom_config(tmp_path, calibration={"target_apex_m": 10.0})
    assert main(["calibrate", "--config", str(path), "--out", str(tmp_path)]) == EXIT_SIM


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "leapsim", "--help"], capture_output=True,
                         text=True, check=True)
    for cmd in ("sim", "suite", "optimize", "workspace", "statics", "calibrate"):
        assert cmd in res.stdout
