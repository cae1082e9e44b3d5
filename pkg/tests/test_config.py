import copy

import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from leapsim.config import (config_from_dict, config_to_dict, default_config_path, load_config,
                            write_config)
from leapsim.errors import ConfigInvariant, ConfigParse


@pytest.fixture(scope="module")
def raw():
    with open(default_config_path()) as fh:
        return yaml.safe_load(fh)


def edited(raw, path, value):
    out = copy.deepcopy(raw)
    node = out
    for key in path[:-1]:
        node = node[key]
    if value is KeyError:
        del node[path[-1]]
    else:
        node[path[-1]] = value
    return out


def test_shipped_config(config):
    d = config.design
    assert (d.geom.l0, d.geom.l1, d.geom.l2, d.geom.l3, d.geom.l4) == (0.09, 0.18, 0.18, 0.30, 0.30)
    assert d.spring.k_eq == 435.0
    assert d.masses.total_mass == 7.9
    assert d.motor.torque_saturation == 24.8
    assert len(config.scenarios) == 12
    assert config.scenario("max_mars").gravity == 3.71


def test_unknown_scenario_lookup(config):
    with pytest.raises(KeyError):
        config.scenario("nope")


def test_round_trip_shipped(config, tmp_path):
    write_config(config, tmp_path / "c.yaml")
    assert load_config(tmp_path / "c.yaml") == config


@settings(max_examples=25, deadline=None)
@given(l1=st.floats(0.1, 0.3), l3=st.floats(0.15, 0.45), k=st.floats(1.0, 2000.0),
       sat=st.floats(0.5, 24.8), squat=st.floats(18.0, 120.0), g=st.floats(0.5, 25.0),
       damping=st.floats(0.0, 2.0))
def test_round_trip_property(raw, tmp_path_factory, l1, l3, k, sat, squat, g, damping):
    r = copy.deepcopy(raw)
    r["geometry"].update(l1_m=l1, l2_m=l1, l3_m=l3, l4_m=l3)
    r["spring"]["k_eq_N_m"] = k
    r["motor"]["viscous_damping_Nm_s_rad"] = damping
    r["scenarios"] = [{"name": "s", "gravity_m_s2": g, "torque_saturation_Nm": sat,
                       "squat_angle_deg": squat}]
    cfg = config_from_dict(r)
    path = tmp_path_factory.mktemp("rt") / "c.yaml"
    write_config(cfg, path)
    assert load_config(path) == cfg


@pytest.mark.parametrize("path,value,field", [
    (("geometry", "l2_m"), 0.2, "geometry.l2_m"),
    (("geometry", "l4_m"), 0.31, "geometry.l4_m"),
    (("geometry", "l1_m"), -0.1, "geometry.l1_m"),
    (("spring", "k_eq_N_m"), 0.0, "spring.k_eq_N_m"),
    (("spring", "tension_only"), False, "spring.tension_only"),
    (("motor", "torque_saturation_Nm"), 30.0, "motor.torque_saturation_Nm"),
    (("masses", "total_kg"), 8.5, "masses.total_kg"),
    (("scenarios", 0, "squat_angle_deg"), 130.0, "scenarios[0].squat_angle_deg"),
    (("scenarios", 0, "torque_saturation_Nm"), 0.0, "scenarios[0].torque_saturation_Nm"),
    (("scenarios", 0, "spring_interpretation"), "both", "scenarios[0].spring_interpretation"),
    (("optimizer", "torque_headroom"), 1.5, "optimizer.torque_headroom"),
    (("joint_friction_Nm_s_rad",), -1.0, "joint_friction_Nm_s_rad"),
])
def test_invariant_violations_named(raw, path, value, field):
    with pytest.raises(ConfigInvariant) as exc:
        config_from_dict(edited(raw, path, value))
    assert exc.value.field == field
    assert exc.value.invariant


def test_symmetry_invariant_named(raw):
    with pytest.raises(ConfigInvariant) as exc:
        config_from_dict(edited(raw, ("geometry", "l2_m"), 0.2))
    assert "symmetry" in exc.value.invariant


def test_duplicate_scenario_names(raw):
    r = copy.deepcopy(raw)
    r["scenarios"].append(dict(r["scenarios"][0]))
    with pytest.raises(ConfigInvariant):
        config_from_dict(r)


@pytest.mark.parametrize("path,value", [
    (("geometry",), KeyError),
    (("geometry", "l1_m"), KeyError),
    (("geometry", "l1_m"), "long"),
    (("spring", "bogus_key"), 1.0),
    (("scenarios",), {"a": 1}),
    (("optimizer", "l1_range_m"), [0.1]),
])
def test_parse_errors(raw, path, value):
    with pytest.raises(ConfigParse):
        config_from_dict(edited(raw, path, value))


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigParse):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("geometry: [unclosed\n")
    with pytest.raises(ConfigParse):
        load_config(bad)
    bad.write_text("- just\n- a list\n")
    with pytest.raises(ConfigParse):
        load_config(bad)


def test_optional_sections_default(raw):
    r = copy.deepcopy(raw)
    for key in ("pid", "contact", "optimizer", "calibration", "scenarios"):
        r.pop(key)
    cfg = config_from_dict(r)
    assert cfg.scenarios == ()
    assert cfg.optimizer.k_window_N_m == 100.0


def test_units_in_key_names(config):
    def keys(node):
        if isinstance(node, dict):
            for k, v in node.items():
                yield k
                yield from keys(v)
        elif isinstance(node, list):
            for v in node:
                yield from keys(v)
    unitless = {"geometry", "spring", "motor", "pid", "masses", "contact", "scenarios", "optimizer",
                "calibration", "name", "tension_only", "gear_ratio", "motors_per_leg",
                "hip_fraction", "mu", "spring_interpretation", "forward_mode", "torque_headroom",
                "joint_friction_ratio"}
    for k in keys(config_to_dict(config)):
        assert k in unitless or k.endswith(("_m", "_Nm", "_kg", "_deg", "_s", "_s2", "_m2",
                                            "_rad", "_Hz")), k
