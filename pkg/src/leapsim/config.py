"""YAML configuration: robot design, scenarios, optimizer and calibration settings.

Every key carries its unit in its name (``*_m``, ``*_Nm``, ``*_N_m``, ``*_deg``
and so on). Loading checks each documented invariant explicitly and names the
offending key in the raised :class:`ConfigInvariant`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .actuation import MotorConfig, PidGains, SpringConfig
from .design import ContactModel, MassModel, RobotDesign
from .errors import ConfigInvariant, ConfigParse
from .jump import MAX_SQUAT_DEG, JumpScenario
from .kinematics import LegGeometry

MAX_MOTOR_TORQUE = 24.8


@dataclass(frozen=True)
class OptimizerSettings:
    l1_range_m: tuple[float, float] = (0.10, 0.30)
    l3_range_m: tuple[float, float] = (0.15, 0.45)
    k_range_N_m: tuple[float, float] = (600.0, 1000.0)
    l1_step_m: float = 0.02
    l3_step_m: float = 0.03
    k_step_N_m: float = 50.0
    gravity_m_s2: float = 3.71
    torque_saturation_Nm: float = 22.5
    squat_angle_deg: float = 120.0
    k_window_N_m: float = 100.0
    torque_headroom: float = 0.2


@dataclass(frozen=True)
class CalibrationSettings:
    target_apex_m: float = 1.141
    target_clearance_m: float = 0.7
    gravity_m_s2: float = 9.81
    torque_saturation_Nm: float = 18.0
    squat_angle_deg: float = 115.0
    joint_friction_ratio: float = 0.2
    damping_bracket_Nm_s_rad: tuple[float, float] = (0.0, 2.0)


@dataclass(frozen=True)
class Config:
    design: RobotDesign = field(default_factory=RobotDesign)
    scenarios: tuple[JumpScenario, ...] = ()
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)

    def scenario(self, name: str) -> JumpScenario:
        for s in self.scenarios:
            if s.name == name:
                return s
        raise KeyError(name)


# ---------------------------------------------------------------------------
# parsing helpers


def _section(raw: dict, key: str, required: bool = True) -> dict:
    if key not in raw:
        if required:
            raise ConfigParse(f"missing section '{key}'")
        return {}
    val = raw[key]
    if not isinstance(val, dict):
        raise ConfigParse(f"section '{key}' must be a mapping")
    return val


def _num(sec: dict, path: str, key: str, default: Any = None) -> float:
    if key not in sec:
        if default is None:
            raise ConfigParse(f"missing key '{path}.{key}'")
        return float(default)
    val = sec[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigParse(f"'{path}.{key}' must be a number, got {val!r}")
    val = float(val)
    if not math.isfinite(val):
        raise ConfigInvariant(f"{path}.{key}", "finite value")
    return val


def _pair(sec: dict, path: str, key: str, default) -> tuple[float, float]:
    val = sec.get(key, list(default))
    if (not isinstance(val, (list, tuple)) or len(val) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val)):
        raise ConfigParse(f"'{path}.{key}' must be a [low, high] pair of numbers")
    return float(val[0]), float(val[1])


def _check(ok: bool, field_name: str, invariant: str) -> None:
    if not ok:
        raise ConfigInvariant(field_name, invariant)


def _unknown(sec: dict, path: str, known: set[str]) -> None:
    extra = sorted(set(sec) - known)
    if extra:
        raise ConfigParse(f"unknown key(s) in '{path}': {', '.join(extra)}")


# ---------------------------------------------------------------------------
# sections


_GEOM_KEYS = {"l0_m", "l1_m", "l2_m", "l3_m", "l4_m"}


def _geometry(sec: dict) -> LegGeometry:
    _unknown(sec, "geometry", _GEOM_KEYS)
    v = {k: _num(sec, "geometry", k) for k in sorted(_GEOM_KEYS)}
    for k in sorted(_GEOM_KEYS):
        _check(v[k] > 0, f"geometry.{k}", "length > 0")
    _check(math.isclose(v["l1_m"], v["l2_m"], rel_tol=0, abs_tol=1e-12),
           "geometry.l2_m", "symmetry l1 == l2")
    _check(math.isclose(v["l3_m"], v["l4_m"], rel_tol=0, abs_tol=1e-12),
           "geometry.l4_m", "symmetry l3 == l4")
    _check(v["l1_m"] + v["l3_m"] > 0.5 * v["l0_m"], "geometry.l3_m",
           "closure feasibility l1 + l3 > l0/2")
    return LegGeometry(v["l0_m"], v["l1_m"], v["l2_m"], v["l3_m"], v["l4_m"])


def _spring(sec: dict, geom: LegGeometry) -> SpringConfig:
    _unknown(sec, "spring", {"k_eq_N_m", "natural_length_m", "tension_only"})
    k = _num(sec, "spring", "k_eq_N_m")
    lnat = _num(sec, "spring", "natural_length_m")
    tension_only = sec.get("tension_only", True)
    _check(k > 0, "spring.k_eq_N_m", "k_eq > 0")
    _check(lnat > geom.l0, "spring.natural_length_m", "natural_length > l0 (slack at zero pose)")
    _check(tension_only is True, "spring.tension_only", "tension_only is always true")
    return SpringConfig(k, lnat, True)


_MOTOR_KEYS = {"torque_saturation_Nm", "max_torque_Nm", "gear_ratio",
               "viscous_damping_Nm_s_rad", "reflected_inertia_kg_m2"}


def _motor(sec: dict) -> MotorConfig:
    _unknown(sec, "motor", _MOTOR_KEYS)
    sat = _num(sec, "motor", "torque_saturation_Nm")
    mx = _num(sec, "motor", "max_torque_Nm", MAX_MOTOR_TORQUE)
    gear = _num(sec, "motor", "gear_ratio", 10.0)
    damp = _num(sec, "motor", "viscous_damping_Nm_s_rad", 0.0)
    inertia = _num(sec, "motor", "reflected_inertia_kg_m2", 0.0)
    _check(0 < mx <= MAX_MOTOR_TORQUE, "motor.max_torque_Nm", "0 < max_torque <= 24.8")
    _check(0 < sat <= mx, "motor.torque_saturation_Nm", "0 < torque_saturation <= max_torque")
    _check(gear > 0, "motor.gear_ratio", "gear_ratio > 0")
    _check(damp >= 0, "motor.viscous_damping_Nm_s_rad", "damping >= 0")
    _check(inertia >= 0, "motor.reflected_inertia_kg_m2", "inertia >= 0")
    return MotorConfig(sat, mx, gear, damp, inertia)


_PID_KEYS = {"kp_Nm_rad", "ki_Nm_rad_s", "kd_Nm_s_rad", "integral_limit_Nm", "control_rate_Hz"}


def _pid(sec: dict) -> PidGains:
    _unknown(sec, "pid", _PID_KEYS)
    base = PidGains()
    kp = _num(sec, "pid", "kp_Nm_rad", base.kp)
    ki = _num(sec, "pid", "ki_Nm_rad_s", base.ki)
    kd = _num(sec, "pid", "kd_Nm_s_rad", base.kd)
    lim = _num(sec, "pid", "integral_limit_Nm", base.integral_limit)
    rate = _num(sec, "pid", "control_rate_Hz", base.control_rate)
    for name, val in (("kp_Nm_rad", kp), ("ki_Nm_rad_s", ki), ("kd_Nm_s_rad", kd),
                      ("integral_limit_Nm", lim)):
        _check(val >= 0, f"pid.{name}", "gain >= 0")
    _check(rate > 0, "pid.control_rate_Hz", "control_rate > 0")
    return PidGains(kp, ki, kd, lim, rate)


_MASS_KEYS = {"leg_kg", "electronics_kg", "total_kg", "motor_kg", "motors_per_leg", "hip_fraction"}


def _masses(sec: dict) -> MassModel:
    _unknown(sec, "masses", _MASS_KEYS)
    base = MassModel()
    leg = _num(sec, "masses", "leg_kg")
    elec = _num(sec, "masses", "electronics_kg")
    total = _num(sec, "masses", "total_kg")
    motor = _num(sec, "masses", "motor_kg", base.motor_mass)
    n_motor = _num(sec, "masses", "motors_per_leg", base.motors_per_leg)
    hip = _num(sec, "masses", "hip_fraction", base.hip_fraction)
    for name, val in (("leg_kg", leg), ("electronics_kg", elec), ("total_kg", total),
                      ("motor_kg", motor)):
        _check(val > 0, f"masses.{name}", "mass > 0")
    _check(math.isclose(total, 2 * leg + elec, rel_tol=0, abs_tol=1e-9), "masses.total_kg",
           "total = 2 * leg + electronics")
    _check(n_motor >= 0 and n_motor == int(n_motor), "masses.motors_per_leg",
           "non-negative integer")
    _check(0 < hip < 1, "masses.hip_fraction", "0 < hip_fraction < 1")
    _check(leg - n_motor * motor > 0, "masses.motor_kg", "link mass > 0 (motors lighter than leg)")
    return MassModel(leg, elec, total, motor, int(n_motor), hip)


_CONTACT_KEYS = {"k_ground_N_m", "c_ground_N_s_m", "mu", "slip_velocity_m_s",
                 "max_penetration_target_m"}


def _contact(sec: dict) -> ContactModel:
    _unknown(sec, "contact", _CONTACT_KEYS)
    base = ContactModel()
    kg = _num(sec, "contact", "k_ground_N_m", base.k_ground)
    cg = _num(sec, "contact", "c_ground_N_s_m", base.c_ground)
    mu = _num(sec, "contact", "mu", base.mu)
    vs = _num(sec, "contact", "slip_velocity_m_s", base.slip_velocity)
    pen = _num(sec, "contact", "max_penetration_target_m", base.max_penetration_target)
    _check(kg > 0, "contact.k_ground_N_m", "k_ground > 0")
    _check(cg >= 0, "contact.c_ground_N_s_m", "c_ground >= 0")
    _check(mu >= 0, "contact.mu", "mu >= 0")
    _check(vs > 0, "contact.slip_velocity_m_s", "slip_velocity > 0")
    _check(pen > 0, "contact.max_penetration_target_m", "penetration target > 0")
    return ContactModel(kg, cg, mu, vs, pen)


_SCENARIO_KEYS = {"name", "gravity_m_s2", "torque_saturation_Nm", "squat_angle_deg", "pitch_deg",
                  "stand_setpoint_deg", "stand_s", "ramp_s", "hold_s", "thrust_timeout_s",
                  "spring_rating_N_m", "spring_interpretation", "forward_mode",
                  "asymmetric_offset_deg"}


def _scenario(sec: dict, idx: int, motor: MotorConfig) -> JumpScenario:
    path = f"scenarios[{idx}]"
    if not isinstance(sec, dict):
        raise ConfigParse(f"'{path}' must be a mapping")
    _unknown(sec, path, _SCENARIO_KEYS)
    base = JumpScenario()
    name = sec.get("name", f"scenario_{idx}")
    if not isinstance(name, str) or not name:
        raise ConfigParse(f"'{path}.name' must be a non-empty string")
    g = _num(sec, path, "gravity_m_s2", base.gravity)
    sat = _num(sec, path, "torque_saturation_Nm", motor.torque_saturation)
    squat = _num(sec, path, "squat_angle_deg", base.squat_angle_deg)
    pitch = _num(sec, path, "pitch_deg", base.pitch_deg)
    stand = _num(sec, path, "stand_setpoint_deg", base.stand_setpoint_deg)
    stand_s = _num(sec, path, "stand_s", base.stand_s)
    ramp = _num(sec, path, "ramp_s", base.ramp_s)
    hold = _num(sec, path, "hold_s", base.hold_s)
    timeout = _num(sec, path, "thrust_timeout_s", base.thrust_timeout_s)
    rating = sec.get("spring_rating_N_m")
    if rating is not None:
        rating = _num(sec, path, "spring_rating_N_m")
        _check(rating > 0, f"{path}.spring_rating_N_m", "spring rating > 0")
    interp = sec.get("spring_interpretation", base.spring_interpretation)
    mode = sec.get("forward_mode", base.forward_mode)
    offset = _num(sec, path, "asymmetric_offset_deg", base.asymmetric_offset_deg)
    _check(g > 0, f"{path}.gravity_m_s2", "gravity > 0")
    _check(0 < sat <= MAX_MOTOR_TORQUE, f"{path}.torque_saturation_Nm",
           "torque_saturation in (0, 24.8]")
    _check(stand < squat <= MAX_SQUAT_DEG, f"{path}.squat_angle_deg",
           "squat_angle in (stand_setpoint, 120]")
    _check(-60 <= pitch <= 60, f"{path}.pitch_deg", "pitch in [-60, 60]")
    _check(min(stand_s, ramp, hold) >= 0, f"{path}.ramp_s", "phase durations >= 0")
    _check(timeout > 0, f"{path}.thrust_timeout_s", "thrust timeout > 0")
    _check(interp in ("equivalent", "physical"), f"{path}.spring_interpretation",
           "one of equivalent | physical")
    _check(mode in ("tilted_frame", "asymmetric_setpoints"), f"{path}.forward_mode",
           "one of tilted_frame | asymmetric_setpoints")
    return JumpScenario(name, g, sat, squat, pitch, stand, stand_s, ramp, hold, timeout,
                        rating, interp, mode, offset)


def _optimizer(sec: dict) -> OptimizerSettings:
    base = OptimizerSettings()
    _unknown(sec, "optimizer", set(OptimizerSettings.__dataclass_fields__))
    vals = {}
    for name in OptimizerSettings.__dataclass_fields__:
        default = getattr(base, name)
        if isinstance(default, tuple):
            lo, hi = _pair(sec, "optimizer", name, default)
            _check(0 < lo <= hi, f"optimizer.{name}", "0 < low <= high")
            vals[name] = (lo, hi)
        else:
            vals[name] = _num(sec, "optimizer", name, default)
    for name in ("l1_step_m", "l3_step_m", "k_step_N_m"):
        _check(vals[name] > 0, f"optimizer.{name}", "step > 0")
    _check(vals["k_window_N_m"] >= 0, "optimizer.k_window_N_m", "window >= 0")
    _check(0 <= vals["torque_headroom"] < 1, "optimizer.torque_headroom", "0 <= headroom < 1")
    _check(vals["gravity_m_s2"] > 0, "optimizer.gravity_m_s2", "gravity > 0")
    _check(0 < vals["torque_saturation_Nm"] <= MAX_MOTOR_TORQUE,
           "optimizer.torque_saturation_Nm", "torque_saturation in (0, 24.8]")
    _check(0 < vals["squat_angle_deg"] <= MAX_SQUAT_DEG, "optimizer.squat_angle_deg",
           "squat_angle <= 120")
    return OptimizerSettings(**vals)


def _calibration(sec: dict) -> CalibrationSettings:
    base = CalibrationSettings()
    _unknown(sec, "calibration", set(CalibrationSettings.__dataclass_fields__))
    vals = {}
    for name in CalibrationSettings.__dataclass_fields__:
        default = getattr(base, name)
        if isinstance(default, tuple):
            lo, hi = _pair(sec, "calibration", name, default)
            _check(0 <= lo < hi, f"calibration.{name}", "0 <= low < high")
            vals[name] = (lo, hi)
        else:
            vals[name] = _num(sec, "calibration", name, default)
    _check(vals["target_apex_m"] > 0, "calibration.target_apex_m", "target > 0")
    _check(vals["joint_friction_ratio"] >= 0, "calibration.joint_friction_ratio", "ratio >= 0")
    _check(0 < vals["torque_saturation_Nm"] <= MAX_MOTOR_TORQUE,
           "calibration.torque_saturation_Nm", "torque_saturation in (0, 24.8]")
    _check(0 < vals["squat_angle_deg"] <= MAX_SQUAT_DEG, "calibration.squat_angle_deg",
           "squat_angle <= 120")
    return CalibrationSettings(**vals)


# ---------------------------------------------------------------------------


def config_from_dict(raw: Any) -> Config:
    if not isinstance(raw, dict):
        raise ConfigParse("configuration root must be a mapping")
    _unknown(raw, "<root>", {"geometry", "spring", "motor", "pid", "masses", "contact",
                             "joint_friction_Nm_s_rad", "scenarios", "optimizer", "calibration"})
    geom = _geometry(_section(raw, "geometry"))
    spring = _spring(_section(raw, "spring"), geom)
    motor = _motor(_section(raw, "motor"))
    pid = _pid(_section(raw, "pid", required=False))
    masses = _masses(_section(raw, "masses"))
    contact = _contact(_section(raw, "contact", required=False))
    jf = _num(raw, "<root>", "joint_friction_Nm_s_rad", 0.0)
    _check(jf >= 0, "joint_friction_Nm_s_rad", "joint friction >= 0")
    design = RobotDesign(geom, spring, motor, masses, pid, contact, jf)
    scen_raw = raw.get("scenarios", [])
    if scen_raw is None:
        scen_raw = []
    if not isinstance(scen_raw, list):
        raise ConfigParse("'scenarios' must be a list")
    scenarios = tuple(_scenario(s, i, motor) for i, s in enumerate(scen_raw))
    names = [s.name for s in scenarios]
    _check(len(set(names)) == len(names), "scenarios", "unique scenario names")
    return Config(design, scenarios, _optimizer(_section(raw, "optimizer", required=False)),
                  _calibration(_section(raw, "calibration", required=False)))


def load_config(path) -> Config:
    """Read and validate a configuration file."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigParse(f"cannot read {p}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParse(f"{p}: {exc}") from exc
    return config_from_dict(raw)


def config_to_dict(cfg: Config) -> dict:
    d = cfg.design
    g, s, m, pid, ms, c = d.geom, d.spring, d.motor, d.pid, d.masses, d.contact
    out = {
        "geometry": {"l0_m": g.l0, "l1_m": g.l1, "l2_m": g.l2, "l3_m": g.l3, "l4_m": g.l4},
        "spring": {"k_eq_N_m": s.k_eq, "natural_length_m": s.natural_length,
                   "tension_only": s.tension_only},
        "motor": {"torque_saturation_Nm": m.torque_saturation, "max_torque_Nm": m.max_torque,
                  "gear_ratio": m.gear_ratio, "viscous_damping_Nm_s_rad": m.viscous_damping,
                  "reflected_inertia_kg_m2": m.reflected_inertia},
        "pid": {"kp_Nm_rad": pid.kp, "ki_Nm_rad_s": pid.ki, "kd_Nm_s_rad": pid.kd,
                "integral_limit_Nm": pid.integral_limit, "control_rate_Hz": pid.control_rate},
        "masses": {"leg_kg": ms.leg_mass, "electronics_kg": ms.electronics_mass,
                   "total_kg": ms.total_mass, "motor_kg": ms.motor_mass,
                   "motors_per_leg": ms.motors_per_leg, "hip_fraction": ms.hip_fraction},
        "contact": {"k_ground_N_m": c.k_ground, "c_ground_N_s_m": c.c_ground, "mu": c.mu,
                    "slip_velocity_m_s": c.slip_velocity,
                    "max_penetration_target_m": c.max_penetration_target},
        "joint_friction_Nm_s_rad": d.joint_friction,
        "scenarios": [_scenario_dict(sc) for sc in cfg.scenarios],
        "optimizer": {k: list(v) if isinstance(v, tuple) else v
                      for k, v in vars(cfg.optimizer).items()},
        "calibration": {k: list(v) if isinstance(v, tuple) else v
                        for k, v in vars(cfg.calibration).items()},
    }
    return out


def _scenario_dict(sc: JumpScenario) -> dict:
    return {"name": sc.name, "gravity_m_s2": sc.gravity,
            "torque_saturation_Nm": sc.torque_saturation, "squat_angle_deg": sc.squat_angle_deg,
            "pitch_deg": sc.pitch_deg, "stand_setpoint_deg": sc.stand_setpoint_deg,
            "stand_s": sc.stand_s, "ramp_s": sc.ramp_s, "hold_s": sc.hold_s,
            "thrust_timeout_s": sc.thrust_timeout_s, "spring_rating_N_m": sc.spring_rating,
            "spring_interpretation": sc.spring_interpretation, "forward_mode": sc.forward_mode,
            "asymmetric_offset_deg": sc.asymmetric_offset_deg}


def write_config(cfg: Config, path) -> None:
    Path(path).write_text(yaml.safe_dump(config_to_dict(cfg), sort_keys=False))


def default_config_path() -> Path:
    return Path(str(resources.files("leapsim") / "data" / "paper_biped.yaml"))


def load_default() -> Config:
    """The shipped, calibrated configuration of the reference biped."""
    return load_config(default_config_path())
