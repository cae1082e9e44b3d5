"""Spring-assisted five-bar jumping biped: kinematics, statics, jump dynamics and design search."""
from .actuation import (MotorConfig, PidGains, PidState, SpringConfig, pid_torque,
                        resting_poses, series_equivalent, series_physical, spring_joint_torques,
                        spring_tension, static_hold_torque)
from .config import Config, load_config, load_default, write_config
from .design import ContactModel, MassModel, RobotDesign
from .errors import (ConfigInvariant, ConfigParse, DegenerateDenominator, LeapsimError,
                     MalformedSummary, NoFeasibleDesign, NonFiniteState, SingularConfiguration,
                     StepSizeUnderflow, UnreachableConfiguration)
from .jump import (EARTH, MARS, JumpResult, JumpScenario, simulate_forward_jump,
                   simulate_jump)
from .kinematics import (Branch, ControlAngles, JointConfiguration, LegGeometry,
                         control_to_kinematic, kinematic_to_control, knee_distance,
                         paw_jacobian, paw_position, solve_closure, workspace_sweep)
from .model import BipedModel, contact_force
from .optimizer import DesignGrid, DesignSpace, grid_search, select_design

__version__ = "0.1.0"
