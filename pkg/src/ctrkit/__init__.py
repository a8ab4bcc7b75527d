"""ctrkit: modeling, control, and simulation for a plastic concentric tube robot.

Submodules
----------
shape        polynomial centerline characterization (curvature, arc length)
kinematics   chained constant-curvature forward kinematics
torsion      straightening load, friction torque, torsional windup
ik           inverse kinematics, compensation, move planning
design       elastic tube-design feasibility and stiffness reports
motor        variable-gain controller and pneumatic plant simulation
evacuation   registration and voxel-phantom clot evacuation
config       robot configuration loading/validation
cli          command-line entry point
"""
__version__ = "0.1.0"

from ._kernels import backend_name as kernel_backend  # noqa: F401
from .kinematics import JointConfig, JointLimits, forward_kinematics  # noqa: F401
from .shape import (CenterlineSamples, CircularArc, PlanarShape,  # noqa: F401
                    fit_centerline)
