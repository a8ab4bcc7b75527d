"""Built-in demonstration robot: tube geometry, materials, and motor axes.

The demo centerline is a quartic characterized from a synthetic tube whose
curvature ramps smoothly from (nearly) straight at both ends of the
deflectable region to a peak of about 1/31 mm^-1 in the middle, over a
29 mm arc -- the kind of profile a heat-set and spring-back nylon tube
ends up with.  Coefficients are frozen so every install sees the same
geometry.
"""
from __future__ import annotations

from .kinematics import JointLimits
from .motor import (ControllerParams, MotorPlant, rotational_axis_defaults,
                    translational_axis_defaults)
from .shape import PlanarShape
from .torsion import MaterialModel, TubeSpec

# quartic fit of the synthetic demo centerline (mm); see module docstring
DEMO_SHAPE_COEFFICIENTS = (
    0.00998515231100506,
    -0.011617790304783198,
    0.002332571813415693,
    -0.0008527001169798069,
    1.2986331413951055e-05,
)
DEMO_SHAPE_X_MAX = 27.04649461801361
DEFAULT_TRAVEL_MM = 85.0


def demo_tube_shape() -> PlanarShape:
    """The characterized demo inner-tube centerline (about 29 mm of arc)."""
    return PlanarShape(DEMO_SHAPE_COEFFICIENTS, DEMO_SHAPE_X_MAX)


def default_inner_material() -> MaterialModel:
    """Nylon inner tube: E 4 GPa, G 2.7 GPa, 10% strain limit, mu 0.17."""
    return MaterialModel(elastic_modulus=4.0, shear_modulus=2.7,
                         strain_limit=0.10, friction_mu=0.17)


def default_outer_material() -> MaterialModel:
    """Fiberglass delivery tube: E 74 GPa, G 30 GPa."""
    return MaterialModel(elastic_modulus=74.0, shear_modulus=30.0,
                         strain_limit=0.10, friction_mu=0.17)


def default_inner_tube(shape: PlanarShape | None = None) -> TubeSpec:
    """OD 6 / ID 4 mm nylon tube; deflectable arc matches the demo shape."""
    arc = (shape or demo_tube_shape()).arc_total
    return TubeSpec(r_od=3.0, r_id=2.0, length_total=250.0,
                    deflectable_arc=arc)


def default_outer_tube() -> TubeSpec:
    """OD 7.93 / ID 6.2 mm fiberglass delivery tube (straight)."""
    return TubeSpec(r_od=7.93 / 2.0, r_id=6.2 / 2.0, length_total=242.0,
                    deflectable_arc=0.0)


def default_joint_limits() -> JointLimits:
    return JointLimits(d_min=0.0, d_max=DEFAULT_TRAVEL_MM)


def default_axes() -> dict:
    """Controller + plant parameter pairs for each actuated axis."""
    rot_params, rot_plant = rotational_axis_defaults()
    trans_params, trans_plant = translational_axis_defaults()
    return {
        "rotational": {"controller": rot_params, "plant": rot_plant},
        "translational": {"controller": trans_params, "plant": trans_plant},
    }
