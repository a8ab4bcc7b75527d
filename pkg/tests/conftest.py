import pytest

from ctrkit import presets
from ctrkit.ik import Planner


@pytest.fixture(scope="session")
def demo_shape():
    return presets.demo_tube_shape()


@pytest.fixture(scope="session")
def inner_tube(demo_shape):
    return presets.default_inner_tube(demo_shape)


@pytest.fixture(scope="session")
def inner_material():
    return presets.default_inner_material()


@pytest.fixture(scope="session")
def planner(demo_shape, inner_tube, inner_material):
    return Planner(demo_shape, inner_tube, inner_material,
                   limits=presets.default_joint_limits())
