import math

import numpy as np
import pytest
from hypothesis import settings

from mamoplan.kinematics import RobotModel, default_robot
from mamoplan.scene import (ConstraintSpec, GoalSpec, ObjectModel, ObjectPose, Scene, Workspace, WorldState,
                            START_JOINTS)

settings.register_profile("repo", deadline=None, max_examples=60)
settings.load_profile("repo")


def three_link(base=(0.0, 0.0, 0.0), thickness=0.01):
    return RobotModel(base, (0.3, 0.25, 0.2), (thickness,) * 3, ((-2.9, 2.9),) * 3)


def disc(oid, x, y, r=0.04, movable=True, height=0.1, friction=0.8, step=0.02, topple=1.0):
    return ObjectModel(oid, r, height, 0.5, friction, movable, ConstraintSpec(step, topple)), ObjectPose(x, y, 0.0)


def make_scene(items=(), start=START_JOINTS, goal=(0.4, 0.45, math.pi / 2), bounds=(0.0, 0.0, 0.8, 0.6),
               robot=None):
    objects = tuple(o for o, _ in items)
    poses = {o.id: p for o, p in items}
    return Scene(Workspace(bounds, 0.01), robot or default_robot(), objects,
                 WorldState(tuple(start), poses), GoalSpec(tuple(goal)))


def ringed_scene(topple=1.0, n=6, ring=0.07, r=0.025, goal=(0.4, 0.42)):
    gx, gy = goal
    items = [disc(i, gx + ring * math.cos(2 * math.pi * i / n + 0.3), gy + ring * math.sin(2 * math.pi * i / n + 0.3),
                  r=r, topple=topple) for i in range(n)]
    return make_scene(items, goal=(gx, gy, math.pi / 2))


def sealed_scene():
    """A post beside the base stops the first link from swinging left; every goal solution needs it there."""
    a = math.radians(110)
    post = disc(0, 0.4 + 0.1 * math.cos(a), 0.05 + 0.1 * math.sin(a), r=0.04, movable=False)
    return make_scene([post], goal=(0.1, 0.4, math.pi / 2))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, passed, detail in sorted(mod.RESULTS):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {n:2d} {title}: {detail}")
