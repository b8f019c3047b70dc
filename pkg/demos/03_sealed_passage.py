"""
A goal the arm cannot get to
============================

A single immovable post next to the base stops the first link from swinging
to the left. Every way of reaching the goal needs the first link on the far
side of the post, so no plan exists. The planner should say so cleanly
within its budget and return no actions.

Run: python3 demos/03_sealed_passage.py
"""
import math

import numpy as np

from mamoplan import PlannerParams, plan
from mamoplan.kinematics import default_robot
from mamoplan.planner.amp import valid_ik_solutions
from mamoplan.scene import (START_JOINTS, ConstraintSpec, GoalSpec, ObjectModel, ObjectPose, Scene, Workspace,
                            WorldState)
from mamoplan.validity import build_distance_field

a = math.radians(110)
post = ObjectModel(0, 0.04, 0.1, 0.5, 0.8, False, ConstraintSpec(0.02, 1.0))
scene = Scene(Workspace((0.0, 0.0, 0.8, 0.6), 0.01), default_robot(), (post,),
              WorldState(START_JOINTS, {0: ObjectPose(0.4 + 0.1 * math.cos(a), 0.05 + 0.1 * math.sin(a), 0.0)}),
              GoalSpec((0.1, 0.4, math.pi / 2)))

# the goal itself is reachable: every solution has the first joint past the post
df = build_distance_field(scene.workspace, scene.objects, scene.start.objects)
sols = valid_ik_solutions(scene.robot, scene.goal.pose, df)
print(f"{len(sols)} collision-free goal configurations, first joint in "
      f"[{np.degrees(sols[:, 0].min()):.0f}, {np.degrees(sols[:, 0].max()):.0f}] deg")

for variant in ("SPAMP", "Naive"):
    r = plan(scene, params=PlannerParams(t_max=60.0, max_expansions=2000), variant=variant, rng=0)
    print(f"{variant:<6s} {r.status:<14s} expansions {r.stats.total_expansions:5d}  "
          f"synthetic time {r.stats.planning_time:5.1f} s  actions {len(r.actions)}")
