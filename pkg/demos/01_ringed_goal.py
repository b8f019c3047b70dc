"""
Reaching into a ring of movable discs
=====================================

The goal pose sits inside a ring of six small movable discs. No collision-free
approach exists, so the last motion has to push discs aside. The planner finds
that push, checks it in simulation, and the plan is then replayed as an
independent check.

Run: python3 demos/01_ringed_goal.py [out.svg]
"""
import math
import sys

from mamoplan import PlannerParams, plan
from mamoplan.kinematics import default_robot
from mamoplan.planfile import from_result, replay
from mamoplan.render import RenderSpec, render_svg
from mamoplan.scene import (START_JOINTS, ConstraintSpec, GoalSpec, ObjectModel, ObjectPose, Scene, Workspace,
                            WorldState)

# six discs of radius 2.5 cm on a 7 cm ring around the goal position
gx, gy = 0.40, 0.42
objects, poses = [], {}
for i in range(6):
    a = 2 * math.pi * i / 6 + 0.3
    objects.append(ObjectModel(i, 0.025, 0.1, 0.5, 0.8, True, ConstraintSpec(0.02, 1.0)))
    poses[i] = ObjectPose(gx + 0.07 * math.cos(a), gy + 0.07 * math.sin(a), 0.0)

scene = Scene(Workspace((0.0, 0.0, 0.8, 0.6), 0.01), default_robot(), tuple(objects),
              WorldState(START_JOINTS, poses), GoalSpec((gx, gy, math.pi / 2)))

params = PlannerParams(t_max=60.0, t_sim=10.0)
result = plan(scene, params=params, variant="SPAMP", rng=0)
s = result.stats
print(f"status: {result.status}")
print(f"actions: {len(result.actions)} (last one: {type(result.actions[-1]).__name__})")
print(f"synthetic planning time {s.planning_time:.1f} s, simulator calls {s.sim_calls_stage1} + {s.sim_calls_stage2}")

# replay re-executes the plan through the validity checks and the pusher
verdict = replay(scene, from_result(scene, result, params))
print(f"replay: {'valid' if verdict.valid else 'invalid'}")
final = verdict.states[-1].objects
for oid, p in sorted(final.items()):
    p0 = scene.start.objects[oid]
    moved = math.hypot(p.x - p0.x, p.y - p0.y)
    if moved > 0:
        print(f"  disc {oid} pushed {1000 * moved:.1f} mm")

svg = render_svg(RenderSpec(scene, verdict.states, stride=4))
if len(sys.argv) > 1:
    with open(sys.argv[1], "w", encoding="utf-8") as fh:
        fh.write(svg)
    print(f"wrote {sys.argv[1]}")
