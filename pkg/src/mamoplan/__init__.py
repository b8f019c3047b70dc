"""Simulation-in-the-loop planning among movable obstacles for a planar arm."""

from .actions import AMP, SimplePrimitive
from .kinematics import RobotModel, default_robot, forward_kinematics, inverse_kinematics
from .physics import SimOutcome, Violation, ViolationKind, simulate_path
from .planner import PlannerParams, PlanResult, plan
from .scene import (GoalSpec, ObjectModel, ObjectPose, Scene, SceneError, SceneParams, WorldState,
                    generate_scene, load_scene, save_scene)
from .validity import build_distance_field, check_configuration, check_phase1

__version__ = "0.1.0"

__all__ = [
    "AMP", "GoalSpec", "ObjectModel", "ObjectPose", "PlanResult", "PlannerParams", "RobotModel", "Scene",
    "SceneError", "SceneParams", "SimOutcome", "SimplePrimitive", "Violation", "ViolationKind", "WorldState",
    "build_distance_field", "check_configuration", "check_phase1", "default_robot", "forward_kinematics",
    "generate_scene", "inverse_kinematics", "load_scene", "plan", "save_scene", "simulate_path",
]
