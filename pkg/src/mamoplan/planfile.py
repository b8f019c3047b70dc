"""Stored plans: a TOML action list that replays without any planner state."""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .actions import AMP, SimplePrimitive
from .kinematics import interpolate, satisfies_goal
from .physics import SolverFailure, simulate_path
from .planner.params import PlannerParams, params_from_dict
from .scene import WorldState, scene_hash
from .validity import build_distance_field, check_phase1

FORMAT = "mamoplan-plan"
VERSION = 1
SOURCE_TOL = 1e-9


class PlanFileError(ValueError):
    """Malformed plan text, or a plan that does not belong to the scene."""


@dataclass(frozen=True)
class PlanFile:
    scene_hash: str
    actions: tuple
    params: PlannerParams
    variant: str = ""
    status: str = "success"
    cost: float = math.nan


def _num(v):
    return repr(float(v))


def _vec(vs):
    return "[" + ", ".join(_num(v) for v in vs) + "]"


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _num(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot write {type(v).__name__} to a plan file")


def from_result(scene, result, params=None, variant=""):
    return PlanFile(scene_hash(scene), tuple(result.actions), params or PlannerParams(), variant,
                    result.status, float(result.cost))


def dumps_plan(pf):
    out = [
        f'format = "{FORMAT}"',
        f"version = {VERSION}",
        f'scene_hash = "{pf.scene_hash}"',
        f"variant = {_toml_value(pf.variant)}",
        f"status = {_toml_value(pf.status)}",
        f"cost = {_num(pf.cost)}",
        "",
        "[params]",
    ]
    out += [f"{k} = {_toml_value(v)}" for k, v in pf.params.to_dict().items()]
    for a in pf.actions:
        out.append("")
        out.append("[[actions]]")
        if isinstance(a, SimplePrimitive):
            out += ['type = "primitive"', f"joint = {int(a.joint)}", f"delta = {_num(a.delta)}"]
        elif isinstance(a, AMP):
            out += ['type = "amp"', f"source = {_vec(a.source)}", f"target = {_vec(a.target)}"]
        else:
            raise TypeError(f"unknown action {a!r}")
    return "\n".join(out) + "\n"


def loads_plan(text):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise PlanFileError(f"plan parse error: {exc}") from exc
    if doc.get("format") != FORMAT:
        raise PlanFileError("not a plan file (format key missing or wrong)")
    if doc.get("version") != VERSION:
        raise PlanFileError(f"unsupported plan version {doc.get('version')!r}")
    if not isinstance(doc.get("scene_hash"), str):
        raise PlanFileError("scene_hash missing")
    try:
        params = params_from_dict(doc.get("params", {}))
    except (TypeError, ValueError) as exc:
        raise PlanFileError(f"params: {exc}") from exc
    actions = []
    for i, a in enumerate(doc.get("actions", [])):
        kind = a.get("type")
        try:
            if kind == "primitive":
                if not isinstance(a["joint"], int) or isinstance(a["joint"], bool):
                    raise TypeError("joint must be an integer")
                actions.append(SimplePrimitive(a["joint"], float(a["delta"])))
            elif kind == "amp":
                target = np.array([float(x) for x in a["target"]])
                source = np.array([float(x) for x in a.get("source", a["target"])])
                actions.append(AMP(target, [source, target]))  # path is rebuilt on replay
            else:
                raise PlanFileError(f"actions[{i}]: unknown type {kind!r}")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, PlanFileError):
                raise
            raise PlanFileError(f"actions[{i}]: {exc}") from exc
    return PlanFile(doc["scene_hash"], tuple(actions), params, str(doc.get("variant", "")),
                    str(doc.get("status", "success")), float(doc.get("cost", math.nan)))


def save_plan(pf, path):
    Path(path).write_text(dumps_plan(pf), encoding="utf-8")


def load_plan(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise PlanFileError(f"cannot read plan file {path}: {exc}") from exc
    return loads_plan(text)


@dataclass(frozen=True)
class ReplayVerdict:
    valid: bool
    goal_met: bool
    violations: tuple  # readable descriptions, empty when clean
    states: tuple  # WorldState after each action, start first
    traces: tuple = ()  # per action: object poses per path state, when recorded

    def __bool__(self):
        return self.valid


def replay(scene, plan, *, check_hash=True, record_trace=False):
    """Re-execute ``plan`` (a PlanFile) on ``scene`` through validity checks and physics."""
    robot = scene.robot
    if check_hash and plan.scene_hash != scene_hash(scene):
        raise PlanFileError("plan was made for a different scene (hash mismatch)")
    params = plan.params
    dfield = build_distance_field(scene.workspace, scene.objects, scene.start.objects)
    c = np.asarray(scene.start.robot, dtype=float)
    poses = dict(scene.start.objects)
    states = [WorldState(tuple(float(v) for v in c), dict(poses))]
    problems, traces = [], []
    n = len(plan.actions)
    for i, a in enumerate(plan.actions):
        if isinstance(a, SimplePrimitive):
            if not 0 <= a.joint < robot.dof:
                raise PlanFileError(f"actions[{i}]: joint {a.joint} out of range")
            nxt = c.copy()
            nxt[a.joint] += a.delta
            path = [c, nxt]
        else:
            target = np.asarray(a.target, dtype=float)
            if target.shape != (robot.dof,):
                raise PlanFileError(f"actions[{i}]: target needs {robot.dof} joints")
            if i != n - 1:
                problems.append(f"action {i}: AMP before the final action")
            source = np.asarray(a.source, dtype=float)
            if source.shape != c.shape or np.max(np.abs(source - c)) > SOURCE_TOL:
                problems.append(f"action {i}: AMP source does not match the replayed state")
                break
            c = source  # recorded exactly; composing deltas may differ in the last bits
            path = interpolate(c, target, params.amp_step)
            nxt = path[-1]
        res = check_phase1(robot, path, dfield, scene.objects, poses)
        if not res.valid:
            problems.append(f"action {i}: collides with an immovable obstacle or leaves the workspace")
        elif isinstance(a, SimplePrimitive) and res.contacts_movable:
            problems.append(f"action {i}: simple primitive touches movable objects {sorted(res.contacted_ids)}")
        try:
            out = simulate_path(robot, path, scene.objects, poses, scene.workspace, record_trace=record_trace)
        except SolverFailure as exc:
            problems.append(f"action {i}: contact solver failed ({exc})")
            states.append(WorldState(tuple(float(v) for v in nxt), dict(poses)))
            break
        for v in out.violations:
            problems.append(f"action {i}: {v.kind.value} (object {v.object_id}, step {v.step})")
        if isinstance(a, SimplePrimitive) and out.final_poses != poses:
            problems.append(f"action {i}: simple primitive moved objects")
        if record_trace:
            traces.append(out.trace)
        c = np.asarray(nxt, dtype=float)
        poses = dict(out.final_poses)
        states.append(WorldState(tuple(float(v) for v in c), dict(poses)))
        if problems:
            break
    goal_met = not problems and satisfies_goal(robot, c, scene.goal)
    if not problems and not goal_met:
        problems.append("final configuration does not meet the goal")
    return ReplayVerdict(not problems, bool(goal_met), tuple(problems), tuple(states), tuple(traces))
