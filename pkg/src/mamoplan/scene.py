"""World model, scene files and random scene generation.

Objects are discs on a planar workspace; the robot is a planar serial arm.
Scene files are TOML documents with ``workspace``, ``robot``, ``start``,
``objects`` and ``goal`` sections. Floats are written with 9 significant
digits, and generated scenes are quantised to that precision so a
save/load round trip is exact.
"""

import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import point_segment_distance, wrap_angle
from .kinematics import RobotModel, default_robot, ee_position, fk_points, inverse_kinematics

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class SceneError(ValueError):
    """Malformed or invalid scene; ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


def canon(v):
    """Quantise a float to its 9-significant-digit file representation."""
    return float(f"{float(v):.9g}")


@dataclass(frozen=True)
class Workspace:
    bounds: tuple  # (xmin, ymin, xmax, ymax)
    grid_resolution: float = 0.01

    def __post_init__(self):
        xmin, ymin, xmax, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise SceneError("workspace.bounds: rectangle must have positive area", "workspace.bounds")
        side = min(xmax - xmin, ymax - ymin)
        if not (0 < self.grid_resolution <= side / 10 + 1e-12):
            raise SceneError("workspace.grid_resolution: must be in (0, min side / 10]", "workspace.grid_resolution")

    @property
    def width(self):
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self):
        return self.bounds[3] - self.bounds[1]

    @property
    def center(self):
        return ((self.bounds[0] + self.bounds[2]) / 2, (self.bounds[1] + self.bounds[3]) / 2)

    def contains(self, x, y, margin=0.0):
        xmin, ymin, xmax, ymax = self.bounds
        return xmin + margin <= x <= xmax - margin and ymin + margin <= y <= ymax - margin


@dataclass(frozen=True)
class ConstraintSpec:
    max_step_displacement: float = 0.02
    topple_ratio: float = 1.0
    must_stay_in_workspace: bool = True

    def __post_init__(self):
        if self.max_step_displacement <= 0:
            raise SceneError("constraints.max_step_displacement: must be positive", "max_step_displacement")
        if self.topple_ratio <= 0:
            raise SceneError("constraints.topple_ratio: must be positive", "topple_ratio")


@dataclass(frozen=True)
class ObjectModel:
    id: int
    radius: float
    height: float
    mass: float
    friction: float
    movable: bool
    constraints: ConstraintSpec = field(default_factory=ConstraintSpec)

    def __post_init__(self):
        for name in ("radius", "height", "mass", "friction"):
            if not getattr(self, name) > 0:
                raise SceneError(f"objects[{self.id}].{name}: must be positive", name)

    @property
    def topple_limit(self):
        """Largest single-step displacement before the object counts as toppled."""
        return self.constraints.topple_ratio * self.radius ** 2 / self.height


@dataclass(frozen=True)
class ObjectPose:
    x: float
    y: float
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


@dataclass(frozen=True)
class WorldState:
    robot: tuple
    objects: dict

    @property
    def config(self):
        return np.asarray(self.robot, dtype=float)


@dataclass(frozen=True)
class GoalSpec:
    pose: tuple  # (x, y, yaw)
    pos_tolerance: float = 0.005
    yaw_tolerance: float = 0.01

    def __post_init__(self):
        if self.pos_tolerance <= 0 or self.yaw_tolerance <= 0:
            raise SceneError("goal: tolerances must be positive", "goal")

    @property
    def position(self):
        return np.array(self.pose[:2], dtype=float)


@dataclass(frozen=True)
class Scene:
    workspace: Workspace
    robot: RobotModel
    objects: tuple
    start: WorldState
    goal: GoalSpec

    def __iter__(self):
        return iter((self.workspace, self.robot, list(self.objects), self.start, self.goal))

    def object(self, oid):
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(oid)

    @property
    def movable(self):
        return [o for o in self.objects if o.movable]

    @property
    def immovable(self):
        return [o for o in self.objects if not o.movable]


# -- validation ---------------------------------------------------------------


def validate_scene(scene):
    ws, robot = scene.workspace, scene.robot
    ids = [o.id for o in scene.objects]
    if len(set(ids)) != len(ids):
        raise SceneError("objects: duplicate ids", "objects.id")
    if set(ids) != set(scene.start.objects):
        raise SceneError("objects: every object needs exactly one pose", "objects")
    if len(scene.start.robot) != robot.dof:
        raise SceneError(f"start.joints: expected {robot.dof} joints", "start.joints")
    for o in scene.objects:
        p = scene.start.objects[o.id]
        if not ws.contains(p.x, p.y, margin=o.radius):
            raise SceneError(f"objects[{o.id}]: disc not inside workspace", f"objects[{o.id}]")
    objs = sorted(scene.objects, key=lambda o: o.id)
    for i, a in enumerate(objs):
        pa = scene.start.objects[a.id]
        for b in objs[i + 1:]:
            pb = scene.start.objects[b.id]
            if math.hypot(pa.x - pb.x, pa.y - pb.y) < a.radius + b.radius:
                raise SceneError(f"objects {a.id} and {b.id} overlap", f"objects[{a.id}],objects[{b.id}]")
    return scene


# -- serialisation ------------------------------------------------------------


def _f(v):
    return f"{float(v):.9g}"


def _flist(vs):
    return "[" + ", ".join(_f(v) for v in vs) + "]"


def _b(v):
    return "true" if v else "false"


def dumps_scene(scene):
    ws, robot = scene.workspace, scene.robot
    out = [
        "[workspace]",
        f"bounds = {_flist(ws.bounds)}",
        f"grid_resolution = {_f(ws.grid_resolution)}",
        "",
        "[robot]",
        f"base = {_flist(robot.base)}",
        f"link_lengths = {_flist(robot.link_lengths)}",
        f"link_thickness = {_flist(robot.link_thickness)}",
        "joint_limits = [" + ", ".join(_flist(lim) for lim in robot.joint_limits) + "]",
        "",
        "[start]",
        f"joints = {_flist(scene.start.robot)}",
        "",
    ]
    for o in sorted(scene.objects, key=lambda o: o.id):
        p = scene.start.objects[o.id]
        c = o.constraints
        out += [
            "[[objects]]",
            f"id = {o.id}",
            f"radius = {_f(o.radius)}",
            f"height = {_f(o.height)}",
            f"mass = {_f(o.mass)}",
            f"friction = {_f(o.friction)}",
            f"movable = {_b(o.movable)}",
            f"max_step_displacement = {_f(c.max_step_displacement)}",
            f"topple_ratio = {_f(c.topple_ratio)}",
            f"must_stay_in_workspace = {_b(c.must_stay_in_workspace)}",
            f"x = {_f(p.x)}",
            f"y = {_f(p.y)}",
            f"yaw = {_f(p.yaw)}",
            "",
        ]
    g = scene.goal
    out += [
        "[goal]",
        f"pose = {_flist(g.pose)}",
        f"pos_tolerance = {_f(g.pos_tolerance)}",
        f"yaw_tolerance = {_f(g.yaw_tolerance)}",
    ]
    return "\n".join(out) + "\n"


def save_scene(scene, path):
    Path(path).write_text(dumps_scene(scene), encoding="utf-8")


def scene_hash(scene):
    return hashlib.sha256(dumps_scene(scene).encode("utf-8")).hexdigest()


def _get(d, key, where):
    try:
        return d[key]
    except (KeyError, TypeError):
        raise SceneError(f"{where}.{key}: missing", f"{where}.{key}") from None


def _floats(v, where, n=None):
    try:
        out = tuple(float(x) for x in v)
    except (TypeError, ValueError):
        raise SceneError(f"{where}: expected a list of numbers", where) from None
    if n is not None and len(out) != n:
        raise SceneError(f"{where}: expected {n} numbers", where)
    return out


def loads_scene(text):
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SceneError(f"parse error: {exc}") from exc
    w = _get(doc, "workspace", "scene")
    workspace = Workspace(_floats(_get(w, "bounds", "workspace"), "workspace.bounds", 4),
                          float(_get(w, "grid_resolution", "workspace")))
    r = _get(doc, "robot", "scene")
    try:
        robot = RobotModel(
            base=_floats(_get(r, "base", "robot"), "robot.base", 3),
            link_lengths=_floats(_get(r, "link_lengths", "robot"), "robot.link_lengths"),
            link_thickness=_floats(_get(r, "link_thickness", "robot"), "robot.link_thickness"),
            joint_limits=tuple(_floats(lim, "robot.joint_limits", 2) for lim in _get(r, "joint_limits", "robot")),
        )
    except SceneError:
        raise
    except ValueError as exc:
        raise SceneError(f"robot.{exc}", "robot") from exc
    start = _floats(_get(_get(doc, "start", "scene"), "joints", "start"), "start.joints")
    objects, poses = [], {}
    for i, o in enumerate(doc.get("objects", [])):
        where = f"objects[{i}]"
        oid = _get(o, "id", where)
        if not isinstance(oid, int) or isinstance(oid, bool):
            raise SceneError(f"{where}.id: expected an integer", f"{where}.id")
        model = ObjectModel(
            id=oid,
            radius=float(_get(o, "radius", where)),
            height=float(_get(o, "height", where)),
            mass=float(_get(o, "mass", where)),
            friction=float(_get(o, "friction", where)),
            movable=bool(_get(o, "movable", where)),
            constraints=ConstraintSpec(
                max_step_displacement=float(o.get("max_step_displacement", 0.02)),
                topple_ratio=float(o.get("topple_ratio", 1.0)),
                must_stay_in_workspace=bool(o.get("must_stay_in_workspace", True)),
            ),
        )
        objects.append(model)
        if oid in poses:
            raise SceneError(f"{where}.id: duplicate id {oid}", f"{where}.id")
        poses[oid] = ObjectPose(float(_get(o, "x", where)), float(_get(o, "y", where)), float(o.get("yaw", 0.0)))
    g = _get(doc, "goal", "scene")
    goal = GoalSpec(_floats(_get(g, "pose", "goal"), "goal.pose", 3),
                    float(_get(g, "pos_tolerance", "goal")), float(_get(g, "yaw_tolerance", "goal")))
    scene = Scene(workspace, robot, tuple(objects), WorldState(start, poses), goal)
    return validate_scene(scene)


def load_scene(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneError(f"cannot read scene file {path}: {exc}") from exc
    return loads_scene(text)


def with_poses(scene, poses):
    """Copy of ``scene`` whose start object poses are replaced by ``poses``."""
    merged = dict(scene.start.objects)
    merged.update(poses)
    return replace(scene, start=WorldState(scene.start.robot, merged))


# -- generation ---------------------------------------------------------------

WORKSPACES = {
    # bounds, base pose, tucked start configuration
    "tabletop": ((0.0, 0.0, 0.8, 0.6), (0.4, 0.05, 0.0)),
    "fridge": ((0.0, 0.0, 0.6, 0.6), (0.3, 0.05, 0.0)),
}

START_JOINTS = (0.2, 2.7, -2.7, 2.7)

GRASP_STANDOFF = 0.05


@dataclass(frozen=True)
class SceneParams:
    n_movable: int = 6
    n_immovable: int = 6
    workspace: str = "tabletop"
    radius_range: tuple = (0.03, 0.055)
    height_range: tuple = (0.06, 0.2)
    mass_range: tuple = (0.1, 1.0)
    friction_range: tuple = (0.5, 1.1)
    movable_spread: float = 0.08  # largest surface gap to the target; None scatters movables uniformly
    base_clearance: float = 0.25  # no object centre closer than this to the arm base
    min_goal_distance: float = 0.3  # start end-effector to goal position
    topple_ratio_range: tuple = (0.3, 0.6)
    max_step_displacement: float = 0.02
    seed: int = 0
    max_layouts: int = 40
    max_tries: int = 2000

    def __post_init__(self):
        if self.n_movable < 0 or self.n_immovable < 0:
            raise SceneError("counts must be non-negative")
        for name in ("radius_range", "height_range", "mass_range", "friction_range", "topple_ratio_range"):
            lo, hi = getattr(self, name)
            if not (0 < lo <= hi):
                raise SceneError(f"{name}: need 0 < lo <= hi", name)
        if self.workspace not in WORKSPACES:
            raise SceneError(f"workspace: unknown type {self.workspace!r}", "workspace")


def tabletop_params(seed=0, **kw):
    """Open tabletop with 6 movable and 6 immovable discs unless overridden."""
    kw = {"n_movable": 6, "n_immovable": 6, **kw}
    return SceneParams(workspace="tabletop", seed=seed, **kw)


def fridge_params(seed=0, **kw):
    """Walled fridge shelf; the wall leaves room for only a few loose discs."""
    kw = {"n_movable": 3, "n_immovable": 2, "min_goal_distance": 0.2, **kw}
    return SceneParams(workspace="fridge", seed=seed, **kw)


def pregrasp_goal(workspace, center, radius):
    """Goal facing a disc from the workspace-centre side, GRASP_STANDOFF off its surface."""
    cx, cy = workspace.center
    ux, uy = center[0] - cx, center[1] - cy
    n = math.hypot(ux, uy)
    if n < 1e-9:
        ux, uy, n = 0.0, 1.0, 1.0
    ux, uy = ux / n, uy / n
    d = radius + GRASP_STANDOFF
    return GoalSpec((canon(center[0] - d * ux), canon(center[1] - d * uy), canon(math.atan2(uy, ux))))


def fridge_wall(spacing=0.045, radius=0.02):
    """Disc centres of the U-shaped fridge wall (left, back, right)."""
    pts = []
    xmin, xmax, ytop, ybot = radius, 0.6 - radius, 0.6 - radius, 0.16
    n_side = int(round((ytop - ybot) / spacing))
    for k in range(n_side):
        y = ybot + k * spacing
        pts.append((xmin, y))
        pts.append((xmax, y))
    n_back = int(math.floor((xmax - xmin) / spacing + 1e-9))
    step = (xmax - xmin) / n_back
    pts += [(xmin + k * step, ytop) for k in range(n_back + 1)]
    return [(canon(x), canon(y)) for x, y in pts], radius


def _robot_clear(robot, start, x, y, r, gap=0.01):
    pts, _ = fk_points(robot, np.asarray(start))
    d = point_segment_distance(np.array([x, y]), pts[:-1], pts[1:])
    return bool(np.all(d > r + robot.thickness + gap))


def _goal_feasible(scene, rng):
    """Goal is inside the workspace and some IK solution clears every immovable obstacle."""
    from .planner.amp import solve_goal_configuration
    from .validity import build_distance_field

    gx, gy, _ = scene.goal.pose
    if not scene.workspace.contains(gx, gy, margin=max(scene.robot.link_thickness)):
        return False
    field = build_distance_field(scene.workspace, scene.objects, scene.start.objects)
    return solve_goal_configuration(scene, scene.goal, rng, field, attempts=3) is not None


def generate_scene(params):
    """Random scene, a pure function of ``params`` (including its seed).

    Immovable discs are scattered first and one of them becomes the grasp
    target. Movable discs are then placed around the target, each with a
    surface gap of at most ``movable_spread`` to it, so reaching the grasp
    pose means dealing with them. ``movable_spread=None`` scatters them
    uniformly instead.
    """
    if params.n_immovable == 0:
        raise SceneError("no target obstacle available: need at least one immovable object", "n_immovable")
    rng = np.random.default_rng(params.seed)
    bounds, base = WORKSPACES[params.workspace]
    workspace = Workspace(bounds, 0.01)
    robot = default_robot(base)
    start = tuple(START_JOINTS)
    thick = max(robot.link_thickness)
    ee0 = ee_position(robot, np.array(start))

    wall = []
    inner = workspace.bounds
    if params.workspace == "fridge":
        centers, wr = fridge_wall()
        wall = [(c, wr) for c in centers]
        inner = (2 * wr, 0.0, 0.6 - 2 * wr, 0.6 - 2 * wr)

    def fits(x, y, r, placed):
        if any(math.hypot(x - px, y - py) < r + pr + 0.005 for px, py, pr in placed):
            return False
        if any(math.hypot(x - c[0], y - c[1]) < r + wr_ + 0.005 for c, wr_ in wall):
            return False
        return _robot_clear(robot, start, x, y, r)

    def place(n, placed, sampler):
        tries = 0
        out = []
        while len(out) < n and tries < params.max_tries:
            tries += 1
            r = canon(rng.uniform(*params.radius_range))
            xy = sampler(r)
            if xy is None:
                continue
            x, y = canon(xy[0]), canon(xy[1])
            if not (inner[0] + r <= x <= inner[2] - r and inner[1] + r <= y <= inner[3] - r):
                continue
            if math.hypot(x - base[0], y - base[1]) < params.base_clearance:
                continue
            if fits(x, y, r, placed + out):
                out.append((x, y, r))
        return out if len(out) == n else None

    def uniform(r):
        return rng.uniform(inner[0] + r, inner[2] - r), rng.uniform(inner[1] + r, inner[3] - r)

    for _layout in range(params.max_layouts):
        fixed = place(params.n_immovable, [], uniform)
        if fixed is None:
            continue
        for t in rng.permutation(len(fixed)):
            tx, ty, tr = fixed[int(t)]
            goal = pregrasp_goal(workspace, (tx, ty), tr)
            gx, gy = goal.pose[0], goal.pose[1]
            if math.hypot(gx - ee0[0], gy - ee0[1]) < params.min_goal_distance:
                continue

            def near_goal(r, gx=gx, gy=gy, tx=tx, ty=ty, tr=tr):
                if params.movable_spread is None:
                    return uniform(r)
                # surface-to-surface gap to the target up to movable_spread
                rad = tr + r + 0.005 + params.movable_spread * rng.uniform()
                ang = rng.uniform(-math.pi, math.pi)
                x, y = tx + rad * math.cos(ang), ty + rad * math.sin(ang)
                # keep the grasp point itself free
                if math.hypot(x - gx, y - gy) < r + thick + 0.01:
                    return None
                return x, y

            free = place(params.n_movable, fixed, near_goal)
            if free is None:
                continue
            placed = free + fixed
            objects, poses = [], {}
            # movables first, then immovables
            for i, (x, y, r) in enumerate(placed):
                objects.append(ObjectModel(
                    id=i, radius=r,
                    height=canon(rng.uniform(*params.height_range)),
                    mass=canon(rng.uniform(*params.mass_range)),
                    friction=canon(rng.uniform(*params.friction_range)),
                    movable=i < params.n_movable,
                    constraints=ConstraintSpec(params.max_step_displacement,
                                               canon(rng.uniform(*params.topple_ratio_range))),
                ))
                poses[i] = ObjectPose(x, y, canon(wrap_angle(rng.uniform(-math.pi, math.pi))))
            n = len(placed)
            for k, ((x, y), wr_) in enumerate(wall):
                objects.append(ObjectModel(id=n + k, radius=wr_, height=0.6, mass=10.0, friction=1.0, movable=False))
                poses[n + k] = ObjectPose(x, y, 0.0)
            scene = Scene(workspace, robot, tuple(objects), WorldState(start, poses), goal)
            if _goal_feasible(scene, rng):
                return validate_scene(scene)
    raise SceneError("placement failure: workspace too crowded or no feasible target", "objects")
