"""Planar serial arm: forward/inverse kinematics, joint-space interpolation, primitives."""

import math
from dataclasses import dataclass

import numpy as np

from .actions import SimplePrimitive
from .geometry import wrap_angle

# Joint vectors are plain float arrays of length q.
Configuration = np.ndarray


@dataclass(frozen=True)
class RobotModel:
    base: tuple  # (x, y, yaw) of the link-0 origin
    link_lengths: tuple
    link_thickness: tuple
    joint_limits: tuple  # ((lo, hi), ...)

    def __post_init__(self):
        if len(self.link_lengths) < 2:
            raise ValueError("link_lengths: need at least 2 links")
        if len(self.link_thickness) != len(self.link_lengths):
            raise ValueError("link_thickness: one entry per link required")
        if len(self.joint_limits) != len(self.link_lengths):
            raise ValueError("joint_limits: one [lo, hi] pair per joint required")
        if any(v <= 0 for v in self.link_lengths):
            raise ValueError("link_lengths: must be positive")
        if any(v <= 0 for v in self.link_thickness):
            raise ValueError("link_thickness: must be positive")
        if any(lo >= hi for lo, hi in self.joint_limits):
            raise ValueError("joint_limits: lo < hi required")
        if len(self.base) != 3:
            raise ValueError("base: expected (x, y, yaw)")

    @property
    def dof(self):
        return len(self.link_lengths)

    @property
    def reach(self):
        return float(sum(self.link_lengths))

    @property
    def lower(self):
        return np.array([lo for lo, _ in self.joint_limits])

    @property
    def upper(self):
        return np.array([hi for _, hi in self.joint_limits])

    @property
    def thickness(self):
        return np.asarray(self.link_thickness, dtype=float)

    def within_limits(self, c):
        c = np.asarray(c, dtype=float)
        return bool(np.all(c >= self.lower) and np.all(c <= self.upper))


def default_robot(base=(0.4, 0.05, 0.0)):
    """Four-joint arm with enough redundancy for a null space."""
    return RobotModel(
        base=tuple(float(v) for v in base),
        link_lengths=(0.25, 0.20, 0.15, 0.10),
        link_thickness=(0.015, 0.015, 0.015, 0.015),
        joint_limits=((-2.9, 2.9),) * 4,
    )


def default_deltas(robot):
    """4 degrees for the two proximal joints, 7 degrees for the rest."""
    return np.array([math.radians(4.0) if j < 2 else math.radians(7.0) for j in range(robot.dof)])


def fk_points(robot, configs):
    """Joint positions for a batch of configurations.

    ``configs`` has shape ``(..., q)``; returns ``(points, yaw)`` where points
    has shape ``(..., q + 1, 2)`` (base first, end-effector last) and yaw is
    the absolute end-effector heading.
    """
    c = np.asarray(configs, dtype=float)
    bx, by, byaw = robot.base
    phi = byaw + np.cumsum(c, axis=-1)
    lengths = np.asarray(robot.link_lengths, dtype=float)
    steps = np.stack([lengths * np.cos(phi), lengths * np.sin(phi)], axis=-1)
    pts = np.cumsum(steps, axis=-2) + np.array([bx, by])
    base = np.broadcast_to(np.array([bx, by]), pts.shape[:-2] + (1, 2))
    return np.concatenate([base, pts], axis=-2), phi[..., -1]


def forward_kinematics(robot, c):
    """End-effector pose ``(x, y, yaw)`` and the world-frame link capsules.

    Each capsule is ``(start_point, end_point, thickness)``.
    """
    pts, yaw = fk_points(robot, c)
    ee = (float(pts[-1, 0]), float(pts[-1, 1]), wrap_angle(yaw))
    links = [(pts[i].copy(), pts[i + 1].copy(), robot.link_thickness[i]) for i in range(robot.dof)]
    return ee, links


def ee_position(robot, c):
    pts, _ = fk_points(robot, c)
    return pts[..., -1, :]


def pose_error(robot, c, goal_pose):
    """(dx, dy, dyaw) from the end-effector of ``c`` to ``goal_pose``."""
    pts, yaw = fk_points(robot, c)
    gx, gy, gyaw = goal_pose
    return np.array([gx - pts[-1, 0], gy - pts[-1, 1], wrap_angle(gyaw - yaw)])


def satisfies_goal(robot, c, goal):
    e = pose_error(robot, c, goal.pose)
    return bool(math.hypot(e[0], e[1]) <= goal.pos_tolerance and abs(e[2]) <= goal.yaw_tolerance)


def jacobian(robot, c):
    """3 x q planar Jacobian of (x, y, yaw)."""
    pts, _ = fk_points(robot, c)
    ee = pts[-1]
    r = ee - pts[:-1]
    J = np.empty((3, robot.dof))
    J[0] = -r[:, 1]
    J[1] = r[:, 0]
    J[2] = 1.0
    return J


def _dls_solve(robot, goal, c, damping, max_iter):
    lo, hi = robot.lower, robot.upper
    lam2 = damping * damping
    eye = np.eye(3)
    for _ in range(max_iter):
        e = pose_error(robot, c, goal.pose)
        if math.hypot(e[0], e[1]) <= 1e-3 * goal.pos_tolerance and abs(e[2]) <= 1e-3 * goal.yaw_tolerance:
            break
        J = jacobian(robot, c)
        dq = J.T @ np.linalg.solve(J @ J.T + lam2 * eye, e)
        c = np.clip(c + dq, lo, hi)
    return c


def inverse_kinematics(robot, goal, seed, rng, *, damping=0.05, max_iter=200, restarts=10):
    """Damped least-squares IK with random restarts.

    Returns a configuration within joint limits whose end-effector satisfies
    ``goal``'s tolerances, or ``None``. The seed is returned untouched when it
    already satisfies the goal.
    """
    seed = np.asarray(seed, dtype=float)
    if robot.within_limits(seed) and satisfies_goal(robot, seed, goal):
        return seed.copy()
    bx, by, _ = robot.base
    if math.hypot(goal.pose[0] - bx, goal.pose[1] - by) > robot.reach:
        return None
    start = np.clip(seed, robot.lower, robot.upper)
    for attempt in range(restarts + 1):
        if attempt > 0:
            start = rng.uniform(robot.lower, robot.upper)
        c = _dls_solve(robot, goal, start, damping, max_iter)
        if satisfies_goal(robot, c, goal) and robot.within_limits(c):
            return c
    return None


def interpolate(a, b, max_step):
    """Inclusive straight-line joint-space path with infinity-norm steps <= max_step."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    span = float(np.max(np.abs(b - a))) if a.size else 0.0
    k = max(1, int(math.ceil(span / max_step - 1e-9))) if span > 0 else 0
    if k == 0:
        return [a.copy()]
    out = [a + (i / k) * (b - a) for i in range(k)]
    out.append(b.copy())
    return out


def simple_primitive_successors(robot, c, deltas):
    """All single-joint +/- delta moves that stay within joint limits."""
    c = np.asarray(c, dtype=float)
    out = []
    for j in range(robot.dof):
        lo, hi = robot.joint_limits[j]
        for sign in (1.0, -1.0):
            d = sign * float(deltas[j])
            n = c.copy()
            n[j] += d
            if lo <= n[j] <= hi:
                out.append((SimplePrimitive(j, d), n))
    return out


def sweep_bound(robot, a, b):
    """Upper bound on how far any arm point moves along the segment a -> b."""
    lengths = np.asarray(robot.link_lengths, dtype=float)
    lever = np.cumsum(lengths[::-1])[::-1]
    return np.sum(np.abs(np.asarray(b) - np.asarray(a)) * lever, axis=-1)


def subdivide_segments(robot, a, b, spacing):
    """Sub-states along each segment ``a[i] -> b[i]`` (end exact, start excluded).

    Returns ``(states, seg)`` with ``seg[k]`` the segment index of sub-state ``k``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    bound = sweep_bound(robot, a, b)
    m = np.maximum(1, np.ceil(bound / spacing - 1e-9).astype(int))
    seg = np.repeat(np.arange(len(a)), m)
    # fraction s/m for s = 1..m within each segment
    ends = np.cumsum(m)
    s = np.arange(seg.size) - np.repeat(ends - m, m) + 1
    frac = s / np.repeat(m, m)
    states = a[seg] + frac[:, None] * (b[seg] - a[seg])
    states[ends - 1] = b
    return states, seg


def subdivide_path(robot, path, spacing):
    """Sub-states of ``path[1:]`` such that no arm point moves more than ``spacing``.

    Returns ``(states, owner)``; ``owner[k]`` is the index ``i >= 1`` of the
    path state whose incoming segment contains sub-state ``k``. Each original
    state ``path[i]`` appears exactly as given, as the last sub-state it owns.
    """
    p = np.asarray(path, dtype=float)
    if len(p) < 2:
        return np.empty((0, p.shape[-1] if p.ndim == 2 else robot.dof)), np.empty(0, dtype=int)
    states, seg = subdivide_segments(robot, p[:-1], p[1:], spacing)
    return states, seg + 1


def lattice_key(c, origin, deltas):
    return tuple(int(v) for v in np.rint((np.asarray(c) - origin) / deltas))


def lattice_config(key, origin, deltas):
    """Canonical configuration of a lattice vertex; every caller gets identical floats."""
    return origin + np.asarray(key, dtype=float) * deltas


def ik_candidates(robot, pose, n_grid=180):
    """Every exact IK solution found by gridding the proximal joints.

    The last link is fixed by the goal heading, the two joints before it have
    closed-form elbow-up/elbow-down solutions, and the remaining ``q - 3``
    joints are swept over ``n_grid`` values each. Returns an ``(m, q)`` array
    of solutions inside joint limits (possibly empty).
    """
    q = robot.dof
    if q < 3:
        raise ValueError("ik_candidates needs at least 3 joints")
    gx, gy, gyaw = pose
    bx, by, byaw = robot.base
    L = np.asarray(robot.link_lengths, dtype=float)
    lo, hi = robot.lower, robot.upper
    wrist = np.array([gx - L[-1] * math.cos(gyaw), gy - L[-1] * math.sin(gyaw)])
    n_free = q - 3
    if n_free:
        axes = [np.linspace(lo[j], hi[j], n_grid) for j in range(n_free)]
        prox = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n_free)
    else:
        prox = np.zeros((1, 0))
    phi = byaw + np.cumsum(prox, axis=1)
    elbow = np.tile(np.array([bx, by]), (len(prox), 1))
    if n_free:
        elbow = elbow + np.stack([(L[:n_free] * np.cos(phi)).sum(1), (L[:n_free] * np.sin(phi)).sum(1)], axis=1)
    heading = phi[:, -1] if n_free else np.full(len(prox), byaw)
    a, b = L[q - 3], L[q - 2]
    d = wrist - elbow
    r2 = (d ** 2).sum(1)
    cos2 = (r2 - a * a - b * b) / (2 * a * b)
    ok = np.abs(cos2) <= 1.0
    out = []
    for s in (1.0, -1.0):
        t2 = s * np.arccos(np.clip(cos2, -1, 1))
        t1 = np.arctan2(d[:, 1], d[:, 0]) - np.arctan2(b * np.sin(t2), a + b * np.cos(t2)) - heading
        t1 = np.atleast_1d(wrap_angle(t1))
        t3 = np.atleast_1d(wrap_angle(gyaw - (heading + t1 + t2)))
        sol = np.column_stack([prox, t1, t2, t3])
        keep = ok & np.all((sol >= lo) & (sol <= hi), axis=1)
        out.append(sol[keep])
    sols = np.concatenate(out)
    if len(sols):
        pts, yaw = fk_points(robot, sols)
        err = np.hypot(pts[:, -1, 0] - gx, pts[:, -1, 1] - gy)
        sols = sols[(err <= 1e-6) & (np.abs(wrap_angle(yaw - gyaw)) <= 1e-6)]
    return sols
