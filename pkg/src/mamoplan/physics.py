"""Deterministic quasi-static pushing of discs by a kinematic arm.

Objects move only to resolve penetration: first by the robot links, then by
each other (push chains), iterated to a fixed point. There is no momentum and
no notion of time, so the outcome is a function of the configuration sequence
alone. Constraint checks run at the granularity of the input path states.
"""

import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .geometry import point_segment_distance
from .kinematics import fk_points, subdivide_path
from .scene import ObjectPose

PENETRATION_TOL = 1e-6
MAX_ITERATIONS = 100
SUBSTEP = 0.005


class ViolationKind(str, Enum):
    CONTACT_IMMOVABLE = "ContactImmovable"
    FELL_OFF_WORKSPACE = "FellOffWorkspace"
    EXCESS_VELOCITY = "ExcessVelocity"
    TOPPLED = "Toppled"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    object_id: int
    step: int


@dataclass(frozen=True)
class SimOutcome:
    final_poses: dict
    violations: tuple
    trace: tuple = None  # per path state: {id: ObjectPose}
    sim_steps: int = 0

    @property
    def clean(self):
        return not self.violations


class SolverFailure(RuntimeError):
    """Contact resolution did not reach a fixed point within the iteration cap."""


def _seg_dist(px, py, ax, ay, bx, by):
    """Distance from a point to a segment and the closest point, in plain floats."""
    ux, uy = bx - ax, by - ay
    den = ux * ux + uy * uy
    t = 0.0 if den <= 0.0 else min(max(((px - ax) * ux + (py - ay) * uy) / den, 0.0), 1.0)
    cx, cy = ax + t * ux, ay + t * uy
    return math.hypot(px - cx, py - cy), cx, cy


def _resolve(P, thick, pos, radius, movable, order, cap, dirty):
    """Push discs out of the arm and out of each other, in place.

    ``P`` holds the arm joint points, ``pos`` a list of ``[x, y]`` lists and
    ``order`` the disc indices in push-priority order. Only pairs with a disc
    in ``dirty`` (a set, updated in place) can overlap. Returns
    ``(converged, hits)``; ``hits`` holds index pairs ``(movable, immovable)``
    for pushed discs overlapping an immovable, and ``(None, immovable)`` when
    the arm itself touches an immovable.
    """
    hits = set()
    q = len(P) - 1
    xs = [p[0] for p in P]
    ys = [p[1] for p in P]
    # per-link boxes inflated by thickness, for cheap rejection
    boxes = [(min(xs[j], xs[j + 1]) - thick[j], max(xs[j], xs[j + 1]) + thick[j],
              min(ys[j], ys[j + 1]) - thick[j], max(ys[j], ys[j + 1]) + thick[j]) for j in range(q)]
    n = len(pos)
    for it in range(cap + 1):
        touched = []
        deep = False
        for i in order:
            x, y = pos[i]
            r = radius[i]
            for j in range(q):
                bx0, bx1, by0, by1 = boxes[j]
                if x + r <= bx0 or x - r >= bx1 or y + r <= by0 or y - r >= by1:
                    continue
                d, _, _ = _seg_dist(x, y, xs[j], ys[j], xs[j + 1], ys[j + 1])
                pen = r + thick[j] - d
                if pen > 0.0:
                    if not movable[i]:
                        hits.add((None, i))
                        continue
                    if not touched or touched[-1] != i:
                        touched.append(i)
                    if pen > PENETRATION_TOL:
                        deep = True
        over = []
        for i in sorted(dirty):
            for k in range(n):
                if k == i or (k in dirty and k < i) or not (movable[i] or movable[k]):
                    continue
                a, b = (i, k) if i < k else (k, i)
                if radius[a] + radius[b] - math.hypot(pos[b][0] - pos[a][0], pos[b][1] - pos[a][1]) > PENETRATION_TOL:
                    over.append((a, b))
        if not deep and not over:
            return True, hits
        if it == cap:
            break
        depth = [math.inf] * n
        for i in touched:
            for j in range(q):
                x, y = pos[i]
                d, cx, cy = _seg_dist(x, y, xs[j], ys[j], xs[j + 1], ys[j + 1])
                p = radius[i] + thick[j] - d
                if p > 0.0:
                    if d > 1e-12:
                        nx, ny = (x - cx) / d, (y - cy) / d
                    else:
                        tx, ty = xs[j + 1] - xs[j], ys[j + 1] - ys[j]
                        tn = max(math.hypot(tx, ty), 1e-12)
                        nx, ny = -ty / tn, tx / tn
                    pos[i] = [x + nx * p, y + ny * p]
                    depth[i] = 0
                    dirty.add(i)
        for i, k in sorted(set(over)):
            dx, dy = pos[k][0] - pos[i][0], pos[k][1] - pos[i][1]
            dik = math.hypot(dx, dy)
            p = radius[i] + radius[k] - dik
            if p <= PENETRATION_TOL:
                continue
            nx, ny = (dx / dik, dy / dik) if dik > 1e-12 else (1.0, 0.0)
            if not (movable[i] and movable[k]):
                mover, fixed = (k, i) if movable[k] else (i, k)
                hits.add((mover, fixed))
                sgn = 1.0 if mover == k else -1.0
                pos[mover] = [pos[mover][0] + sgn * nx * p, pos[mover][1] + sgn * ny * p]
                dirty.add(mover)
            elif depth[k] > depth[i]:
                pos[k] = [pos[k][0] + nx * p, pos[k][1] + ny * p]
                depth[k] = min(depth[k], depth[i] + 1)
                dirty.add(k)
            elif depth[i] > depth[k]:
                pos[i] = [pos[i][0] - nx * p, pos[i][1] - ny * p]
                depth[i] = min(depth[i], depth[k] + 1)
                dirty.add(i)
            else:
                pos[i] = [pos[i][0] - nx * p / 2, pos[i][1] - ny * p / 2]
                pos[k] = [pos[k][0] + nx * p / 2, pos[k][1] + ny * p / 2]
                dirty.update((i, k))
    return False, hits


def max_penetration(seg_a, seg_b, thick, pos, radius, movable):
    """Deepest arm-disc or disc-disc overlap involving at least one movable disc."""
    worst = 0.0
    mv = np.flatnonzero(movable)
    if mv.size:
        d = point_segment_distance(pos[mv][:, None, :], seg_a[None], seg_b[None])
        worst = max(worst, float(np.max(radius[mv][:, None] + thick[None, :] - d)))
    n = len(pos)
    if n > 1:
        iu, ju = np.triu_indices(n, 1)
        keep = movable[iu] | movable[ju]
        if keep.any():
            diff = pos[ju[keep]] - pos[iu[keep]]
            dd = np.hypot(diff[:, 0], diff[:, 1])
            worst = max(worst, float(np.max(radius[iu[keep]] + radius[ju[keep]] - dd)))
    return worst


def simulate_path(robot, path, objects, poses, workspace, *, record_trace=False, latency=0.0,
                  substep=SUBSTEP):
    """Push objects along ``path`` (states after the first) and grade the result.

    ``poses`` maps object id to ObjectPose. Stops at the end of the first path
    step that produces a violation; ``final_poses`` then holds the poses at
    that moment. Raises SolverFailure if contacts cannot be resolved and no
    violation explains it.
    """
    if len(path) == 0:
        raise ValueError("path must be non-empty")
    if latency > 0:
        time.sleep(latency)
    objs = sorted(objects, key=lambda o: o.id)
    ids = [o.id for o in objs]
    start_pos = np.array([[poses[i].x, poses[i].y] for i in ids], dtype=float).reshape(-1, 2)
    radius = np.array([o.radius for o in objs], dtype=float)
    movable = np.array([o.movable for o in objs], dtype=bool)
    n = len(objs)
    # lower-friction discs resolve first; ids break ties
    order = sorted(range(n), key=lambda i: (objs[i].friction, objs[i].id))
    thick = robot.thickness
    xmin, ymin, xmax, ymax = workspace.bounds

    states, owner = subdivide_path(robot, path, substep)
    pts, _ = fk_points(robot, states)
    steps_total = len(path) - 1

    def pack(pos):
        return {oid: ObjectPose(float(pos[i, 0]), float(pos[i, 1]), poses[oid].yaw) if moved[i] else poses[oid]
                for i, oid in enumerate(ids)}

    moved = np.zeros(n, dtype=bool)
    k = _next_contact(pts, 0, start_pos, radius, thick)
    if k == len(states):
        # nothing is ever touched, so nothing moves
        trace = tuple(dict(poses) for _ in range(len(path))) if record_trace else None
        return SimOutcome({i: poses[i] for i in ids}, (), trace, steps_total)

    pos = start_pos.copy()
    prev_step_pos = pos.copy()
    trace = [pack(pos)] if record_trace else None
    violations = []
    # step ends are the last sub-state each path step owns
    is_end = np.ones(len(states), dtype=bool)
    is_end[:-1] = owner[1:] != owner[:-1]

    def finish_step(step):
        nonlocal prev_step_pos
        disp = np.hypot(*(pos - prev_step_pos).T)
        for i in np.flatnonzero(movable & (disp > 0.0)):
            o = objs[i]
            if o.constraints.must_stay_in_workspace and not (xmin <= pos[i, 0] <= xmax and ymin <= pos[i, 1] <= ymax):
                violations.append(Violation(ViolationKind.FELL_OFF_WORKSPACE, o.id, step))
            if disp[i] > o.constraints.max_step_displacement:
                violations.append(Violation(ViolationKind.EXCESS_VELOCITY, o.id, step))
            if disp[i] > o.topple_limit:
                violations.append(Violation(ViolationKind.TOPPLED, o.id, step))
        prev_step_pos = pos.copy()
        if record_trace:
            trace.append(pack(pos))

    def skip_to(a, b):
        # sub-states a..b-1 touch nothing; close the steps that end among them
        for e in np.flatnonzero(is_end[a:b]):
            finish_step(int(owner[a + e]))
            if violations:
                return False
        return True

    if not skip_to(0, k):
        k = len(states)
    thick_l = [float(t) for t in thick]
    radius_l = radius.tolist()
    movable_l = movable.tolist()
    first = True
    while k < len(states):
        step = int(owner[k])
        pl = pos.tolist()
        dirty = set(range(n)) if first else set()
        first = False
        converged, hits = _resolve(pts[k].tolist(), thick_l, pl, radius_l, movable_l, order, MAX_ITERATIONS, dirty)
        changed = pl != pos.tolist()
        if changed:
            pos = np.array(pl, dtype=float).reshape(-1, 2)
            moved |= np.any(pos != start_pos, axis=1)
        for mover, fixed in sorted(hits, key=lambda h: (-1 if h[0] is None else h[0], h[1])):
            culprit = fixed if mover is None else mover
            violations.append(Violation(ViolationKind.CONTACT_IMMOVABLE, ids[culprit], step))
        if not converged and not violations:
            raise SolverFailure(f"contact resolution did not converge at path step {step}")
        if violations:
            break
        if is_end[k]:
            finish_step(step)
            if violations:
                break
        k += 1
        if k < len(states) and not hits and not changed:
            nxt = _next_contact(pts, k, pos, radius, thick)
            if nxt > k:
                if not skip_to(k, nxt):
                    break
                k = nxt
    final = pack(pos)
    return SimOutcome(final, tuple(_dedupe(violations)), tuple(trace) if record_trace else None, steps_total)


def _next_contact(pts, k, pos, radius, thick, chunk=256):
    """First sub-state index >= k at which the arm touches any disc at ``pos``; len if none."""
    m = len(pts)
    if len(pos) == 0:
        return m
    while k < m:
        seg = pts[k:k + chunk]
        d = point_segment_distance(pos[None, None, :, :], seg[:, :-1, None, :], seg[:, 1:, None, :])
        touching = np.any(d < radius[None, None, :] + thick[None, :, None], axis=(1, 2))
        hit = np.flatnonzero(touching)
        if hit.size:
            return k + int(hit[0])
        k += chunk
    return m


def _dedupe(vs):
    seen, out = set(), []
    for v in vs:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out
