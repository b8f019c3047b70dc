"""Phase 1 action checking: distance field over immovable obstacles plus exact movable contacts.

A configuration is valid when joints are in limits, every link capsule lies
inside the workspace, non-adjacent links do not overlap, and points sampled
one grid cell apart along each link clear the immovable-obstacle distance field by more than the
link thickness. Paths are checked on sub-states dense enough that no arm
point moves more than half a grid cell between consecutive checks.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import point_segment_distance, segment_segment
from .kinematics import fk_points, subdivide_path, subdivide_segments

FIELD_CAP = 10.0
# slack on top of link thickness; covers bilinear interpolation error of the field
FIELD_MARGIN = 0.001


@dataclass(frozen=True, eq=False)
class DistanceField:
    grid: np.ndarray  # (ny, nx) distance from cell centre to nearest immovable surface
    resolution: float
    origin: tuple
    bounds: tuple

    def sample(self, points):
        """Bilinear interpolation of the field at ``points`` (..., 2), clamped to the grid."""
        p = np.asarray(points, dtype=float)
        ny, nx = self.grid.shape
        u = np.clip((p[..., 0] - self.origin[0]) / self.resolution - 0.5, 0.0, nx - 1)
        v = np.clip((p[..., 1] - self.origin[1]) / self.resolution - 0.5, 0.0, ny - 1)
        i = np.minimum(u.astype(np.intp), max(nx - 2, 0))
        j = np.minimum(v.astype(np.intp), max(ny - 2, 0))
        fu = u - i
        fv = v - j
        g = self.grid
        i1 = np.minimum(i + 1, nx - 1)
        j1 = np.minimum(j + 1, ny - 1)
        top = g[j, i] * (1.0 - fu) + g[j, i1] * fu
        bottom = g[j1, i] * (1.0 - fu) + g[j1, i1] * fu
        return top * (1.0 - fv) + bottom * fv

    def cell_of(self, x, y):
        ny, nx = self.grid.shape
        i = int(np.floor((x - self.origin[0]) / self.resolution))
        j = int(np.floor((y - self.origin[1]) / self.resolution))
        if 0 <= i < nx and 0 <= j < ny:
            return j, i
        return None

    def cell_centers(self):
        ny, nx = self.grid.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.resolution
        return np.meshgrid(xs, ys)


@dataclass
class CheckCounter:
    configurations: int = 0
    phase1_calls: int = 0


@dataclass(frozen=True)
class Phase1Result:
    valid: bool
    contacts_movable: bool
    contacted_ids: frozenset = field(default_factory=frozenset)
    first_violation: tuple = None  # (path index, immovable id or None)

    @property
    def status(self):
        return "Valid" if self.valid else "Invalid"


def build_distance_field(workspace, objects, poses):
    """Exact Euclidean distance from each cell centre to the nearest immovable disc surface."""
    xmin, ymin, xmax, ymax = workspace.bounds
    res = workspace.grid_resolution
    nx = max(1, int(round((xmax - xmin) / res)))
    ny = max(1, int(round((ymax - ymin) / res)))
    xs = xmin + (np.arange(nx) + 0.5) * res
    ys = ymin + (np.arange(ny) + 0.5) * res
    X, Y = np.meshgrid(xs, ys)
    grid = np.full((ny, nx), FIELD_CAP)
    for o in objects:
        if o.movable:
            continue
        p = poses[o.id]
        d = np.hypot(X - p.x, Y - p.y) - o.radius
        np.minimum(grid, np.maximum(d, 0.0), out=grid)
    return DistanceField(grid, res, (xmin, ymin), tuple(workspace.bounds))


@lru_cache(maxsize=32)
def _sample_weights(lengths, spacing):
    """Weights mapping joint points (q+1) to link sample points, plus link owner per sample."""
    rows, owner = [], []
    q = len(lengths)
    for j, L in enumerate(lengths):
        f = np.linspace(0.0, 1.0, int(np.ceil(L / spacing)) + 1)
        w = np.zeros((f.size, q + 1))
        w[:, j] = 1.0 - f
        w[:, j + 1] = f
        rows.append(w)
        owner.append(np.full(f.size, j))
    return np.concatenate(rows), np.concatenate(owner)


def _sample_points(robot, pts, spacing):
    """Points along every link, spaced at most ``spacing``: returns (points (m, P, 2), link index (P,))."""
    w, owner = _sample_weights(tuple(float(v) for v in robot.link_lengths), float(spacing))
    return np.matmul(w, pts), owner


def _nonadjacent_pairs(q):
    return [(i, j) for i in range(q) for j in range(i + 2, q)]


def evaluate_states(robot, states, dfield, movables=()):
    """Vectorised validity of many configurations.

    ``movables`` is a sequence of ``(id, x, y, radius)``. Returns
    ``(valid (m,), contacts (m, n_movable))``.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    m = states.shape[0]
    thick = robot.thickness
    valid = np.all((states >= robot.lower) & (states <= robot.upper), axis=1)
    pts, _ = fk_points(robot, states)
    xmin, ymin, xmax, ymax = dfield.bounds
    a, b = pts[:, :-1, :], pts[:, 1:, :]
    for end in (a, b):
        inside = ((end[..., 0] >= xmin + thick) & (end[..., 0] <= xmax - thick)
                  & (end[..., 1] >= ymin + thick) & (end[..., 1] <= ymax - thick))
        valid &= np.all(inside, axis=1)
    pairs = _nonadjacent_pairs(robot.dof)
    if pairs:
        I, J = (np.array(ix) for ix in zip(*pairs))
        d = segment_segment(a[:, I], b[:, I], a[:, J], b[:, J])
        valid &= np.all(d >= thick[I] + thick[J], axis=1)
    samples, owner = _sample_points(robot, pts, dfield.resolution)
    clear = dfield.sample(samples) > thick[owner] + FIELD_MARGIN
    valid &= np.all(clear, axis=1)
    if len(movables):
        mv = np.asarray([(x, y) for _, x, y, _ in movables], dtype=float)
        mr = np.asarray([r for _, _, _, r in movables], dtype=float)
        d = point_segment_distance(mv[None, None, :, :], a[:, :, None, :], b[:, :, None, :])
        contacts = np.any(d < mr[None, None, :] + thick[None, :, None], axis=1)
    else:
        contacts = np.zeros((m, 0), dtype=bool)
    return valid, contacts


def check_configuration(robot, c, dfield, workspace=None, counter=None):
    """Joint limits, workspace containment, self-collision and immovable clearance for one state."""
    if counter is not None:
        counter.configurations += 1
    valid, _ = evaluate_states(robot, np.asarray(c, dtype=float)[None, :], dfield)
    return bool(valid[0])


def movable_table(objects, poses):
    return [(o.id, poses[o.id].x, poses[o.id].y, o.radius) for o in objects if o.movable]


def _nearest_immovable(robot, c, objects, poses):
    pts, _ = fk_points(robot, np.asarray(c))
    best, best_id = np.inf, None
    for o in objects:
        if o.movable:
            continue
        p = poses[o.id]
        d = point_segment_distance(np.array([p.x, p.y]), pts[:-1], pts[1:])
        gap = float(np.min(d - robot.thickness)) - o.radius
        if gap < best:
            best, best_id = gap, o.id
    if best_id is not None and best <= FIELD_MARGIN + 0.01:
        return best_id
    return None


def check_phase1_many(robot, paths, dfield, objects, poses, counter=None, identify=True):
    """Phase 1 results for several paths, evaluated in a single batch.

    ``identify=False`` skips naming the obstacle behind a failure.
    """
    movs = movable_table(objects, poses)
    spacing = dfield.resolution / 2
    starts, ends, path_of, seg_index = [], [], [], []
    for n, path in enumerate(paths):
        p = np.asarray(path, dtype=float)
        if len(p) >= 2:
            starts.append(p[:-1])
            ends.append(p[1:])
            path_of.append(np.full(len(p) - 1, n))
            seg_index.append(np.arange(1, len(p)))
    if counter is not None:
        counter.phase1_calls += len(paths)
    if not starts:
        return [Phase1Result(True, False) for _ in paths]
    states, seg = subdivide_segments(robot, np.concatenate(starts), np.concatenate(ends), spacing)
    owner_all = np.concatenate(seg_index)[seg]
    which = np.concatenate(path_of)[seg]
    if counter is not None:
        counter.configurations += len(states)
    valid, contacts = evaluate_states(robot, states, dfield, movs)
    sizes = np.bincount(which, minlength=len(paths))
    out, k = [], 0
    ids = np.array([mid for mid, *_ in movs], dtype=int)
    for n in sizes:
        v = valid[k:k + n]
        ct = contacts[k:k + n]
        owner = owner_all[k:k + n]
        k0, k = k, k + n
        if n == 0:
            out.append(Phase1Result(True, False))
            continue
        bad = np.flatnonzero(~v)
        if bad.size:
            first = int(bad[0])
            # contacts are only meaningful up to the failure
            hit = ct[:first].any(axis=0) if first else np.zeros(len(movs), dtype=bool)
            culprit = _nearest_immovable(robot, states[k0 + first], objects, poses) if identify else None
            out.append(Phase1Result(False, False, frozenset(int(i) for i in ids[hit]),
                                    (int(owner[first]), culprit)))
        else:
            hit = ct.any(axis=0)
            out.append(Phase1Result(True, bool(hit.any()), frozenset(int(i) for i in ids[hit])))
    return out


def check_phase1(robot, path, dfield, objects, poses, counter=None, chunk=64):
    """Check every state after the first, in order, including the final one.

    Sub-states are evaluated in chunks so a path stops costing work at its
    first failure.
    """
    if len(path) == 0:
        raise ValueError("path must be non-empty")
    movs = movable_table(objects, poses)
    ids = np.array([mid for mid, *_ in movs], dtype=int)
    states, owner = subdivide_path(robot, path, dfield.resolution / 2)
    if counter is not None:
        counter.phase1_calls += 1
    hit = np.zeros(len(movs), dtype=bool)
    for k in range(0, len(states), chunk):
        v, ct = evaluate_states(robot, states[k:k + chunk], dfield, movs)
        if counter is not None:
            counter.configurations += len(v)
        bad = np.flatnonzero(~v)
        if bad.size:
            first = int(bad[0])
            hit |= ct[:first].any(axis=0)
            return Phase1Result(False, False, frozenset(int(i) for i in ids[hit]),
                                (int(owner[k + first]), _nearest_immovable(robot, states[k + first], objects, poses)))
        hit |= ct.any(axis=0)
    return Phase1Result(True, bool(hit.any()), frozenset(int(i) for i in ids[hit]))
