"""Search heuristics: workspace BFS to the goal and joint-space distance to a subgoal."""

from collections import deque

import numpy as np

from ..kinematics import ee_position

# added to the straight-line distance when the end-effector cell has no BFS value
UNREACHABLE_PENALTY = 10.0


def bfs_grid(dfield, goal_xy, clearance):
    """4-connected BFS distances (m) from the goal cell over cells with field > clearance.

    Unreached cells hold ``inf``. The goal cell is always treated as free.
    """
    free = dfield.grid > clearance
    ny, nx = free.shape
    dist = np.full((ny, nx), np.inf)
    start = dfield.cell_of(*goal_xy)
    if start is None:
        return dist
    free[start] = True
    steps = np.full((ny, nx), -1, dtype=np.int64)
    steps[start] = 0
    todo = deque([start])
    while todo:
        j, i = todo.popleft()
        s = steps[j, i] + 1
        for dj, di in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = j + dj, i + di
            if 0 <= a < ny and 0 <= b < nx and free[a, b] and steps[a, b] < 0:
                steps[a, b] = s
                todo.append((a, b))
    reached = steps >= 0
    dist[reached] = steps[reached] * dfield.resolution
    return dist


class AnchorHeuristic:
    def __init__(self, robot, dfield, goal_xy):
        self.robot = robot
        self.dfield = dfield
        self.goal_xy = np.asarray(goal_xy, dtype=float)
        self.grid = bfs_grid(dfield, goal_xy, float(np.max(robot.thickness)))

    def __call__(self, c):
        p = ee_position(self.robot, c)
        cell = self.dfield.cell_of(p[0], p[1])
        v = self.grid[cell] if cell is not None else np.inf
        if np.isfinite(v):
            return float(v)
        return float(np.hypot(*(p - self.goal_xy))) + UNREACHABLE_PENALTY


class JointDistance:
    def __init__(self, target):
        self.target = np.asarray(target, dtype=float)

    def __call__(self, c):
        return float(np.linalg.norm(np.asarray(c) - self.target))
