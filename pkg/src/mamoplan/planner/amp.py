"""Adaptive motion primitives and stage-1 subgoal sampling."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..actions import AMP
from ..kinematics import (ee_position, ik_candidates, interpolate, inverse_kinematics, lattice_config,
                          lattice_key, satisfies_goal)
from ..physics import SimOutcome, SolverFailure, simulate_path
from ..scene import GoalSpec
from ..validity import build_distance_field, check_configuration, check_phase1, evaluate_states

PHASE1 = "Phase1"
PHASE2 = "Phase2"


@dataclass(frozen=True, eq=False)
class Subgoal:
    source: np.ndarray  # lattice configuration the AMP starts from
    amp: AMP
    grade: str
    outcome: SimOutcome = None
    sample_index: int = -1
    interacting: bool = False

    def __post_init__(self):
        if self.grade == PHASE2 and (self.outcome is None or self.outcome.violations):
            raise ValueError("a Phase2 subgoal needs a violation-free outcome")


def within_delta(robot, c, goal, delta):
    p = ee_position(robot, c)
    return math.hypot(p[0] - goal.pose[0], p[1] - goal.pose[1]) <= delta


def generate_amp(robot, c, goal, rng, params, x_goal=None, targets=None):
    """Straight joint-space primitive from ``c`` to a goal configuration, or None.

    A non-empty ``targets`` array wins: the solution nearest ``c`` is used.
    Next ``x_goal`` fixes the target; failing both, IK is solved from ``c``.
    """
    c = np.asarray(c, dtype=float)
    if not within_delta(robot, c, goal, params.delta):
        return None
    if satisfies_goal(robot, c, goal):
        return AMP(c.copy(), [c.copy()])
    target = x_goal
    if targets is not None and len(targets):
        target = _nearest(targets, c)
    if target is None:
        target = inverse_kinematics(robot, goal, c, rng)
        if target is None:
            return None
    target = np.asarray(target, dtype=float)
    return AMP(target.copy(), interpolate(c, target, params.amp_step))


def phase1_amp(robot, c, goal, rng, params, dfield, objects, poses, *, x_goal=None, targets=None,
               clock=None, counter=None):
    """An AMP from ``c`` and its Phase 1 result, ``(amp, result)``.

    With a target set the ``amp_ik_tries`` nearest solutions are tried in
    order and the first Phase-1-valid primitive is kept. Each check is
    charged to ``clock``. ``result`` is None for a degenerate primitive.
    """
    c = np.asarray(c, dtype=float)
    if targets is not None and len(targets) and within_delta(robot, c, goal, params.delta) \
            and not satisfies_goal(robot, c, goal):
        order = np.argsort(np.linalg.norm(targets - c, axis=1), kind="stable")[:params.amp_ik_tries]
        candidates = [targets[i] for i in order]
    else:
        candidates = [None]
    amp = res = None
    for target in candidates:
        if target is None:
            amp = generate_amp(robot, c, goal, rng, params, x_goal=x_goal)
        else:
            amp = AMP(target.copy(), interpolate(c, target, params.amp_step))
        if amp is None or len(amp.path) < 2:
            return amp, None
        if clock is not None:
            clock.charge_amp()
        res = check_phase1(robot, amp.path, dfield, objects, poses, counter)
        if res.valid:
            break
    return amp, res


def valid_ik_solutions(robot, pose, dfield, n_grid=180):
    """Enumerated IK solutions of ``pose`` that pass the single-configuration check."""
    if robot.dof < 3:
        return np.empty((0, robot.dof))
    sols = ik_candidates(robot, pose, n_grid)
    if not len(sols):
        return sols
    ok, _ = evaluate_states(robot, sols, dfield)
    return sols[ok]


def _nearest(sols, ref):
    return sols[int(np.argmin(np.linalg.norm(sols - ref, axis=1)))].copy()


def solve_goal_configuration(scene, goal, rng, dfield, attempts=10):
    """A collision-free IK solution of the goal, the one nearest the start configuration.

    Falls back to damped least squares from random seeds for arms too short
    to enumerate.
    """
    robot = scene.robot
    start = np.asarray(scene.start.robot, dtype=float)
    sols = valid_ik_solutions(robot, goal.pose, dfield)
    if len(sols):
        return _nearest(sols, start)
    seed = start
    for _ in range(attempts):
        c = inverse_kinematics(robot, goal, seed, rng)
        if c is not None and check_configuration(robot, c, dfield, scene.workspace):
            return c
        seed = rng.uniform(robot.lower, robot.upper)
    return None


def _sample_source(robot, goal, params, rng, origin, deltas, dfield, x_goal):
    rad = params.delta * math.sqrt(rng.uniform())
    ang = rng.uniform(-math.pi, math.pi)
    yaw = goal.pose[2] + rng.uniform(-math.pi / 4, math.pi / 4)
    pose = (goal.pose[0] + rad * math.cos(ang), goal.pose[1] + rad * math.sin(ang), yaw)
    sols = valid_ik_solutions(robot, pose, dfield, n_grid=90)
    if len(sols):
        c = _nearest(sols, x_goal)
    elif robot.dof >= 3:
        return None  # enumeration is exhaustive up to its grid
    else:
        c = inverse_kinematics(robot, GoalSpec(pose), rng.uniform(robot.lower, robot.upper), rng, restarts=2)
        if c is None:
            return None
    return lattice_config(lattice_key(c, origin, deltas), origin, deltas)


def amp_targets(params, robot, goal, dfield, x_goal):
    """Target set handed to ``generate_amp`` under ``params.amp_target``."""
    if params.amp_target == "nearest":
        sols = valid_ik_solutions(robot, goal.pose, dfield)
        return sols if len(sols) else None
    return None


def get_valid_subgoals(scene, goal, params, rng, *, count=None, simulate=True, x_goal=None,
                       dfield=None, clock=None, counter=None, events=None, targets=None):
    """Sample Phase-1-valid AMP sources near the goal and grade them.

    With ``simulate`` the first ``m_samples`` valid samples are simulated
    concurrently and up to ``count`` (default ``n_subgoals``) are returned,
    Phase2 ones first, each group in sample order. Without it only ``count``
    samples are drawn and interacting ones stay graded Phase1.
    """
    robot = scene.robot
    n_keep = params.n_subgoals if count is None else count
    if n_keep <= 0:
        return []
    n_samples = params.m_samples if simulate else n_keep
    if dfield is None:
        dfield = build_distance_field(scene.workspace, scene.objects, scene.start.objects)
    if x_goal is None:
        x_goal = solve_goal_configuration(scene, goal, rng, dfield, params.goal_ik_attempts)
        if x_goal is None:
            return []
    if targets is None:
        targets = amp_targets(params, robot, goal, dfield, x_goal)
    fixed = None if params.amp_target == "dls" else x_goal
    origin = np.asarray(scene.start.robot, dtype=float)
    deltas = params.deltas_for(robot)
    poses = scene.start.objects

    found = []  # (sample index, source, amp, phase1 result)
    budget = params.sample_budget_factor * n_samples
    for attempt in range(budget):
        if len(found) >= n_samples:
            break
        src = _sample_source(robot, goal, params, rng, origin, deltas, dfield, x_goal)
        if src is None or not within_delta(robot, src, goal, params.delta):
            continue
        if clock is not None:
            clock.charge_primitive()
        if not check_configuration(robot, src, dfield, scene.workspace, counter):
            continue
        amp, res = phase1_amp(robot, src, goal, rng, params, dfield, scene.objects, poses,
                              x_goal=fixed, targets=targets, clock=clock, counter=counter)
        if amp is None or (res is not None and not res.valid):
            continue
        found.append((attempt, src, amp, res))
    if events is not None:
        events.add("stage1_samples", found=len(found), wanted=n_samples)

    def run(item):
        _, _, amp, _ = item
        try:
            return simulate_path(robot, amp.path, scene.objects, poses, scene.workspace,
                                 latency=params.sim_latency)
        except SolverFailure:
            return None

    interacting = [f for f in found if f[3] is not None and f[3].contacts_movable]
    outcomes = {}
    if simulate and interacting:
        with ThreadPoolExecutor(max_workers=len(interacting)) as pool:
            results = list(pool.map(run, interacting))
        if clock is not None:
            clock.charge_sim(1, len(interacting))
        outcomes = {item[0]: out for item, out in zip(interacting, results)}

    graded = []
    for idx, src, amp, res in sorted(found, key=lambda f: f[0]):
        touching = res is not None and res.contacts_movable
        if not touching:
            out = SimOutcome(dict(poses), (), None, max(len(amp.path) - 1, 0))
            graded.append(Subgoal(src, amp, PHASE2, out, idx, False))
            continue
        out = outcomes.get(idx)
        if out is not None and out.clean:
            graded.append(Subgoal(src, amp, PHASE2, out, idx, True))
        else:
            graded.append(Subgoal(src, amp, PHASE1, out, idx, True))
        if events is not None and simulate:
            events.add("simulate", stage=1, sample=idx, clean=bool(out is not None and out.clean))
    ranked = [s for s in graded if s.grade == PHASE2] + [s for s in graded if s.grade == PHASE1]
    return ranked[:n_keep]
