"""Two-stage planner: subgoal sampling followed by a time-sliced multi-heuristic search.

Before any AMP fires, the search lives purely in robot configuration space:
object poses never change, so nodes carry only a lattice key and a
configuration. AMPs are generated near the goal, checked cheaply against
immovables, and only the ones that touch movables are ever simulated. Those
found before the time gate are parked in a deferred queue.
"""

import heapq
import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from ..actions import SimplePrimitive
from ..kinematics import lattice_config, lattice_key, satisfies_goal
from ..physics import SolverFailure, simulate_path
from ..scene import WorldState
from ..validity import CheckCounter, build_distance_field, check_configuration, check_phase1, check_phase1_many
from .accounting import EventLog, PlannerClock, PlanStats
from .amp import PHASE2, amp_targets, phase1_amp, get_valid_subgoals, solve_goal_configuration, within_delta
from .heuristics import AnchorHeuristic, JointDistance
from .params import PlannerParams, Variant, make_variant

ANCHOR = 0
# goal nodes sort ahead of every state: a known Phase-2-valid AMP ends the search on the next pop
GOAL_KEY = float("-inf")


@dataclass(eq=False)
class SearchNode:
    key: tuple
    config: np.ndarray
    g: float
    parent: "SearchNode" = None
    action: object = None
    inflations: dict = field(default_factory=dict)  # queue index -> postponed reinsertions
    deferred_once: bool = False
    is_goal: bool = False
    final_poses: dict = None  # set on goal nodes only
    open_in: set = field(default_factory=set)

    def state(self, initial_poses):
        poses = self.final_poses if self.final_poses is not None else initial_poses
        return WorldState(tuple(float(v) for v in self.config), dict(poses))


class SoftDuplicateRegistry:
    """Sources whose simulated AMP failed. Only grows."""

    def __init__(self):
        self.entries = []

    def add(self, c):
        self.entries.append(np.asarray(c, dtype=float).copy())

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def soft_duplicate_check(c, registry, beta):
    """True iff ``c`` is strictly closer than ``beta`` (joint-space L2) to a registered failure."""
    entries = registry.entries if isinstance(registry, SoftDuplicateRegistry) else list(registry)
    if not entries:
        return False
    d = np.linalg.norm(np.asarray(entries, dtype=float) - np.asarray(c, dtype=float), axis=1)
    return bool(np.any(d < beta))


def select_queue(times, nonempty):
    """Non-empty queue with the least cumulative expansion time; lowest index on ties.

    Returns None when every queue is empty.
    """
    best = None
    for i, (t, ok) in enumerate(zip(times, nonempty)):
        if ok and (best is None or t < times[best]):
            best = i
    return best


@dataclass(frozen=True)
class PlanResult:
    success: bool
    status: str  # success | timeout | exhausted | expansion_cap | no_goal_ik | invalid_start
    path: tuple  # WorldState per plan state
    actions: tuple
    cost: float
    stats: PlanStats
    subgoals: tuple = ()
    events: EventLog = None
    x_goal: np.ndarray = None
    reached_subgoal: int = None  # index into subgoals when the plan ends on one

    @property
    def final_state(self):
        return self.path[-1] if self.path else None


class _Open:
    """Binary heap with lazy invalidation."""

    def __init__(self, index):
        self.index = index
        self.heap = []

    def push(self, priority, seq, node, postponed=False):
        heapq.heappush(self.heap, (priority, seq, node, postponed, node.g))

    def _live(self, entry):
        _, _, node, postponed, g = entry
        if postponed:
            return node.inflations.get(self.index, 0) > 0
        return self.index in node.open_in and g == node.g

    def prune(self):
        while self.heap and not self._live(self.heap[0]):
            heapq.heappop(self.heap)
        return bool(self.heap)

    def pop(self):
        self.prune()
        return heapq.heappop(self.heap)


class _Search:
    def __init__(self, scene, goal, params, variant, rng):
        self.scene = scene
        self.goal = goal
        self.params = params
        self.variant = variant
        self.rng = rng
        self.robot = scene.robot
        self.poses = dict(scene.start.objects)
        self.stats = PlanStats()
        self.clock = PlannerClock(params, self.stats)
        self.events = EventLog()
        self.counter = CheckCounter()
        self.dfield = build_distance_field(scene.workspace, scene.objects, self.poses)
        self.origin = np.asarray(scene.start.robot, dtype=float)
        self.deltas = params.deltas_for(self.robot)
        self.seq = itertools.count()
        self.registry = SoftDuplicateRegistry()
        self.nodes = {}
        self.closed_anchor = set()
        self.closed_inad = set()
        self.phase1_cache = {}  # lattice key -> (amp, Phase1Result)
        self.known = {}  # lattice key -> clean outcome or None for a failed simulation
        self.deferred = _Open(-1)
        self.deferred_keys = set()
        self.goal_pending = False

    # -- bookkeeping ---------------------------------------------------------

    def _now(self):
        return self.clock.now()

    def _log(self, kind, **kw):
        self.events.add(kind, time=round(self._now(), 9), **kw)

    def _finish(self, status, node=None):
        s = self.stats
        s.collision_checks = self.counter.configurations
        s.planning_time = self._now()
        s.sim_time = self.clock.sim_time()
        s.wall_time = time.perf_counter() - self.wall0
        self._log("finish", status=status)
        path, actions, cost, reached = (), (), float("inf"), None
        if node is not None:
            chain = []
            while node is not None:
                chain.append(node)
                node = node.parent
            chain.reverse()
            path = tuple(n.state(self.poses) for n in chain)
            actions = tuple(n.action for n in chain[1:])
            cost = float(chain[-1].g)
            for n in chain:
                if n.key in self.phase2_sources:
                    reached = self.phase2_sources[n.key]
        return PlanResult(status == "success", status, path, actions, cost, s, tuple(self.subgoals),
                          self.events, self.x_goal, reached)

    # -- queue insertion ------------------------------------------------------

    def _priority(self, i, node):
        if node.is_goal:
            return GOAL_KEY
        return node.g + self.params.w1 * self.h[i](node.config)

    def _insert(self, node):
        for i, q in enumerate(self.queues):
            if node.is_goal:
                node.open_in.add(i)
                q.push(GOAL_KEY, next(self.seq), node)
                self.goal_pending = True
                continue
            closed = self.closed_anchor if i == ANCHOR else self.closed_inad
            if node.key in closed:
                continue
            node.open_in.add(i)
            q.push(self._priority(i, node), next(self.seq), node)

    def _goal_from_amp(self, node, amp, final_poses):
        goal = SearchNode(("goal", next(self.seq)), np.asarray(amp.target, dtype=float), node.g + amp.cost,
                          parent=node, action=amp, is_goal=True, final_poses=dict(final_poses))
        self._insert(goal)
        self._log("goal_node", key=list(node.key), cost=goal.g)

    # -- AMP handling -----------------------------------------------------------

    def _simulate(self, node, amp):
        self._log("simulate", stage=2, key=list(node.key))
        try:
            out = simulate_path(self.robot, amp.path, self.scene.objects, self.poses, self.scene.workspace,
                                latency=self.params.sim_latency)
        except SolverFailure:
            out = None
        self.clock.charge_sim(2)
        clean = out is not None and out.clean
        self.known[node.key] = out if clean else None
        self._log("sim_result", stage=2, key=list(node.key), clean=clean)
        if clean:
            self._goal_from_amp(node, amp, out.final_poses)
        else:
            self.registry.add(node.config)

    def _simulate_or_postpone(self, node, amp, queue):
        """Simulate now unless soft duplicate detection postpones it (once per node)."""
        if (self.variant.use_dd and not node.deferred_once
                and soft_duplicate_check(node.config, self.registry, self.params.beta)):
            node.deferred_once = True
            node.inflations[queue.index] = node.inflations.get(queue.index, 0) + 1
            self.stats.postponements += 1
            entry_key = self._deferred_key(node) if queue is self.deferred else self._priority(queue.index, node)
            queue.push(entry_key * self.params.postpone_factor, next(self.seq), node, postponed=True)
            self._log("postpone", key=list(node.key), queue=queue.index)
            return
        self._simulate(node, amp)

    def _deferred_key(self, node):
        return node.g + self.h[ANCHOR](node.config)

    def _amp_for(self, node):
        if node.key in self.phase1_cache:
            return self.phase1_cache[node.key]
        fixed = None if self.params.amp_target == "dls" else self.x_goal
        amp, res = phase1_amp(self.robot, node.config, self.goal, self.rng, self.params, self.dfield,
                              self.scene.objects, self.poses, x_goal=fixed, targets=self.targets,
                              clock=self.clock, counter=self.counter)
        self.phase1_cache[node.key] = (amp, res)
        return amp, res

    def _try_amp(self, node, queue):
        if not within_delta(self.robot, node.config, self.goal, self.params.delta):
            return
        amp, res = self._amp_for(node)
        if amp is None or (res is not None and not res.valid):
            return
        if res is None or not res.contacts_movable:
            if node.key not in self.known:
                self.known[node.key] = True
                self._goal_from_amp(node, amp, self.poses)
            return
        if node.key in self.known:
            return  # outcome already known: a clean one put a goal node in OPEN
        if self._now() < self.t_gate:
            if node.key not in self.deferred_keys:
                self.deferred_keys.add(node.key)
                self.stats.deferred += 1
                self.deferred.push(self._deferred_key(node), next(self.seq), node)
                self._log("defer", key=list(node.key))
            return
        self._simulate_or_postpone(node, amp, queue)

    def _drain_deferred(self):
        _, _, node, postponed, _ = self.deferred.pop()
        amp, _ = self.phase1_cache[node.key]
        if postponed:
            node.inflations[-1] -= 1
        if node.key in self.known:
            return
        if postponed:
            self._simulate(node, amp)
        else:
            self._simulate_or_postpone(node, amp, self.deferred)

    # -- expansion ------------------------------------------------------------

    def _successors(self, node):
        cands = []
        for j in range(self.robot.dof):
            for step in (1, -1):
                key = list(node.key)
                key[j] += step
                key = tuple(key)
                c = lattice_config(key, self.origin, self.deltas)
                lo, hi = self.robot.joint_limits[j]
                if not lo <= c[j] <= hi:
                    continue
                g = node.g + float(np.linalg.norm(c - node.config))
                old = self.nodes.get(key)
                if old is not None and old.g <= g:
                    continue
                cands.append((key, c, g, SimplePrimitive(j, float(c[j] - node.config[j]))))
        if not cands:
            return
        self.clock.charge_primitive(len(cands))
        results = check_phase1_many(self.robot, [[node.config, c] for _, c, _, _ in cands], self.dfield,
                                    self.scene.objects, self.poses, self.counter, identify=False)
        for (key, c, g, prim), res in zip(cands, results):
            if not res.valid or res.contacts_movable:
                continue
            succ = self.nodes.get(key)
            if succ is None:
                succ = SearchNode(key, c, g, node, prim)
                self.nodes[key] = succ
            else:
                succ.g, succ.parent, succ.action = g, node, prim
            self._insert(succ)

    def _expand(self, i, entry):
        _, _, node, postponed, _ = entry
        queue = self.queues[i]
        if node.is_goal:
            return node
        self.stats.expansions[i] += 1
        if postponed:
            node.inflations[i] -= 1
            self._log("expand", queue=i, key=list(node.key), postponed=True)
            amp, _ = self.phase1_cache[node.key]
            if node.key not in self.known:
                self._simulate(node, amp)
            return None
        node.open_in.clear()
        (self.closed_anchor if i == ANCHOR else self.closed_inad).add(node.key)
        self._log("expand", queue=i, key=list(node.key), postponed=False)
        if satisfies_goal(self.robot, node.config, self.goal):
            return node
        if node.key in self.phase2_sources:
            sg = self.subgoals[self.phase2_sources[node.key]]
            goal = SearchNode(("goal", next(self.seq)), np.asarray(sg.amp.target, dtype=float),
                              node.g + sg.amp.cost, parent=node, action=sg.amp, is_goal=True,
                              final_poses=dict(sg.outcome.final_poses))
            self._log("subgoal_reached", key=list(node.key))
            return goal
        self._successors(node)
        self._try_amp(node, queue)
        return None

    # -- driver -----------------------------------------------------------------

    def run(self):
        self.wall0 = time.perf_counter()
        p, v = self.params, self.variant
        self.subgoals, self.phase2_sources, self.x_goal = [], {}, None
        self.stats.expansions = [0]
        self.t_gate = 0.0
        start = lattice_config(tuple([0] * self.robot.dof), self.origin, self.deltas)
        if not check_configuration(self.robot, start, self.dfield, self.scene.workspace, self.counter):
            return self._finish("invalid_start")
        self.x_goal = solve_goal_configuration(self.scene, self.goal, self.rng, self.dfield, p.goal_ik_attempts)
        if self.x_goal is None:
            return self._finish("no_goal_ik")
        self.targets = amp_targets(p, self.robot, self.goal, self.dfield, self.x_goal)

        count = v.subgoal_count(p)
        if count > 0:
            self.subgoals = get_valid_subgoals(self.scene, self.goal, p, self.rng, count=count,
                                               simulate=v.simulate_samples, x_goal=self.x_goal,
                                               dfield=self.dfield, clock=self.clock, counter=self.counter,
                                               events=self.events, targets=self.targets)
        for k, sg in enumerate(self.subgoals):
            key = lattice_key(sg.source, self.origin, self.deltas)
            if sg.grade == PHASE2:
                self.phase2_sources.setdefault(key, k)
            elif v.simulate_samples and sg.interacting:
                self.registry.add(sg.source)
                self.known[key] = None
        self.stats.subgoals = len(self.subgoals)
        self.stats.phase2_subgoals = sum(sg.grade == PHASE2 for sg in self.subgoals)
        if not v.zero_t_sim and self.stats.phase2_subgoals > 0:
            self.t_gate = p.t_sim
        self.stats.t_gate = self.t_gate
        self._log("stage1_done", subgoals=len(self.subgoals), phase2=self.stats.phase2_subgoals,
                  t_gate=self.t_gate)

        self.h = [AnchorHeuristic(self.robot, self.dfield, self.goal.position)]
        self.h += [JointDistance(sg.source) for sg in self.subgoals]
        self.queues = [_Open(i) for i in range(len(self.h))]
        self.stats.expansions = [0] * len(self.h)
        times = [0.0] * len(self.h)

        root = SearchNode(tuple([0] * self.robot.dof), start, 0.0)
        self.nodes[root.key] = root
        self._insert(root)
        while True:
            now = self._now()
            if now > p.t_max:
                return self._finish("timeout")
            if self.stats.total_expansions >= p.max_expansions:
                return self._finish("expansion_cap")
            nonempty = [q.prune() for q in self.queues]
            if (not self.goal_pending and self.deferred.prune()
                    and (now >= self.t_gate or not any(nonempty))):
                if now < self.t_gate:
                    self.clock.advance_to(self.t_gate)
                    self._log("idle_until_gate")
                self._drain_deferred()
                continue
            i = select_queue(times, nonempty)
            if i is None:
                return self._finish("exhausted")
            t0 = self._now()
            done = self._expand(i, self.queues[i].pop())
            times[i] += self._now() - t0
            if done is not None:
                return self._finish("success", done)


def plan(scene, goal=None, params=None, variant="SPAMP", rng=None):
    """Plan from the scene's start state to ``goal`` (defaults to the scene goal).

    ``rng`` may be a numpy Generator or an integer seed.
    """
    params = params or PlannerParams()
    if not isinstance(variant, Variant):
        variant = make_variant(variant)
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(0 if rng is None else int(rng))
    return _Search(scene, goal or scene.goal, params, variant, rng).run()
