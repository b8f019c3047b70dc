import json
import time
from dataclasses import asdict, dataclass, field


@dataclass
class PlanStats:
    expansions: list = field(default_factory=list)  # per queue, anchor first
    collision_checks: int = 0  # configurations checked, sub-states included
    amp_evaluations: int = 0
    primitive_evaluations: int = 0
    sim_calls_stage1: int = 0
    sim_calls_stage2: int = 0
    postponements: int = 0
    deferred: int = 0
    subgoals: int = 0
    phase2_subgoals: int = 0
    t_gate: float = 0.0
    planning_time: float = 0.0  # on the planner clock
    sim_time: float = 0.0
    wall_time: float = 0.0

    @property
    def sim_calls(self):
        return self.sim_calls_stage1 + self.sim_calls_stage2

    @property
    def total_expansions(self):
        return int(sum(self.expansions))

    def to_dict(self):
        d = asdict(self)
        d["sim_calls"] = self.sim_calls
        return d


class PlannerClock:
    """Cost accounting that doubles as the planner's notion of elapsed time.

    In synthetic mode time advances only through charged events, so results
    do not depend on the machine. Wall mode reads a monotonic clock.
    """

    def __init__(self, params, stats):
        self.params = params
        self.stats = stats
        self.wall = params.clock == "wall"
        self._t0 = time.perf_counter()
        self._idle = 0.0

    def charge_amp(self, n=1):
        self.stats.amp_evaluations += n

    def charge_primitive(self, n=1):
        self.stats.primitive_evaluations += n

    def charge_sim(self, stage, n=1):
        if stage == 1:
            self.stats.sim_calls_stage1 += n
        else:
            self.stats.sim_calls_stage2 += n

    def advance_to(self, t):
        """Idle until ``t``; only meaningful for the synthetic clock."""
        now = self.now()
        if t > now:
            self._idle += t - now

    def sim_time(self):
        return self.stats.sim_calls * self.params.sim_cost

    def synthetic(self):
        p, s = self.params, self.stats
        return (s.amp_evaluations * p.amp_check_cost
                + s.primitive_evaluations * p.primitive_check_cost
                + self.sim_time() + self._idle)

    def now(self):
        if self.wall:
            return time.perf_counter() - self._t0 + self._idle
        return self.synthetic()


class EventLog:
    def __init__(self):
        self.records = []

    def add(self, kind, **fields):
        rec = {"event": kind}
        rec.update(fields)
        self.records.append(rec)

    def of(self, kind):
        return [r for r in self.records if r["event"] == kind]

    def dumps(self):
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in self.records)
