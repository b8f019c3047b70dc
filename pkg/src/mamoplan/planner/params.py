import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


@dataclass(frozen=True)
class PlannerParams:
    delta: float = 0.2  # end-effector radius (m) inside which AMPs are generated
    beta: float = 0.5  # soft-duplicate radius in joint space (rad)
    t_sim: float = 30.0  # planning time (s) before simulation of Phase-1 AMPs is allowed
    t_max: float = 1800.0
    n_subgoals: int = 3
    m_samples: int = 8
    w1: float = 10.0
    w2: float = 2.0
    amp_step: float = 0.05  # rad, infinity norm
    primitive_deltas: tuple = None  # per-joint rad; None -> 4 deg proximal, 7 deg distal
    max_expansions: int = 20000
    sample_budget_factor: int = 50
    # synthetic clock, seconds per event
    amp_check_cost: float = 0.030
    primitive_check_cost: float = 0.0015
    sim_cost: float = 1.5
    clock: str = "synthetic"  # or "wall"
    amp_target: str = "nearest"  # nearest | fixed | dls
    amp_ik_tries: int = 3
    sim_latency: float = 0.0
    goal_ik_attempts: int = 10
    postpone_factor: float = 2.0

    def __post_init__(self):
        problems = []
        if self.delta <= 0:
            problems.append("delta > 0")
        if self.beta <= 0:
            problems.append("beta > 0")
        if not 0 <= self.t_sim <= self.t_max:
            problems.append("0 <= t_sim <= t_max")
        if self.n_subgoals > self.m_samples:
            problems.append("n_subgoals <= m_samples")
        if self.w1 < 1 or self.w2 < 1:
            problems.append("w1 >= 1 and w2 >= 1")
        if self.amp_step <= 0:
            problems.append("amp_step > 0")
        if self.clock not in ("synthetic", "wall"):
            problems.append("clock in {synthetic, wall}")
        if self.amp_ik_tries < 1:
            problems.append("amp_ik_tries >= 1")
        if self.amp_target not in ("nearest", "fixed", "dls"):
            problems.append("amp_target in {nearest, fixed, dls}")
        if problems:
            raise ValueError("invalid planner parameters: " + ", ".join(problems))

    def deltas_for(self, robot):
        if self.primitive_deltas is not None:
            if len(self.primitive_deltas) != robot.dof:
                raise ValueError("primitive_deltas: one entry per joint required")
            return np.asarray(self.primitive_deltas, dtype=float)
        return np.array([math.radians(4.0) if j < 2 else math.radians(7.0) for j in range(robot.dof)])

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items() if v is not None}


def params_from_dict(d, base=None):
    base = base or PlannerParams()
    known = {f.name for f in fields(PlannerParams)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown planner parameters: {sorted(unknown)}")
    clean = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()}
    return replace(base, **clean)


def load_params(path):
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return params_from_dict(doc.get("planner", doc))


@dataclass(frozen=True)
class Variant:
    name: str
    n_subgoals: int  # 0, 1 or params.n_subgoals (marked by -1)
    simulate_samples: bool
    use_dd: bool
    zero_t_sim: bool

    def subgoal_count(self, params):
        return params.n_subgoals if self.n_subgoals < 0 else self.n_subgoals


VARIANTS = {
    "SPAMP": Variant("SPAMP", -1, True, True, False),
    "Naive": Variant("Naive", 0, False, False, True),
    "Naive+DD": Variant("Naive+DD", 0, False, True, True),
    "SubG": Variant("SubG", 1, False, False, True),
    "SubG+DD": Variant("SubG+DD", 1, False, True, True),
    "Phase1": Variant("Phase1", -1, False, True, True),
}


def make_variant(name):
    try:
        return VARIANTS[name]
    except KeyError:
        raise ValueError(f"unknown planner variant {name!r}; choose from {sorted(VARIANTS)}") from None
