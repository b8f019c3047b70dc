from .accounting import EventLog, PlanStats
from .amp import (PHASE1, PHASE2, Subgoal, amp_targets, generate_amp, get_valid_subgoals, phase1_amp,
                  solve_goal_configuration)
from .heuristics import AnchorHeuristic, JointDistance, bfs_grid
from .params import VARIANTS, PlannerParams, Variant, load_params, make_variant, params_from_dict
from .search import PlanResult, SearchNode, SoftDuplicateRegistry, plan, select_queue, soft_duplicate_check

__all__ = [
    "AnchorHeuristic", "EventLog", "JointDistance", "PHASE1", "PHASE2", "PlanResult", "PlanStats",
    "PlannerParams", "SearchNode", "SoftDuplicateRegistry", "Subgoal", "VARIANTS", "Variant", "amp_targets",
    "bfs_grid", "generate_amp", "get_valid_subgoals", "load_params", "make_variant", "params_from_dict", "phase1_amp", "plan",
    "select_queue", "soft_duplicate_check", "solve_goal_configuration",
]
