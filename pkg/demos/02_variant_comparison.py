"""
Planner variants on a small generated corpus
============================================

Every variant sees the same scenes and the same random stream. The table
shows how often each one succeeds and how many simulator calls it needs;
holding simulation back until subgoals are known keeps SPAMP's count low.

Run: python3 demos/02_variant_comparison.py [n_scenes]
"""
import statistics
import sys

from mamoplan import bench
from mamoplan.planner import PlannerParams

n = int(sys.argv[1]) if len(sys.argv) > 1 else 6
spec = bench.ExperimentSpec(scenes={"tabletop": n}, t_max=60.0, max_expansions=5000,
                            params=PlannerParams(t_sim=10.0))
records, summary = bench.run_experiment(spec)
print(summary)

by_variant = {}
for r in records:
    by_variant.setdefault(r.variant, []).append(r)
print("variant    median sims   per-scene sims")
for v, rs in by_variant.items():
    print(f"{v:<9s}  {statistics.median(r.sim_calls for r in rs):11.1f}   {[r.sim_calls for r in rs]}")
