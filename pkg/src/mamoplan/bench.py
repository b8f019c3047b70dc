"""Batch experiments: paired scene corpora, planner variants, metrics and summaries."""

import csv
import io
import math
import statistics
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .planner import PlannerParams, plan
from .planner.params import VARIANTS, make_variant
from .scene import SceneParams, generate_scene

EASY = "Easy"
DIFFICULT = "Difficult"
EASY_THRESHOLD = 100.0  # synthetic seconds
WORKSPACE_INDEX = {"tabletop": 0, "fridge": 1}
# scene counts used by the scene presets in scene.py
PRESET_COUNTS = {"tabletop": (6, 6), "fridge": (3, 2)}


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run.

    Every ``(seed, workspace, index)`` triple names one scene; all variants
    see that scene and the same initial planner rng stream.
    """

    scenes: dict = field(default_factory=lambda: {"tabletop": 50, "fridge": 50})
    seeds: tuple = (0,)
    variants: tuple = tuple(VARIANTS)
    t_max: float = 1800.0
    max_expansions: int = 20000
    sim_latency: float = 0.0
    params: PlannerParams = None  # base planner parameters; budget fields above win
    scene_overrides: dict = field(default_factory=dict)  # SceneParams fields
    workers: int = 1

    def __post_init__(self):
        if len(self.seeds) < 1:
            raise ValueError("an experiment needs at least one seed")
        if len(self.variants) < 1:
            raise ValueError("an experiment needs at least one variant")
        for v in self.variants:
            make_variant(v)
        for ws, n in self.scenes.items():
            if ws not in WORKSPACE_INDEX:
                raise ValueError(f"unknown workspace {ws!r}")
            if n < 0:
                raise ValueError("scene counts must be non-negative")
        if self.workers < 1:
            raise ValueError("workers >= 1")

    def planner_params(self):
        base = self.params or PlannerParams()
        # a gate past the budget would never open
        return replace(base, t_max=self.t_max, t_sim=min(base.t_sim, self.t_max),
                       max_expansions=self.max_expansions, sim_latency=self.sim_latency)

    def scene_jobs(self):
        """``(scene_id, workspace, scene seed, planner seed)`` in a fixed order."""
        jobs = []
        for s in self.seeds:
            for ws in sorted(self.scenes, key=WORKSPACE_INDEX.get):
                for k in range(self.scenes[ws]):
                    ss = np.random.SeedSequence([int(s), WORKSPACE_INDEX[ws], k])
                    scene_seed, plan_seed = (int(v) for v in ss.generate_state(2))
                    jobs.append((f"{ws}-{s}-{k}", ws, scene_seed, plan_seed))
        return jobs

    def scene_params(self, workspace, seed):
        n_mov, n_imm = PRESET_COUNTS[workspace]
        kw = {"n_movable": n_mov, "n_immovable": n_imm, **self.scene_overrides}
        if workspace == "fridge":
            kw.setdefault("min_goal_distance", 0.2)
        return SceneParams(workspace=workspace, seed=seed, **kw)


@dataclass(frozen=True)
class MetricsRecord:
    scene_id: str
    workspace: str
    variant: str
    success: bool
    status: str
    planning_time: float  # synthetic seconds
    sim_time: float
    sim_calls_stage1: int
    sim_calls_stage2: int
    expansions: int
    collision_checks: int
    path_cost: float
    n_actions: int
    difficulty: str

    def __post_init__(self):
        if self.sim_time > self.planning_time + 1e-9:
            raise ValueError("simulation time exceeds planning time")
        if self.success and not math.isfinite(self.path_cost):
            raise ValueError("a successful run needs a finite path cost")

    @property
    def sim_calls(self):
        return self.sim_calls_stage1 + self.sim_calls_stage2


CSV_HEADER = tuple(f.name for f in fields(MetricsRecord))


def classify_difficulty(scene, params=None, rng=0, threshold=EASY_THRESHOLD, result=None):
    """Easy iff Naive solves ``scene`` in strictly less than ``threshold`` synthetic seconds.

    Pass an existing Naive ``result`` to skip the run.
    """
    if result is None:
        result = plan(scene, params=params, variant="Naive", rng=rng)
    return EASY if result.success and result.stats.planning_time < threshold else DIFFICULT


def _record(scene_id, workspace, variant, result, difficulty):
    s = result.stats
    return MetricsRecord(
        scene_id=scene_id, workspace=workspace, variant=variant, success=bool(result.success),
        status=result.status, planning_time=float(s.planning_time), sim_time=float(s.sim_time),
        sim_calls_stage1=int(s.sim_calls_stage1), sim_calls_stage2=int(s.sim_calls_stage2),
        expansions=int(s.total_expansions), collision_checks=int(s.collision_checks),
        path_cost=float(result.cost) if result.success else math.inf,
        n_actions=len(result.actions), difficulty=difficulty,
    )


def _failed(scene_id, workspace, variant, exc, difficulty=DIFFICULT):
    return MetricsRecord(scene_id, workspace, variant, False, "error:" + type(exc).__name__,
                         0.0, 0.0, 0, 0, 0, 0, math.inf, 0, difficulty)


def run_scene(spec, job, keep_results=False):
    """All variants on one scene. Returns ``(records, results)``.

    Crashes become failure records; they never propagate.
    """
    scene_id, ws, scene_seed, plan_seed = job
    params = spec.planner_params()
    try:
        scene = generate_scene(spec.scene_params(ws, scene_seed))
    except Exception as exc:  # a corpus gap is recorded, not fatal
        return [_failed(scene_id, ws, v, exc) for v in spec.variants], {}
    results, errors = {}, {}
    runs = list(spec.variants)
    if "Naive" not in runs:
        runs.append("Naive")  # difficulty needs it
    for v in runs:
        try:
            results[v] = plan(scene, params=params, variant=v, rng=plan_seed)
        except Exception as exc:
            errors[v] = exc
    naive = results.get("Naive")
    difficulty = classify_difficulty(scene, result=naive) if naive is not None else DIFFICULT
    records = []
    for v in spec.variants:
        if v in results:
            records.append(_record(scene_id, ws, v, results[v], difficulty))
        else:
            records.append(_failed(scene_id, ws, v, errors[v], difficulty))
    kept = {"scene": scene, **{v: results[v] for v in spec.variants if v in results}} if keep_results else {}
    return records, kept


def _run_scene_job(args):
    spec, job = args
    try:
        return run_scene(spec, job)[0]
    except Exception:  # pragma: no cover - run_scene already guards
        traceback.print_exc()
        return [_failed(job[0], job[1], v, RuntimeError("worker crash")) for v in spec.variants]


def run_experiment(spec, keep_results=False):
    """Run every (scene, variant) pair. Returns ``(records, summary_text)``.

    With ``keep_results`` a third element maps scene id to the generated
    scene and each variant's PlanResult (single-process runs only).
    """
    jobs = spec.scene_jobs()
    kept = {}
    if spec.workers > 1 and not keep_results:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            per_scene = list(pool.map(_run_scene_job, [(spec, j) for j in jobs]))
    else:
        per_scene = []
        for job in jobs:
            recs, res = run_scene(spec, job, keep_results)
            per_scene.append(recs)
            if keep_results:
                kept[job[0]] = res
    records = [r for recs in per_scene for r in recs]
    summary = summarize(records)
    if keep_results:
        return records, summary, kept
    return records, summary


# -- serialisation --------------------------------------------------------------

def _cell(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([_cell(getattr(r, name)) for name in CSV_HEADER])
    return buf.getvalue()


def loads_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("not a metrics table: header mismatch")
    types = {f.name: f.type for f in fields(MetricsRecord)}
    out = []
    for row in rows[1:]:
        kw = {}
        for name, cell in zip(CSV_HEADER, row):
            t = types[name]
            if t in (bool, "bool"):
                kw[name] = cell == "1"
            elif t in (int, "int"):
                kw[name] = int(cell)
            elif t in (float, "float"):
                kw[name] = float(cell)
            else:
                kw[name] = cell
        out.append(MetricsRecord(**kw))
    return out


# -- aggregation ----------------------------------------------------------------

def _mean_std(xs):
    if not xs:
        return float("nan"), float("nan")
    if len(xs) == 1:
        return float(xs[0]), 0.0
    return statistics.fmean(xs), statistics.stdev(xs)


def aggregate(records):
    """Per-variant numbers behind the summary, a pure function of the records."""
    out = {}
    for v in dict.fromkeys(r.variant for r in records):
        rs = [r for r in records if r.variant == v]
        row = {"n": len(rs), "success": sum(r.success for r in rs) / len(rs),
               "median_sim_calls": statistics.median(r.sim_calls for r in rs),
               "median_planning_time": statistics.median(r.planning_time for r in rs)}
        for label, group in (("Overall", rs), (EASY, [r for r in rs if r.difficulty == EASY]),
                             (DIFFICULT, [r for r in rs if r.difficulty == DIFFICULT])):
            row[label] = {
                "n": len(group),
                "success": (sum(r.success for r in group) / len(group)) if group else float("nan"),
                "planning": _mean_std([r.planning_time for r in group]),
                "simulation": _mean_std([r.sim_time for r in group]),
            }
        out[v] = row
    return out


def summarize(records):
    agg = aggregate(records)
    lines = ["variant     n  success  med.sims  med.plan(s)  | planning mean±std (Easy / Difficult)  "
             "| simulation mean±std (Easy / Difficult)"]
    for v, row in agg.items():
        e, d = row[EASY], row[DIFFICULT]
        lines.append(
            f"{v:<9s} {row['n']:>3d}  {100 * row['success']:6.1f}%  {row['median_sim_calls']:8.1f}  "
            f"{row['median_planning_time']:11.1f}  | "
            f"{e['planning'][0]:.1f}±{e['planning'][1]:.1f} / {d['planning'][0]:.1f}±{d['planning'][1]:.1f}  | "
            f"{e['simulation'][0]:.1f}±{e['simulation'][1]:.1f} / {d['simulation'][0]:.1f}±{d['simulation'][1]:.1f}"
        )
    labels = {}
    for r in records:
        labels[r.scene_id] = r.difficulty
    n_easy = sum(1 for d in labels.values() if d == EASY)
    lines.append(f"scenes: {len(labels)} ({n_easy} Easy, {len(labels) - n_easy} Difficult)")
    return "\n".join(lines) + "\n"


def spec_to_dict(spec):
    d = asdict(spec)
    d["params"] = (spec.params or PlannerParams()).to_dict()
    return d
