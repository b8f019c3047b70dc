"""Command-line interface: gen, plan, bench, replay and render."""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import bench
from .planfile import PlanFileError, from_result, dumps_plan, load_plan, replay
from .planner import PlannerParams, load_params, plan
from .planner.params import VARIANTS
from .render import RenderSpec, render_svg
from .scene import SceneError, SceneParams, dumps_scene, generate_scene, load_scene

EXIT_OK = 0
EXIT_PLAN_FAILED = 2
EXIT_BAD_INPUT = 3
EXIT_REPLAY_VIOLATION = 4


class InputError(Exception):
    pass


def _shared():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--params", metavar="FILE", help="planner parameters as TOML")
    p.add_argument("--variant", default=None,
                   help="planner variant: " + ", ".join(VARIANTS) + " (bench takes a comma list)")
    p.add_argument("--sim-latency", type=float, default=0.0, metavar="MS",
                   help="sleep per simulator call, in milliseconds")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    return p


def build_parser():
    shared = _shared()
    ap = argparse.ArgumentParser(prog="mamoplan", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[shared], help="generate a random scene")
    g.add_argument("--workspace", choices=("tabletop", "fridge"), default="tabletop")
    g.add_argument("--movable", type=int, default=None, help="number of movable discs")
    g.add_argument("--immovable", type=int, default=None, help="number of immovable discs")

    p = sub.add_parser("plan", parents=[shared], help="plan on a scene file and write a plan file")
    p.add_argument("scene")
    p.add_argument("--t-max", type=float, default=None, help="synthetic time budget (s)")
    p.add_argument("--max-expansions", type=int, default=None)

    b = sub.add_parser("bench", parents=[shared], help="run a batch experiment, write the metrics CSV")
    b.add_argument("--tabletop", type=int, default=50, help="tabletop scenes per seed")
    b.add_argument("--fridge", type=int, default=50, help="fridge scenes per seed")
    b.add_argument("--seeds", type=int, default=1, help="replicate seeds, counting up from --seed")
    b.add_argument("--t-max", type=float, default=1800.0)
    b.add_argument("--max-expansions", type=int, default=20000)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--summary", metavar="PATH", help="summary text file (default: stderr)")

    r = sub.add_parser("replay", parents=[shared], help="verify a plan file against a scene")
    r.add_argument("scene")
    r.add_argument("plan")
    r.add_argument("--ignore-hash", action="store_true", help="replay even if the scene hash differs")

    v = sub.add_parser("render", parents=[shared], help="draw a scene, optionally with an executed plan")
    v.add_argument("scene")
    v.add_argument("--plan", help="plan file to execute and overlay")
    v.add_argument("--stride", type=int, default=1, help="draw the arm every N plan states")
    return ap


def _params(args):
    try:
        params = load_params(args.params) if args.params else PlannerParams()
        return replace(params, sim_latency=args.sim_latency / 1000.0)
    except (OSError, ValueError) as exc:
        raise InputError(f"--params: {exc}") from exc


def _emit(text, out):
    if out:
        try:
            Path(out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc}") from exc
    else:
        sys.stdout.write(text)


def _scene(path):
    try:
        return load_scene(path)
    except SceneError as exc:
        raise InputError(str(exc)) from exc


def cmd_gen(args):
    kw = {}
    if args.movable is not None:
        kw["n_movable"] = args.movable
    if args.immovable is not None:
        kw["n_immovable"] = args.immovable
    counts = bench.PRESET_COUNTS[args.workspace]
    kw.setdefault("n_movable", counts[0])
    kw.setdefault("n_immovable", counts[1])
    if args.workspace == "fridge":
        kw["min_goal_distance"] = 0.2
    try:
        scene = generate_scene(SceneParams(workspace=args.workspace, seed=args.seed, **kw))
    except (SceneError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    _emit(dumps_scene(scene), args.out)
    return EXIT_OK


def cmd_plan(args):
    scene = _scene(args.scene)
    params = _params(args)
    if args.t_max is not None or args.max_expansions is not None:
        try:
            t_max = params.t_max if args.t_max is None else args.t_max
            params = replace(params, t_max=t_max, t_sim=min(params.t_sim, t_max),
                             max_expansions=params.max_expansions if args.max_expansions is None
                             else args.max_expansions)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    variant = args.variant or "SPAMP"
    if variant not in VARIANTS:
        raise InputError(f"unknown variant {variant!r}")
    result = plan(scene, params=params, variant=variant, rng=args.seed)
    s = result.stats
    print(f"{variant}: {result.status}; {len(result.actions)} actions, cost {result.cost:.4f}; "
          f"synthetic time {s.planning_time:.2f} s (simulation {s.sim_time:.2f} s); "
          f"sim calls {s.sim_calls_stage1}+{s.sim_calls_stage2}; expansions {s.total_expansions}",
          file=sys.stderr)
    if not result.success:
        return EXIT_PLAN_FAILED
    _emit(dumps_plan(from_result(scene, result, params, variant)), args.out)
    return EXIT_OK


def cmd_bench(args):
    variants = tuple(v.strip() for v in args.variant.split(",")) if args.variant else tuple(VARIANTS)
    try:
        spec = bench.ExperimentSpec(
            scenes={"tabletop": args.tabletop, "fridge": args.fridge},
            seeds=tuple(range(args.seed, args.seed + args.seeds)),
            variants=variants, t_max=args.t_max, max_expansions=args.max_expansions,
            sim_latency=args.sim_latency / 1000.0, params=_params(args), workers=args.workers)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    t0 = time.perf_counter()
    records, summary = bench.run_experiment(spec)
    _emit(bench.dumps_csv(records), args.out)
    wall = f"wall time {time.perf_counter() - t0:.1f} s\n"
    if args.summary:
        try:
            Path(args.summary).write_text(summary, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write {args.summary}: {exc}") from exc
        sys.stderr.write(wall)
    else:
        sys.stderr.write(summary + wall)
    return EXIT_OK


def _load_plan(path):
    try:
        return load_plan(path)
    except PlanFileError as exc:
        raise InputError(str(exc)) from exc


def cmd_replay(args):
    scene = _scene(args.scene)
    pf = _load_plan(args.plan)
    try:
        verdict = replay(scene, pf, check_hash=not args.ignore_hash)
    except PlanFileError as exc:
        raise InputError(str(exc)) from exc
    lines = ["valid" if verdict.valid else "invalid"] + list(verdict.violations)
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if verdict.valid else EXIT_REPLAY_VIOLATION


def cmd_render(args):
    scene = _scene(args.scene)
    trace = None
    if args.plan:
        pf = _load_plan(args.plan)
        try:
            trace = replay(scene, pf, check_hash=False).states
        except PlanFileError as exc:
            raise InputError(str(exc)) from exc
    try:
        spec = RenderSpec(scene, trace, args.out, stride=args.stride)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(render_svg(spec), args.out)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "plan": cmd_plan, "bench": cmd_bench, "replay": cmd_replay, "render": cmd_render}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return EXIT_BAD_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"mamoplan: error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
