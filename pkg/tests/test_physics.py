import math

import numpy as np
import pytest

from mamoplan.kinematics import fk_points, interpolate
from mamoplan.physics import PENETRATION_TOL, ViolationKind, max_penetration, simulate_path
from mamoplan.scene import Workspace, generate_scene, tabletop_params

from conftest import disc, three_link
from oracles import chain_points, swept_contact_gaps

BIG = Workspace((0.0, 0.0, 2.0, 2.0), 0.01)
ROBOT = three_link(base=(1.0, 1.0, 0.0))  # reach 0.75, thickness 0.01


def split(items):
    return [o for o, _ in items], {o.id: p for o, p in items}


def sweep(a1, n=40):
    return interpolate(np.zeros(3), np.array([a1, 0.0, 0.0]), a1 / n)


def test_no_contact_leaves_poses_untouched():
    objs, poses = split([disc(0, 1.5, 1.5), disc(1, 0.3, 0.3, movable=False)])
    out = simulate_path(ROBOT, sweep(0.5), objs, poses, BIG)
    assert out.final_poses == poses
    assert all(out.final_poses[i] is poses[i] for i in poses)
    assert out.violations == () and out.clean


def rotating_push_oracle(rho, phi, h, a_final):
    """Disc touching a line that rotates about the origin, pushed along the line normal.

    The disc stays at normal offset ``h``; its coordinate along the line grows
    as ds = h dalpha from the moment of first contact.
    """
    a_c = phi - math.asin(h / rho)
    s0 = rho * math.cos(phi - a_c)
    s = s0 + h * (a_final - a_c)
    u = np.array([math.cos(a_final), math.sin(a_final)])
    n = np.array([-math.sin(a_final), math.cos(a_final)])
    return s * u + h * n


def test_single_disc_push_matches_closed_form():
    r, t = 0.05, 0.01
    x, y = 0.6, r + t + 0.02  # relative to the base, 2 cm above the link
    a_final = 0.08 / math.hypot(x, y) + math.atan2(y, x)  # link sweeps 0.08 m at the disc
    objs, poses = split([disc(0, 1.0 + x, 1.0 + y, r=r, height=0.05, step=0.05)])
    path = sweep(a_final, n=200)
    out = simulate_path(ROBOT, path, objs, poses, BIG)
    assert out.clean
    p = out.final_poses[0]
    expect = rotating_push_oracle(math.hypot(x, y), math.atan2(y, x), r + t, a_final) + np.array([1.0, 1.0])
    assert math.hypot(p.x - expect[0], p.y - expect[1]) < 1e-3
    # final separation is non-negative and the disc rests against the link
    pts = fk_points(ROBOT, path[-1])[0]
    gap = swept_contact_gaps(ROBOT, path[-1], path[-1], [(p.x, p.y, r)])[0]
    assert -PENETRATION_TOL <= gap < 1e-3
    assert pts.shape == (4, 2)


def test_push_into_immovable_reports_pushed_disc():
    # movable disc between the link and an immovable one, centres on a common normal
    objs, poses = split([disc(0, 1.5, 1.1, r=0.04), disc(1, 1.5, 1.19, r=0.04, movable=False)])
    out = simulate_path(ROBOT, sweep(0.4, n=80), objs, poses, BIG)
    kinds = {(v.kind, v.object_id) for v in out.violations}
    assert (ViolationKind.CONTACT_IMMOVABLE, 0) in kinds
    step = out.violations[0].step
    assert 1 <= step <= 80
    # poses are reported at the moment of the violation, not at the path end
    assert out.final_poses[0] != poses[0]
    assert out.final_poses[1] == poses[1]


def test_arm_touching_immovable_is_a_violation():
    objs, poses = split([disc(5, 1.5, 1.2, r=0.04, movable=False)])
    out = simulate_path(ROBOT, sweep(0.6), objs, poses, BIG)
    assert [v.kind for v in out.violations] == [ViolationKind.CONTACT_IMMOVABLE]
    assert out.violations[0].object_id == 5


def test_pushed_off_the_workspace():
    ws = Workspace((0.0, 0.0, 2.0, 1.1), 0.01)
    objs, poses = split([disc(0, 1.6, 1.045, r=0.03, height=0.05, step=0.05)])
    out = simulate_path(ROBOT, sweep(0.15, n=60), objs, poses, ws)
    assert ViolationKind.FELL_OFF_WORKSPACE in {v.kind for v in out.violations}
    assert out.final_poses[0].y > 1.1


def test_fast_push_exceeds_step_displacement():
    objs, poses = split([disc(0, 1.6, 1.07, r=0.05, height=0.05, step=0.02)])
    out = simulate_path(ROBOT, [np.zeros(3), np.array([0.2, 0.0, 0.0])], objs, poses, BIG)
    assert ViolationKind.EXCESS_VELOCITY in {v.kind for v in out.violations}


def test_tall_disc_topples_under_a_small_push():
    # limit = ratio * r^2 / h = 0.03^2 / 0.3 = 3 mm per step
    objs, poses = split([disc(0, 1.6, 1.045, r=0.03, height=0.3, step=0.05)])
    out = simulate_path(ROBOT, sweep(0.1, n=5), objs, poses, BIG)
    assert {v.kind for v in out.violations} == {ViolationKind.TOPPLED}


def test_push_chain_moves_second_disc():
    objs, poses = split([disc(0, 1.5, 1.07, r=0.05, height=0.05, step=0.05),
                         disc(1, 1.5, 1.175, r=0.05, height=0.05, step=0.05)])
    out = simulate_path(ROBOT, sweep(0.2, n=100), objs, poses, BIG)
    assert out.clean
    a, b = out.final_poses[0], out.final_poses[1]
    assert b.y > poses[1].y + 0.01
    assert math.hypot(a.x - b.x, a.y - b.y) >= 0.1 - PENETRATION_TOL


def test_empty_path_rejected():
    with pytest.raises(ValueError):
        simulate_path(ROBOT, [], [], {}, BIG)


# -- properties on random paths ------------------------------------------------


def random_cases(n=100, seed=0):
    rng = np.random.default_rng(seed)
    cases = []
    scenes = [generate_scene(tabletop_params(k, n_immovable=2)) for k in range(10)]
    while len(cases) < n:
        s = scenes[len(cases) % 10]
        discs = [(s.start.objects[o.id].x, s.start.objects[o.id].y, o.radius) for o in s.objects]
        c0 = rng.uniform(-2.5, 2.5, 4)
        if min(swept_contact_gaps(s.robot, c0, c0, discs)) <= 0.0:
            continue  # paths start out of contact
        c1 = c0 + rng.uniform(-1.5, 1.5, 4)
        cases.append((s, interpolate(c0, c1, 0.05)))
    return cases


CASES = random_cases()


def test_determinism_bit_identical():
    for s, path in CASES:
        a = simulate_path(s.robot, path, s.objects, s.start.objects, s.workspace, record_trace=True)
        b = simulate_path(s.robot, path, s.objects, s.start.objects, s.workspace, record_trace=True)
        assert a == b


def test_locality_uncontacted_objects_stay_put():
    contacted_runs = 0
    for s, path in CASES:
        out = simulate_path(s.robot, path, s.objects, s.start.objects, s.workspace, record_trace=True)
        p0 = s.start.objects
        moved = [o for o in s.objects if out.final_poses[o.id] != p0[o.id]]
        contacted_runs += bool(moved)
        # reach of each moved disc: everywhere its centre went, plus its radius
        # a violation can stop the run partway through a step the trace does not record
        traj = {o.id: np.array([[st[o.id].x, st[o.id].y] for st in out.trace + (out.final_poses,)]) for o in moved}
        last = max([len(out.trace) - 1] + [v.step for v in out.violations])
        for o in s.objects:
            p = np.array([p0[o.id].x, p0[o.id].y])
            gap_arm = swept_contact_gaps(s.robot, path[0], path[last], [(p[0], p[1], o.radius)])[0] \
                if last > 0 else math.inf
            far_from_pushed = all(
                np.min(np.hypot(*(traj[m.id] - p).T)) > o.radius + m.radius + m.constraints.max_step_displacement
                for m in moved if m.id != o.id)
            if gap_arm > 1e-9 and far_from_pushed and o.movable:
                assert out.final_poses[o.id] == p0[o.id]
        for o in s.immovable:
            assert out.final_poses[o.id] == p0[o.id]
    assert contacted_runs >= 10


def test_no_residual_penetration_on_clean_outcomes():
    checked = 0
    for s, path in CASES:
        out = simulate_path(s.robot, path, s.objects, s.start.objects, s.workspace, record_trace=True)
        if not out.clean:
            continue
        objs = sorted(s.objects, key=lambda o: o.id)
        radius = np.array([o.radius for o in objs])
        movable = np.array([o.movable for o in objs])
        thick = s.robot.thickness
        for c, poses in zip(path, out.trace):
            pos = np.array([[poses[o.id].x, poses[o.id].y] for o in objs])
            pts = chain_points(s.robot, c)[0]
            assert max_penetration(pts[:-1], pts[1:], thick, pos, radius, movable) <= PENETRATION_TOL
            for i in range(len(objs)):
                for j in range(i + 1, len(objs)):
                    if movable[i] or movable[j]:
                        d = math.hypot(*(pos[i] - pos[j]))
                        assert d >= radius[i] + radius[j] - PENETRATION_TOL
        checked += 1
    assert checked >= 20


def test_clean_outcomes_respect_step_displacement():
    for s, path in CASES:
        out = simulate_path(s.robot, path, s.objects, s.start.objects, s.workspace, record_trace=True)
        if not out.clean:
            continue
        for a, b in zip(out.trace, out.trace[1:]):
            for o in s.movable:
                d = math.hypot(b[o.id].x - a[o.id].x, b[o.id].y - a[o.id].y)
                assert d <= o.constraints.max_step_displacement + 1e-12
                assert d <= o.topple_limit + 1e-12


def test_stable_under_path_refinement():
    for s, path in CASES[:40]:
        out = simulate_path(s.robot, path, s.objects, s.start.objects, s.workspace)
        if not out.clean:
            continue
        fine = [path[0]]
        for a, b in zip(path, path[1:]):
            fine += [(a + b) / 2, b]
        out2 = simulate_path(s.robot, fine, s.objects, s.start.objects, s.workspace)
        for o in s.movable:
            p, q = out.final_poses[o.id], out2.final_poses[o.id]
            assert math.hypot(p.x - q.x, p.y - q.y) <= 2 * o.constraints.max_step_displacement
