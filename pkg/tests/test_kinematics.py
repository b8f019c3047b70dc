import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mamoplan.kinematics import (default_robot, fk_points, forward_kinematics, ik_candidates, interpolate,
                                 inverse_kinematics, pose_error, satisfies_goal, simple_primitive_successors,
                                 subdivide_path, sweep_bound, RobotModel)
from mamoplan.scene import GoalSpec

from conftest import three_link


def rot(a):
    return np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])


def oracle_fk(robot, c):
    """Naive chain of 2x2 rotations."""
    bx, by, byaw = robot.base
    R = rot(byaw)
    p = np.array([bx, by])
    for L, q in zip(robot.link_lengths, c):
        R = R @ rot(q)
        p = p + R @ np.array([L, 0.0])
    return p, math.atan2(R[1, 0], R[0, 0])


def configs(q=4, lim=2.9):
    return st.lists(st.floats(-lim, lim, allow_nan=False), min_size=q, max_size=q).map(np.array)


def test_straight_chain():
    (x, y, yaw), links = forward_kinematics(three_link(), np.zeros(3))
    assert (x, y, yaw) == pytest.approx((0.75, 0.0, 0.0), abs=1e-12)
    assert len(links) == 3
    np.testing.assert_allclose(links[1][0], [0.3, 0.0], atol=1e-12)


def test_rigid_rotation():
    (x, y, yaw), _ = forward_kinematics(three_link(), np.array([math.pi / 2, 0, 0]))
    assert (x, y, yaw) == pytest.approx((0.0, 0.75, math.pi / 2), abs=1e-12)


def test_fk_matches_rotation_matrix_oracle(rng):
    robot = default_robot()
    for c in rng.uniform(-2.9, 2.9, (200, 4)):
        (x, y, yaw), _ = forward_kinematics(robot, c)
        p, oyaw = oracle_fk(robot, c)
        assert math.hypot(x - p[0], y - p[1]) < 1e-9
        assert abs(math.remainder(yaw - oyaw, 2 * math.pi)) < 1e-9


def test_fk_batches_like_single_calls(rng):
    robot = default_robot()
    cs = rng.uniform(-2, 2, (7, 4))
    pts, _ = fk_points(robot, cs)
    for c, p in zip(cs, pts):
        np.testing.assert_array_equal(fk_points(robot, c)[0], p)


@given(configs(), configs())
def test_fk_lipschitz(a, b):
    robot = default_robot()
    pa = fk_points(robot, a)[0][-1]
    pb = fk_points(robot, b)[0][-1]
    assert np.hypot(*(pa - pb)) <= robot.reach * np.sum(np.abs(a - b)) + 1e-12


def test_robot_model_rejects_bad_fields():
    with pytest.raises(ValueError):
        RobotModel((0, 0, 0), (0.3,), (0.01,), ((-1, 1),))
    with pytest.raises(ValueError):
        RobotModel((0, 0, 0), (0.3, 0.2), (0.01, 0.0), ((-1, 1), (-1, 1)))
    with pytest.raises(ValueError):
        RobotModel((0, 0, 0), (0.3, 0.2), (0.01, 0.01), ((1, -1), (-1, 1)))


def test_ik_fixed_point(rng):
    robot = default_robot()
    c = rng.uniform(-2, 2, 4)
    (x, y, yaw), _ = forward_kinematics(robot, c)
    out = inverse_kinematics(robot, GoalSpec((x, y, yaw)), c, rng)
    np.testing.assert_array_equal(out, c)


def test_ik_unreachable(rng):
    robot = default_robot()
    far = GoalSpec((robot.base[0] + robot.reach + 0.1, robot.base[1], 0.0))
    assert inverse_kinematics(robot, far, np.zeros(4), rng) is None


def test_ik_round_trip_success_implies_goal(rng):
    robot = default_robot()
    for c in rng.uniform(-2.5, 2.5, (30, 4)):
        (x, y, yaw), _ = forward_kinematics(robot, c)
        goal = GoalSpec((x, y, yaw))
        out = inverse_kinematics(robot, goal, rng.uniform(-2.9, 2.9, 4), rng)
        assert out is not None
        e = pose_error(robot, out, goal.pose)
        assert math.hypot(e[0], e[1]) < 1e-3 and abs(e[2]) < 1e-3
        assert robot.within_limits(out) and satisfies_goal(robot, out, goal)


def test_ik_is_deterministic():
    robot = default_robot()
    goal = GoalSpec((0.6, 0.4, 0.3))
    a = inverse_kinematics(robot, goal, np.zeros(4), np.random.default_rng(5))
    b = inverse_kinematics(robot, goal, np.zeros(4), np.random.default_rng(5))
    np.testing.assert_array_equal(a, b)


def test_ik_candidates_are_exact_solutions(rng):
    robot = default_robot()
    c = rng.uniform(-2, 2, 4)
    (x, y, yaw), _ = forward_kinematics(robot, c)
    sols = ik_candidates(robot, (x, y, yaw), n_grid=60)
    assert len(sols) > 0
    for s in sols:
        e = pose_error(robot, s, (x, y, yaw))
        assert np.max(np.abs(e)) < 1e-9
        assert robot.within_limits(s)


def test_interpolate_zero_length():
    a = np.array([0.1, 0.2, 0.3])
    out = interpolate(a, a, 0.1)
    assert len(out) == 1
    np.testing.assert_array_equal(out[0], a)


def test_interpolate_arithmetic():
    out = interpolate(np.zeros(3), np.array([0.4, 0, 0]), 0.1)
    assert len(out) == 5
    np.testing.assert_allclose([c[0] for c in out], [0, 0.1, 0.2, 0.3, 0.4], atol=1e-15)


@given(configs(3), configs(3), st.floats(0.01, 1.0))
def test_interpolate_properties(a, b, step):
    out = interpolate(a, b, step)
    np.testing.assert_array_equal(out[0], a)
    np.testing.assert_array_equal(out[-1], b)
    k = len(out) - 1
    span = np.max(np.abs(b - a))
    assert k == (max(1, math.ceil(span / step - 1e-9)) if span > 0 else 0)
    for i, c in enumerate(out[:-1]):
        np.testing.assert_allclose(c, a + (i / k) * (b - a) if k else a, atol=1e-12)
        assert np.max(np.abs(out[i + 1] - c)) <= step + 1e-12


def test_successor_count_mid_range():
    robot = three_link()
    succ = simple_primitive_successors(robot, np.zeros(3), np.radians([4, 4, 7]))
    assert len(succ) == 6


def test_successor_limit_clipping():
    robot = three_link()
    succ = simple_primitive_successors(robot, np.array([2.9, 0, 0]), np.radians([4, 4, 7]))
    assert len(succ) == 5
    assert all(not (a.joint == 0 and a.delta > 0) for a, _ in succ)


@given(configs(4, 2.7))
def test_successors_differ_in_one_joint(c):
    robot = default_robot()
    deltas = np.radians([4, 4, 7, 7])
    for a, n in simple_primitive_successors(robot, c, deltas):
        diff = np.flatnonzero(n != c)
        assert list(diff) == [a.joint]
        assert n[a.joint] - c[a.joint] == pytest.approx(a.delta, abs=1e-15)
        assert abs(a.delta) == deltas[a.joint]


@given(configs(), configs(), st.floats(0.002, 0.05))
def test_subdivision_spacing(a, b, spacing):
    robot = default_robot()
    path = [a, (a + b) / 2, b]
    states, owner = subdivide_path(robot, path, spacing)
    seq = np.vstack([a[None], states])
    assert np.all(sweep_bound(robot, seq[:-1], seq[1:]) <= spacing + 1e-9)
    np.testing.assert_array_equal(states[-1], b)
    last_of_1 = np.flatnonzero(owner == 1)[-1]
    np.testing.assert_array_equal(states[last_of_1], path[1])
    assert np.all(np.diff(owner) >= 0)


@given(configs(), configs())
def test_sweep_bound_covers_point_motion(a, b):
    robot = default_robot()
    pa, pb = fk_points(robot, a)[0], fk_points(robot, b)[0]
    assert np.max(np.hypot(*(pa - pb).T)) <= sweep_bound(robot, a, b) + 1e-12
