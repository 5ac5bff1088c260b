import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robolayout.motion import (BeltTrack, MotionError, MotionProblem, PlanarArm, Pose,
                               build_motion_problem, constraint_violations, forward_kinematics,
                               gradient, objective, penalized, solve_trajectories)
from robolayout.oracle import finite_diff_gradient
from robolayout.netmodel import layout_from_dict
from robolayout.pipeline import optimize
from robolayout.sched import assign_paths, build_schedule, schedule_layout

from conftest import make_scene

ARM = PlanarArm("a", (1.0, 2.0), (0.4, 0.3, 0.15))


def test_fk_straight_chain():
    x, y, th = forward_kinematics(ARM, [0, 0, 0])
    assert (x, y, th) == pytest.approx((1.85, 2.0, 0.0))


def test_fk_reversed():
    x, y, th = forward_kinematics(ARM, [math.pi, 0, 0])
    assert (x, y) == pytest.approx((0.15, 2.0))
    assert th == pytest.approx(math.pi)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-math.pi, math.pi), min_size=3, max_size=3))
def test_fk_within_reach(q):
    x, y, _ = forward_kinematics(ARM, q)
    assert math.hypot(x - 1.0, y - 2.0) <= 0.85 + 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 0.8), st.floats(-math.pi, math.pi), st.sampled_from([1, -1]))
def test_inverse_round_trip(r, ang, elbow):
    arm = PlanarArm.for_robot("a", (0.0, 0.0), 0.18, 0.85, 0.15)
    tx, ty = r * math.cos(ang), r * math.sin(ang)
    q = arm.inverse(tx, ty, ang, elbow)
    x, y, th = arm.forward(q)
    if math.hypot(tx - 0.18 * math.cos(ang), ty - 0.18 * math.sin(ang)) < 0.67 - 1e-6:
        assert (x, y) == pytest.approx((tx, ty), abs=1e-9)


def chain_problem(scene):
    res = optimize(scene)
    sched = schedule_layout(res.layout)
    return res.layout, sched, build_motion_problem(sched, res.layout, scene)


def test_one_arm_events(chain_scene):
    _, _, p = chain_problem(chain_scene)
    assert [ev[-1] for ev in p.pick] == [0]
    assert [ev[-1] for ev in p.place] == [10]
    assert p.hand == [] and p.n == 10


def test_two_arm_handover():
    scene = make_scene(((0, 0), (1.6, 0)), 0.5, (0, 0), [(1.6, 0)])
    _, _, p = chain_problem(scene)
    assert len(p.hand) == 1 and p.hand[0][-1] == 10


def test_belt_ride_count(belt_scene):
    layout, sched, p = chain_problem(belt_scene)
    assert any(e.kind == "belt" for e in layout.elements.values())
    per_belt = {}
    for belt, box, t in p.on_belt:
        per_belt.setdefault(belt, []).append(t)
    assert all(len(ts) == 11 for ts in per_belt.values())


def test_stationary_solution():
    arm = PlanarArm.for_robot("a", (0.0, 0.0), 0.18, 0.85, 0.15)
    q = arm.inverse(0.5, 0.2, 0.3)
    x, y, th = arm.forward(q)
    pose = Pose(x, y, th)
    p = MotionProblem(5, [arm], [], [(0, "a", pose, 0)], [(0, "a", pose, 5)], [], [], [])
    x0 = np.tile(q, 6)
    traj = solve_trajectories(p, x0=x0)
    assert traj.objective == 0.0
    assert traj.max_residual == 0.0
    assert np.allclose(traj.x, x0)


def pick_place_problem(target):
    arm = PlanarArm.for_robot("a", (0.0, 0.0), 0.18, 0.85, 0.15)
    pick = Pose(0.5, 0.2, math.atan2(0.2, 0.5))
    place = Pose(*target, math.atan2(target[1], target[0]))
    return MotionProblem(10, [arm], [], [(0, "a", pick, 0)], [(0, "a", place, 10)], [], [],
                         [("a", 0, 0.25, "a", 2, 0.75)])


def test_short_pick_place():
    traj = solve_trajectories(pick_place_problem((0.1, 0.55)))
    assert traj.max_residual < 1e-3 and traj.objective > 0


def test_place_out_of_reach():
    with pytest.raises(MotionError, match="residual failure") as err:
        solve_trajectories(pick_place_problem((1.5, 0.0)))
    assert err.value.constraint.startswith("place")


@pytest.fixture(scope="module")
def belt_problem():
    scene = make_scene(((0, 0), (3, 1)), 0.5, (0, 0.5), [(3, 0.5)], catalog=["UR5e", "belt"])
    return chain_problem(scene)[2]


def test_gradient_matches_finite_differences(belt_problem):
    p = belt_problem
    rng = np.random.default_rng(3)
    x0 = p.initial_guess()
    for _ in range(5):
        x = x0 + 0.1 * rng.normal(size=x0.size)
        ga = gradient(p, x, 10.0, 10.0)
        gf = finite_diff_gradient(lambda z: penalized(p, z, 10.0, 10.0), x)
        assert np.linalg.norm(ga - gf) <= 1e-4 * max(np.linalg.norm(gf), 1e-12)


def test_history_monotone_within_rounds(belt_problem):
    traj = solve_trajectories(belt_problem)
    for (r1, f1), (r2, f2) in zip(traj.history, traj.history[1:]):
        if r1 == r2:
            assert f2 <= f1
    assert traj.max_residual < 1e-3
    worst, _ = constraint_violations(belt_problem, traj.x)
    assert worst == traj.max_residual
    # one prismatic value per row, affine in t
    rows = [r for r in csv.reader(io.StringIO(traj.to_csv())) if r[0].startswith("belt")]
    assert rows
    vals, grasps = {}, {}
    for name, t, q1, q2, box in rows:
        vals.setdefault((name, box), []).append(float(q1))
        grasps.setdefault((name, box), set()).add(q2)
    for v in vals.values():
        assert np.allclose(np.diff(v, 2), 0.0, atol=3e-9)  # 9 printed decimals
    assert all(len(g) == 1 for g in grasps.values())


def test_objective_translation_invariant(belt_problem):
    p = belt_problem
    x = p.initial_guess()
    shifted = x.copy()
    for a in p.arms:
        o = p.arm_offset[p.arm_index[a.name]]
        shifted[o:o + 3 * (p.n + 1)] += 0.37
    assert objective(p, shifted) == pytest.approx(objective(p, x), rel=1e-12, abs=1e-12)


def test_shared_arm_conflict_is_reported():
    scene = make_scene(((0, -0.5), (1, 0.5)), 0.5, (0, 0), [(1, 0), (0.5, 0.5)])
    layout = layout_from_dict({"robots": [{"type": "UR5e", "x": 0.5, "y": -0.5}],
                               "paths": [["in", "UR5e@0.5,-0.5", "out1"],
                                         ["in", "UR5e@0.5,-0.5", "out2"]],
                               "total_cost": 1.0}, scene)
    sched = build_schedule(assign_paths(layout), dt=1.0)
    sched.offsets = [0.0, 0.0]  # both boxes picked at once by the same arm
    with pytest.raises(MotionError, match="holds boxes 1, 2"):
        solve_trajectories(build_motion_problem(sched, layout, scene))


def test_event_steps_validated():
    with pytest.raises(ValueError):
        MotionProblem(3, [ARM], [], [(0, "a", Pose(0, 0, 0), 4)], [], [], [], [])
    assert BeltTrack("b", (0, 0), (0.5, 0)).length == 0.5
