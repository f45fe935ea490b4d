import io
import math
import random

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from markernav.geometry import PolarPose, Pose2D, normalize_angle, polar_of
from markernav.odometry import OdometryState, compose_polar, polar_track, reset, update, write_trajectory

turns = st.one_of(
    st.sampled_from([0.0, math.pi, math.pi / 2, -math.pi / 2]),
    st.floats(-math.pi, math.pi).filter(lambda t: 1e-6 < abs(t) < math.pi - 1e-6),
)
goals = st.builds(PolarPose, st.floats(0, 3), turns)


def oracle_track(seq):
    state = OdometryState()
    out = []
    for g in seq:
        state = update(state, g)
        out.append(state.polar)
    return out


def test_compose_collinear():
    p = compose_polar(PolarPose(1.5, 0), PolarPose(2.0, 0))
    assert (p.distance, p.bearing) == pytest.approx((3.5, 0))


def test_compose_quarter_turn():
    # forward 1, turn left 90 degrees, forward 1: lands at (1, 1)
    p = compose_polar(PolarPose(1, 0), PolarPose(1, math.pi / 2))
    assert (p.distance, p.bearing) == pytest.approx((math.sqrt(2), math.pi / 4))
    q = compose_polar(PolarPose(1, 0), PolarPose(1, -math.pi / 2))
    assert q.bearing == pytest.approx(-math.pi / 4)


def test_compose_zero_step():
    prev = PolarPose(2.3, 0.7)
    assert compose_polar(prev, PolarPose(0, 1.9)) == prev


def test_compose_from_numerically_zero_radius():
    p = compose_polar(PolarPose(1e-12, 0.0), PolarPose(2.5, 0.3))
    assert p.distance == 2.5 and p.bearing == pytest.approx(0.3)


def test_compose_back_through_origin():
    p = compose_polar(PolarPose(1, 0.2), PolarPose(3, math.pi))
    assert p.distance == pytest.approx(2)
    assert p.bearing == pytest.approx(normalize_angle(0.2 + math.pi))
    assert compose_polar(PolarPose(1, 0.2), PolarPose(1, math.pi)) == PolarPose(0, 0)


@given(st.builds(PolarPose, st.floats(0, 5), st.floats(-3, 3)), goals)
def test_compose_bounds(prev, delta):
    p = compose_polar(prev, delta)
    assert abs(prev.distance - delta.distance) - 1e-9 <= p.distance <= prev.distance + delta.distance + 1e-9
    assert -math.pi < p.bearing <= math.pi


def test_first_goal_is_the_odometry():
    s = update(OdometryState(), PolarPose(2, math.pi / 6))
    assert s.polar == PolarPose(2, math.pi / 6)
    assert s.step_index == 1


def test_two_goals_reach_diagonal():
    s = update(update(OdometryState(), PolarPose(1, 0)), PolarPose(1, math.pi / 2))
    assert (s.polar.distance, s.polar.bearing) == pytest.approx((math.sqrt(2), math.pi / 4))


def test_pure_rotation_leaves_position():
    s = update(update(OdometryState(), PolarPose(1.2, 0.4)), PolarPose(0.7, -1.1))
    t = update(s, PolarPose(0, 0.9))
    assert t.polar == s.polar
    assert t.pose.heading == pytest.approx(normalize_angle(s.pose.heading + 0.9))


def test_reset():
    s = update(update(OdometryState(), PolarPose(1.2, 0.4)), PolarPose(0.7, -1.1))
    r = reset(s)
    assert r.polar == PolarPose(0, 0)
    assert reset(r) == r
    g = PolarPose(0.9, -0.3)
    assert update(r, g).polar == g


@given(st.lists(goals, min_size=1, max_size=20))
def test_state_matches_polar_of_pose(seq):
    state = OdometryState()
    for g in seq:
        state = update(state, g)
        ref = polar_of(state.pose, state.origin)
        assert state.polar.distance == pytest.approx(ref.distance, abs=1e-9)
        if ref.distance > 1e-6:
            assert abs(normalize_angle(state.polar.bearing - ref.bearing)) <= 1e-9


@given(st.lists(goals, min_size=1, max_size=20))
def test_polar_route_matches_pose_route(seq):
    reference = oracle_track(seq)
    # the law-of-cosines route loses precision as eps * step / radius near the origin
    assume(all(r.distance >= 1e-3 for r in reference))
    for fast, ref in zip(polar_track(seq), reference):
        assert fast.distance == pytest.approx(ref.distance, abs=1e-9)
        if ref.distance > 1e-6:
            assert abs(normalize_angle(fast.bearing - ref.bearing)) <= 1e-9


def test_oracle_equivalence_hand_sequence():
    seq = [PolarPose(1, 0), PolarPose(1, math.pi / 2), PolarPose(1, math.pi / 2), PolarPose(2, -math.pi / 2)]
    # square-ish walk: (1,0) -> (1,1) -> (0,1) -> (0,3)
    last = polar_track(seq)[-1]
    assert (last.distance, last.bearing) == pytest.approx((3, math.pi / 2))


def test_trajectory_export():
    rng = random.Random(0)
    states = [OdometryState()]
    for _ in range(3):
        states.append(update(states[-1], PolarPose(rng.random(), rng.uniform(-1, 1))))
    buf = io.StringIO()
    write_trajectory(states, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "step,x_m,y_m,heading_rad,d_m,theta_rad"
    assert len(lines) == 5
    assert lines[1].startswith("0,0.0,0.0,0.0")
