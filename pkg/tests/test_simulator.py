import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from markernav.errors import MarkerNotFoundError
from markernav.geometry import Pose2D, pose_compose, polar_of
from markernav.perception import estimate_yaw
from markernav.simulator import (
    CameraModel,
    NoiseModel,
    Rotate,
    Simulator,
    Translate,
    WorldModel,
    apply_command,
    ground_truth_polar,
    load_world,
    project_marker,
    world_from_dict,
)

CAM = CameraModel()


def world_with_marker(yaw_deg=0.0, dist=2.0):
    # robot at the origin looking along +x, standing yaw_deg counter-clockwise of the normal
    return WorldModel({1: Pose2D(dist, 0.0, math.pi - math.radians(yaw_deg))})


def test_fronto_parallel_marker_is_symmetric():
    obs = project_marker(world_with_marker(), CAM, 1)
    c = obs.corners
    assert c.a[1] == pytest.approx(c.d[1]) and c.b[1] == pytest.approx(c.c[1])
    assert c.d[0] - CAM.image_width / 2 == pytest.approx(CAM.image_width / 2 - c.a[0])
    assert obs.frame_center_offset == pytest.approx(0, abs=1e-9)
    assert estimate_yaw(c).theta == pytest.approx(0, abs=1e-9)
    assert obs.depth == pytest.approx(2.0)


def test_yawed_marker_reads_its_yaw():
    obs = project_marker(world_with_marker(30.0), CAM, 1)
    assert math.degrees(estimate_yaw(obs.corners).theta) == pytest.approx(30.0, abs=2.0)


def test_invisible_cases():
    assert project_marker(WorldModel({1: Pose2D(2, 0, 0)}), CAM, 1) is None  # facing away
    assert project_marker(WorldModel({1: Pose2D(-2, 0, 0)}), CAM, 1) is None  # behind the camera
    assert project_marker(WorldModel({1: Pose2D(1, 3, -math.pi / 2)}), CAM, 1) is None  # outside the frustum
    with pytest.raises(MarkerNotFoundError):
        project_marker(WorldModel({}), CAM, 4)


def test_commands_move_the_robot():
    w = apply_command(WorldModel({}), Rotate(math.pi / 2))
    assert w.robot == Pose2D(0.0, 0.0, math.pi / 2)
    w = apply_command(w, Translate(1.0))
    assert (w.robot.x, w.robot.y) == pytest.approx((0.0, 1.0))


def run(seed):
    world = WorldModel(world_with_marker(10.0, 3.0).markers, Pose2D(), seed)
    sim = Simulator(world, noise=NoiseModel(1.0, 0.01, 0.01, 0.02))
    seen = []
    for cmd in [Rotate(0.1), Translate(0.5), Rotate(-0.1), Translate(0.5)]:
        sim.execute(cmd)
        seen.append(sim.observe(1))
    return sim.robot, seen


def test_seeded_runs_repeat_exactly():
    assert run(3) == run(3)
    assert run(3) != run(4)


def test_zero_sigma_draws_nothing():
    # with only actuation noise, observing must not advance the generator
    noise = NoiseModel(rot_sigma=0.01)
    a = Simulator(WorldModel({1: Pose2D(3, 0, math.pi)}, Pose2D(), 2), noise=noise)
    b = Simulator(WorldModel({1: Pose2D(3, 0, math.pi)}, Pose2D(), 2), noise=noise)
    a.observe(1)
    a.execute(Rotate(0.2))
    b.execute(Rotate(0.2))
    assert a.robot == b.robot


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-math.pi, math.pi))
def test_depth_matches_polar_range(x, y, h):
    w = WorldModel({1: Pose2D(5, 0.5, math.pi)}, Pose2D(x, y, 0.0))
    robot = Pose2D(x, y, math.atan2(0.5 - y, 5 - x))
    obs = project_marker(WorldModel(w.markers, robot), CAM, 1)
    assert obs.depth == pytest.approx(ground_truth_polar(w, 1).distance, abs=1e-9)
    assert ground_truth_polar(w, 1) == polar_of(robot, w.markers[1])


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-math.pi, math.pi))
def test_observations_invariant_under_rigid_motion(tx, ty, rot):
    w = WorldModel({1: Pose2D(2.5, 0.4, math.pi - 0.3)}, Pose2D(0.2, -0.1, 0.1))
    move = Pose2D(tx, ty, rot)
    moved = WorldModel({1: pose_compose(move, w.markers[1])}, pose_compose(move, w.robot))
    a, b = project_marker(w, CAM, 1), project_marker(moved, CAM, 1)
    for p, q in zip((a.corners.a, a.corners.b, a.corners.c, a.corners.d),
                    (b.corners.a, b.corners.b, b.corners.c, b.corners.d)):
        assert p == pytest.approx(q, abs=1e-6)
    assert a.depth == pytest.approx(b.depth)


def test_world_file(tmp_path):
    doc = {
        "markers": [{"id": 3, "x": 1, "y": 2, "normal_deg": 90}],
        "robot": {"x": 0, "y": 0, "heading_deg": 45},
        "camera": {"focal_px": 900, "width": 1280, "height": 720, "marker_side_m": 0.15},
        "noise": {"pixel": 0.5, "rot_deg": 1},
        "seed": 11,
    }
    path = tmp_path / "w.json"
    path.write_text(json.dumps(doc))
    world, camera, noise = load_world(path)
    assert world.markers[3].heading == pytest.approx(math.pi / 2)
    assert world.robot.heading == pytest.approx(math.pi / 4)
    assert (camera.focal_px, camera.image_width, camera.marker_side) == (900, 1280, 0.15)
    assert noise.rot_sigma == pytest.approx(math.radians(1)) and noise.pixel_sigma == 0.5
    assert world.rng_seed == 11


def test_world_file_errors(tmp_path):
    with pytest.raises(ValueError, match="duplicate"):
        world_from_dict({"markers": [{"id": 1, "x": 0, "y": 0, "normal_deg": 0}] * 2})
    bad = tmp_path / "bad.json"
    bad.write_text('{"markers": [{"id": 1}]}')
    with pytest.raises(ValueError, match="bad.json"):
        load_world(bad)
