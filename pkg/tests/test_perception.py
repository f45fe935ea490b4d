import io
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from markernav.errors import GeometryError, InconsistentCornersError, MisalignmentError
from markernav.geometry import PolarPose, Pose2D
from markernav.perception import (
    CornerSet,
    DistanceCorrection,
    MarkerObservation,
    estimate_yaw,
    localize,
    read_observation_log,
    to_cartesian,
    write_observation_log,
)
from markernav.simulator import CameraModel, WorldModel, project_marker

SQUARE = CornerSet((100, 100), (100, 200), (200, 200), (200, 100))
TAPERED = CornerSet((100, 95), (100, 205), (190, 195), (190, 105))


def view(yaw: float, distance: float, camera=CameraModel(), marker_side=None) -> MarkerObservation:
    """Observation of a marker at the origin, normal +y, seen from ``distance`` at ``yaw``."""
    if marker_side is not None:
        camera = CameraModel(camera.focal_px, camera.image_width, camera.image_height, marker_side)
    bearing = math.pi / 2 + yaw
    robot = Pose2D(distance * math.cos(bearing), distance * math.sin(bearing), bearing + math.pi)
    obs = project_marker(WorldModel({0: Pose2D(0, 0, math.pi / 2)}, robot), camera, 0)
    assert obs is not None
    return obs


def test_fronto_parallel_square():
    est = estimate_yaw(SQUARE)
    assert (est.s_a, est.s_i, est.theta) == (100, 100, 0)


def test_tapered_example_with_taller_side_reference():
    # hand evaluation: s_a = (90 + 90)/2, s_i = max(110, 90); left side taller -> negative
    est = estimate_yaw(TAPERED, reference="max")
    assert est.s_a == 90 and est.s_i == 110
    assert est.theta == pytest.approx(-math.acos(9 / 11))
    assert math.degrees(est.theta) == pytest.approx(-35.1, abs=0.05)


def test_tapered_example_with_mean_reference():
    est = estimate_yaw(TAPERED)
    assert est.s_i == 100
    assert est.theta == pytest.approx(-math.acos(0.9))


def test_named_side_references():
    assert estimate_yaw(TAPERED, reference="ab").s_i == 110
    assert estimate_yaw(TAPERED, reference="dc").s_i == 90
    with pytest.raises(ValueError):
        estimate_yaw(TAPERED, reference="diagonal")


def test_projected_marker_at_30_degrees():
    est = estimate_yaw(view(math.radians(30), 2.0).corners)
    assert abs(est.theta - math.radians(30)) <= math.radians(2)


def test_taller_side_reference_is_biased_up_close():
    obs = view(math.radians(30), 0.5)
    assert abs(estimate_yaw(obs.corners, "max").theta - math.radians(30)) > math.radians(2)
    assert estimate_yaw(obs.corners).theta == pytest.approx(math.radians(30), abs=1e-9)


def test_inconsistent_corners():
    wide = CornerSet((100, 100), (100, 200), (250, 200), (250, 100))
    with pytest.raises(InconsistentCornersError):
        estimate_yaw(wide)
    assert estimate_yaw(wide, ratio_tolerance=0.6).theta == 0.0


def test_degenerate_vertical_side():
    with pytest.raises(GeometryError):
        estimate_yaw(CornerSet((100, 100), (100, 100), (200, 200), (200, 100)))


def test_negative_pixels_rejected():
    with pytest.raises(GeometryError):
        CornerSet((-1, 0), (0, 10), (10, 10), (10, 0))


@given(st.floats(0.1, 10), st.floats(0, 500), st.floats(0, 500))
def test_yaw_invariant_under_scale_and_translation(k, tx, ty):
    base = estimate_yaw(TAPERED).theta
    moved = CornerSet(*[(k * x + tx, k * y + ty) for x, y in (TAPERED.a, TAPERED.b, TAPERED.c, TAPERED.d)])
    assert estimate_yaw(moved).theta == pytest.approx(base, abs=1e-9)


@given(st.floats(1, 60), st.floats(0.5, 3.0))
def test_mirror_yaw_flips_sign(yaw_deg, dist):
    plus = estimate_yaw(view(math.radians(yaw_deg), dist).corners).theta
    minus = estimate_yaw(view(-math.radians(yaw_deg), dist).corners).theta
    assert plus > 0
    assert minus == pytest.approx(-plus, abs=1e-9)


@given(st.floats(-60, 60), st.floats(0.5, 3.0))
def test_centered_projection_within_two_degrees(yaw_deg, dist):
    est = estimate_yaw(view(math.radians(yaw_deg), dist).corners)
    assert abs(math.degrees(est.theta) - yaw_deg) <= 2.0


def test_localize_reproduces_reported_reading():
    # range and angle of the experimental reading, replayed in simulation
    obs = view(math.radians(37.61), 1.44)
    p = localize(obs)
    assert p.distance == pytest.approx(1.44, abs=0.05)
    assert math.degrees(p.bearing) == pytest.approx(37.61, abs=2)


def test_localize_fronto_parallel_and_correction():
    obs = view(0.0, 1.0)
    p = localize(obs)
    assert p.distance == pytest.approx(1.0) and p.bearing == 0
    corrected = localize(obs, DistanceCorrection(1.0, -0.173))
    assert corrected.distance == pytest.approx(0.827)
    assert corrected.bearing == 0


def test_localize_rejects_off_center():
    obs = MarkerObservation(2, SQUARE, 1.0, frame_center_offset=12.0)
    with pytest.raises(MisalignmentError):
        localize(obs)
    assert localize(obs, alignment_threshold=20).distance == 1.0


def test_to_cartesian_examples():
    assert to_cartesian(PolarPose(1, 0)) == pytest.approx((0, 1))
    assert to_cartesian(PolarPose(math.sqrt(2), math.pi / 4)) == pytest.approx((1, 1))
    assert to_cartesian(PolarPose(2, -math.pi / 6)) == pytest.approx((-1, math.sqrt(3)))


@given(st.floats(0, 50), st.floats(-math.pi + 1e-9, math.pi))
def test_to_cartesian_round_trip(d, theta):
    x, y = to_cartesian(PolarPose(d, theta))
    assert math.hypot(x, y) == pytest.approx(d, abs=1e-12)
    if d > 1e-6:
        assert math.atan2(x, y) == pytest.approx(theta, abs=1e-12)


def test_center_x_is_projected_marker_center():
    obs = view(math.radians(50), 0.6)
    # camera looks straight at the marker centre, so the crossing of the diagonals is at 960
    assert obs.corners.center_x == pytest.approx(960.0, abs=1e-9)
    assert abs(obs.corners.centroid_x - 960.0) > 1.0


def test_observation_log_round_trip():
    obs = [MarkerObservation(2, TAPERED, 1.44), MarkerObservation(0, SQUARE, 0.5)]
    buf = io.StringIO()
    write_observation_log(obs, buf)
    assert buf.getvalue().splitlines()[0] == "marker_id,xa,ya,xb,yb,xc,yc,xd,yd,depth_m"
    buf.seek(0)
    assert list(read_observation_log(buf)) == obs


def test_observation_log_bad_row_names_row():
    text = "marker_id,xa,ya,xb,yb,xc,yc,xd,yd,depth_m\n1,1,1,1,2,2,2,2,1,1.0\n1,x,1,1,2,2,2,2,1,1.0\n"
    with pytest.raises(ValueError, match="row 3"):
        list(read_observation_log(io.StringIO(text)))


def test_equal_heights_read_as_positive_yaw():
    narrow = CornerSet((100, 100), (100, 200), (180, 200), (180, 100))
    assert estimate_yaw(narrow).theta == pytest.approx(math.acos(0.8))
