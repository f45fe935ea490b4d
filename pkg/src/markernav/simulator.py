"""Deterministic planar world: markers on walls, a kinematic robot and a pinhole camera.

Marker poses store the centre position and the heading of the outward normal.
The camera sits at the robot pose, at the height of the marker centres, and
looks along the robot heading.  Noise draws come from a single seeded
generator in a fixed order: corners a, b, c, d (x then y), depth, then
actuation.  A zero sigma consumes no draw.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DegenerateLinkError, MarkerNotFoundError
from .geometry import PolarPose, Pose2D, normalize_angle, polar_of, pose_compose
from .mapgraph import Edge, LinkMeasurement
from .perception import CornerSet, MarkerObservation

# Intel RealSense D435i colour stream: 1920x1080, ~69 degree horizontal field of view
DEFAULT_FOCAL_PX = 1380.0
DEFAULT_WIDTH = 1920
DEFAULT_HEIGHT = 1080

NEAR_PLANE_M = 0.05


@dataclass(frozen=True)
class CameraModel:
    focal_px: float = DEFAULT_FOCAL_PX
    image_width: int = DEFAULT_WIDTH
    image_height: int = DEFAULT_HEIGHT
    marker_side: float = 0.20

    def __post_init__(self) -> None:
        if self.focal_px <= 0 or self.marker_side <= 0:
            raise ValueError("focal length and marker side must be positive")
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image size must be positive")

    @property
    def half_fov(self) -> float:
        return math.atan2(self.image_width / 2.0, self.focal_px)


@dataclass(frozen=True)
class NoiseModel:
    pixel_sigma: float = 0.0
    depth_sigma: float = 0.0
    rot_sigma: float = 0.0
    trans_sigma: float = 0.0

    def __post_init__(self) -> None:
        if min(self.pixel_sigma, self.depth_sigma, self.rot_sigma, self.trans_sigma) < 0:
            raise ValueError("noise sigmas must be >= 0")

    @property
    def noiseless(self) -> bool:
        return not any((self.pixel_sigma, self.depth_sigma, self.rot_sigma, self.trans_sigma))


NOISELESS = NoiseModel()


@dataclass(frozen=True)
class Rotate:
    angle: float


@dataclass(frozen=True)
class Translate:
    distance: float


Command = Rotate | Translate


@dataclass
class WorldModel:
    markers: dict[int, Pose2D]
    robot: Pose2D = field(default_factory=Pose2D)
    rng_seed: int = 0

    def marker(self, marker_id: int) -> Pose2D:
        try:
            return self.markers[marker_id]
        except KeyError:
            raise MarkerNotFoundError(f"marker {marker_id} does not exist") from None


def _normal_draw(rng: np.random.Generator | None, sigma: float) -> float:
    if sigma == 0.0 or rng is None:
        return 0.0
    return float(rng.normal(0.0, sigma))


def marker_corners_world(marker: Pose2D, side: float) -> dict[str, tuple[float, float, float]]:
    """3-D corners (x, y, z) labelled as a viewer in front of the marker sees them."""
    # a viewer facing the marker has its right hand along normal + 90 degrees
    rx, ry = math.cos(marker.heading + math.pi / 2), math.sin(marker.heading + math.pi / 2)
    h = side / 2.0
    left = (marker.x - h * rx, marker.y - h * ry)
    right = (marker.x + h * rx, marker.y + h * ry)
    return {
        "a": (*left, h),
        "b": (*left, -h),
        "c": (*right, -h),
        "d": (*right, h),
    }


def project_point(camera_pose: Pose2D, camera: CameraModel, p: tuple[float, float, float]):
    """Pixel (u, v) of a 3-D point and its depth along the optical axis."""
    dx, dy = p[0] - camera_pose.x, p[1] - camera_pose.y
    c, s = math.cos(camera_pose.heading), math.sin(camera_pose.heading)
    forward = c * dx + s * dy
    rightward = s * dx - c * dy
    if forward <= 0:
        return None, forward
    u = camera.image_width / 2.0 + camera.focal_px * rightward / forward
    v = camera.image_height / 2.0 - camera.focal_px * p[2] / forward
    return (u, v), forward


def project_marker(
    world: WorldModel,
    camera: CameraModel,
    marker_id: int,
    noise: NoiseModel = NOISELESS,
    rng: np.random.Generator | None = None,
) -> MarkerObservation | None:
    """Synthetic detection of ``marker_id`` from the robot pose, or None if not visible."""
    marker = world.marker(marker_id)
    robot = world.robot
    nx, ny = math.cos(marker.heading), math.sin(marker.heading)
    if nx * (marker.x - robot.x) + ny * (marker.y - robot.y) >= 0:
        return None  # facing away or edge-on
    pixels = []
    for name, corner in marker_corners_world(marker, camera.marker_side).items():
        uv, depth = project_point(robot, camera, corner)
        if uv is None or depth < NEAR_PLANE_M:
            return None
        u, v = uv
        if not (0 <= u <= camera.image_width and 0 <= v <= camera.image_height):
            return None
        pixels.append((u, v))
    noisy = []
    for u, v in pixels:
        u += _normal_draw(rng, noise.pixel_sigma)
        v += _normal_draw(rng, noise.pixel_sigma)
        noisy.append((min(max(u, 0.0), float(camera.image_width)), min(max(v, 0.0), float(camera.image_height))))
    corners = CornerSet(*noisy)
    depth = math.hypot(marker.x - robot.x, marker.y - robot.y) + _normal_draw(rng, noise.depth_sigma)
    return MarkerObservation(
        marker_id,
        corners,
        max(depth, 1e-6),
        corners.center_x - camera.image_width / 2.0,
    )


def apply_command(
    world: WorldModel,
    command: Command,
    noise: NoiseModel = NOISELESS,
    rng: np.random.Generator | None = None,
) -> WorldModel:
    """World after executing one motion primitive, perturbed by actuation noise."""
    if isinstance(command, Rotate):
        angle = command.angle + _normal_draw(rng, noise.rot_sigma)
        motion = Pose2D(0.0, 0.0, normalize_angle(angle))
    elif isinstance(command, Translate):
        dist = command.distance + _normal_draw(rng, noise.trans_sigma * abs(command.distance))
        motion = Pose2D(dist, 0.0, 0.0)
    else:
        raise TypeError(f"unknown command {command!r}")
    return replace(world, robot=pose_compose(world.robot, motion))


def ground_truth_polar(world: WorldModel, marker_id: int) -> PolarPose:
    """Robot position relative to a marker: range and angle from its normal (CCW)."""
    m = world.marker(marker_id)
    return polar_of(world.robot, m)


def ground_truth_edge(world: WorldModel, a: int, b: int) -> Edge:
    """Edge between two markers evaluated directly from their poses."""
    pa, pb = world.marker(a), world.marker(b)
    dist = math.hypot(pb.x - pa.x, pb.y - pa.y)
    if dist == 0:
        raise DegenerateLinkError(f"markers {a} and {b} coincide")
    ab = math.atan2(pb.y - pa.y, pb.x - pa.x)
    theta_ab = normalize_angle(ab - pa.heading)
    theta_ba = normalize_angle(pb.heading - (ab + math.pi))
    return Edge.from_angles(theta_ab, theta_ba, dist)


def ground_truth_link(world: WorldModel, a: int, b: int) -> LinkMeasurement:
    """Exact link readings for markers a and b from the robot's current position."""
    o_a = ground_truth_polar(world, a)
    o_b = ground_truth_polar(world, b)
    r = world.robot
    pb = world.marker(b)
    facing_b = math.atan2(pb.y - r.y, pb.x - r.x)
    outward = math.atan2(r.y - world.marker(a).y, r.x - world.marker(a).x)
    return LinkMeasurement(o_a, normalize_angle(facing_b - outward), PolarPose(o_b.distance, -o_b.bearing))


class Simulator:
    """A world, its camera and noise, and the generator driving the noise."""

    def __init__(self, world: WorldModel, camera: CameraModel | None = None, noise: NoiseModel = NOISELESS):
        self.world = world
        self.camera = camera or CameraModel()
        self.noise = noise
        self.rng = np.random.default_rng(world.rng_seed)

    @property
    def robot(self) -> Pose2D:
        return self.world.robot

    def observe(self, marker_id: int) -> MarkerObservation | None:
        return project_marker(self.world, self.camera, marker_id, self.noise, self.rng)

    def execute(self, command: Command) -> Pose2D:
        self.world = apply_command(self.world, command, self.noise, self.rng)
        return self.world.robot


def world_from_dict(doc: dict) -> tuple[WorldModel, CameraModel, NoiseModel]:
    markers = {}
    for i, m in enumerate(doc["markers"]):
        mid = int(m["id"])
        if mid in markers:
            raise ValueError(f"markers[{i}]: duplicate marker ID {mid}")
        if mid < 0:
            raise ValueError(f"markers[{i}]: marker ID must be non-negative")
        markers[mid] = Pose2D(float(m["x"]), float(m["y"]), normalize_angle(math.radians(float(m["normal_deg"]))))
    r = doc.get("robot", {})
    robot = Pose2D(float(r.get("x", 0.0)), float(r.get("y", 0.0)),
                   normalize_angle(math.radians(float(r.get("heading_deg", 0.0)))))
    cam = doc.get("camera", {})
    camera = CameraModel(
        float(cam.get("focal_px", DEFAULT_FOCAL_PX)),
        int(cam.get("width", DEFAULT_WIDTH)),
        int(cam.get("height", DEFAULT_HEIGHT)),
        float(cam.get("marker_side_m", 0.20)),
    )
    nz = doc.get("noise", {})
    noise = NoiseModel(
        float(nz.get("pixel", 0.0)),
        float(nz.get("depth", 0.0)),
        math.radians(float(nz.get("rot_deg", 0.0))),
        float(nz.get("trans", 0.0)),
    )
    return WorldModel(markers, robot, int(doc.get("seed", 0))), camera, noise


def load_world(path: str | Path) -> tuple[WorldModel, CameraModel, NoiseModel]:
    """Read a world file (angles in degrees, as written by hand)."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "markers" not in doc:
        raise ValueError(f"{path}: world file needs a 'markers' list")
    try:
        return world_from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from exc
