"""Rotate-translate locomotion, marker search and alignment, heading goals and docking."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .errors import (
    DegenerateLinkError,
    MarkerNavError,
    MarkerNotFoundError,
    MissionError,
    SearchRequiredError,
)
from .geometry import (
    PolarPose,
    Pose2D,
    loc_angle,
    loc_third_side,
    normalize_angle,
    polar_of,
    pose_compose,
)
from .mapgraph import Edge, LinkMeasurement, MarkerGraph, derive_edge, edge_from_link, relative_pose
from .odometry import OdometryState, update
from .perception import (
    DEFAULT_ALIGNMENT_THRESHOLD_PX,
    IDENTITY_CORRECTION,
    NOISY_RATIO_TOLERANCE,
    DistanceCorrection,
    MarkerObservation,
    localize,
)
from .simulator import Command, Rotate, Simulator, Translate

log = logging.getLogger(__name__)

SEARCH_STEP = math.radians(15.0)
MAX_ALIGN_ITERATIONS = 20

# nominal speeds used only to report phase durations
ANGULAR_SPEED = 0.5  # rad/s
LINEAR_SPEED = 0.3  # m/s


@dataclass(frozen=True)
class Tolerances:
    angular: float = math.radians(0.5)
    linear: float = 0.01

    def __post_init__(self) -> None:
        if self.angular <= 0 or self.linear <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class Done:
    pass


@dataclass
class LocomotionGoal:
    target: PolarPose
    progress: PolarPose = field(default_factory=lambda: PolarPose(0.0, 0.0))

    def advance(self, command: Command) -> None:
        """Credit the goal with an executed command, as the wheel encoders report it."""
        if isinstance(command, Rotate):
            self.progress = PolarPose(self.progress.distance, self.progress.bearing + command.angle)
        elif isinstance(command, Translate):
            self.progress = PolarPose(self.progress.distance + command.distance, self.progress.bearing)


def step_goal(goal: LocomotionGoal, tol: Tolerances = Tolerances()) -> Command | Done:
    """Next motion: close the angular gap first, then the distance gap."""
    theta_diff = goal.target.bearing - goal.progress.bearing
    if abs(theta_diff) > tol.angular:
        return Rotate(theta_diff)
    d_diff = goal.target.distance - goal.progress.distance
    if abs(d_diff) > tol.linear:
        return Translate(d_diff)
    return Done()


@dataclass(frozen=True)
class Heading:
    o: PolarPose


def heading_to_target(o_ra: PolarPose, e_ac: Edge) -> Heading:
    """Goal towards marker c for a robot localized against marker a and facing it.

    The returned bearing is the counter-clockwise turn from the current facing
    (towards a).  When c lies counter-clockwise of the robot as seen from a,
    i.e. ``theta_ac - theta_ra > 0``, the turn is clockwise.
    """
    if o_ra.distance <= 0:
        raise ValueError("robot must be localized at a positive distance from marker a")
    spread = normalize_angle(e_ac.theta_ab - o_ra.bearing)
    d_heading = loc_third_side(e_ac.dist, o_ra.distance, spread)
    if d_heading < 1e-9:
        raise DegenerateLinkError("robot is already at the target marker")
    turn = loc_angle(e_ac.dist, o_ra.distance, d_heading)
    return Heading(PolarPose(d_heading, -turn if spread > 0 else turn))


@dataclass(frozen=True)
class DockingPlan:
    """Docking geometry in the marker frame.

    ``waypoint`` is the first point (range and angle from the marker normal);
    a zero range skips that leg.  ``final_yaw`` is the robot heading relative to
    facing the marker: 0 for front probes, pi for rear probes.
    """

    waypoint: PolarPose = field(default_factory=lambda: PolarPose(1.0, 0.0))
    final_yaw: float = 0.0
    approach_distance: float = 0.3

    def __post_init__(self) -> None:
        if self.approach_distance < 0:
            raise ValueError("approach distance must be >= 0")
        if abs(math.sin(self.final_yaw)) > 1e-9:
            raise ValueError("final yaw must keep the robot on the marker normal (0 or pi)")


@dataclass
class TrajectoryRecord:
    step: int
    truth: Pose2D
    odometry: PolarPose
    phase: str


@dataclass
class PhaseStat:
    phase: str
    commands: int = 0
    duration_s: float = 0.0


class Robot:
    """Control loop for one simulated robot.

    ``belief`` is the robot's pose in the frame of ``frame_marker`` (x along its
    normal), maintained by dead reckoning between marker readings.
    """

    def __init__(
        self,
        sim: Simulator,
        tolerances: Tolerances = Tolerances(),
        correction: DistanceCorrection = IDENTITY_CORRECTION,
        alignment_threshold: float = DEFAULT_ALIGNMENT_THRESHOLD_PX,
        search_step: float = SEARCH_STEP,
        ratio_tolerance: float = NOISY_RATIO_TOLERANCE,
    ):
        self.sim = sim
        self.tol = tolerances
        self.correction = correction
        self.alignment_threshold = alignment_threshold
        self.search_step = search_step
        self.ratio_tolerance = ratio_tolerance
        self.odometry = OdometryState(pose=sim.robot, origin=sim.robot)
        self.belief: Pose2D | None = None
        self.frame_marker: int | None = None
        self.phase = "idle"
        self.trajectory: list[TrajectoryRecord] = []
        self.observations: list[MarkerObservation] = []
        self.phases: list[PhaseStat] = []
        self._record()

    # low-level motion

    def _record(self) -> None:
        self.trajectory.append(
            TrajectoryRecord(len(self.trajectory), self.sim.robot, self.odometry.polar, self.phase)
        )

    def begin_phase(self, name: str) -> None:
        self.phase = name
        self.phases.append(PhaseStat(name))

    def command(self, cmd: Command) -> None:
        self.sim.execute(cmd)
        if isinstance(cmd, Rotate):
            self.odometry = update(self.odometry, PolarPose(0.0, cmd.angle))
            delta, cost = Pose2D(0.0, 0.0, cmd.angle), abs(cmd.angle) / ANGULAR_SPEED
        else:
            if cmd.distance >= 0:
                self.odometry = update(self.odometry, PolarPose(cmd.distance, 0.0))
            else:
                # reversing is a half-turn, a forward leg and a half-turn back
                self.odometry = update(self.odometry, PolarPose(-cmd.distance, math.pi))
                self.odometry = update(self.odometry, PolarPose(0.0, -math.pi))
            delta, cost = Pose2D(cmd.distance, 0.0, 0.0), abs(cmd.distance) / LINEAR_SPEED
        if self.belief is not None:
            self.belief = pose_compose(self.belief, delta)
        if self.phases:
            self.phases[-1].commands += 1
            self.phases[-1].duration_s += cost
        self._record()

    def execute_goal(self, target: PolarPose) -> int:
        """Drive a robot-relative polar goal to completion; returns the command count."""
        goal = LocomotionGoal(target)
        count = 0
        while not isinstance(cmd := step_goal(goal, self.tol), Done):
            self.command(cmd)
            goal.advance(cmd)
            count += 1
        return count

    # perception

    def align_to_marker(self, marker_id: int) -> MarkerObservation:
        """Turn until the marker centroid is within the alignment threshold of image center."""
        for _ in range(MAX_ALIGN_ITERATIONS):
            obs = self.sim.observe(marker_id)
            if obs is None:
                raise SearchRequiredError(f"marker {marker_id} left the field of view")
            if abs(obs.frame_center_offset) <= self.alignment_threshold:
                self.observations.append(obs)
                return obs
            # positive offset: marker right of center, so turn clockwise
            self.command(Rotate(-math.atan2(obs.frame_center_offset, self.sim.camera.focal_px)))
        raise SearchRequiredError(f"alignment on marker {marker_id} did not converge")

    def find_marker(self, marker_id: int) -> MarkerObservation:
        """Sweep in fixed increments for up to one full turn, then align on the marker."""
        self.sim.world.marker(marker_id)
        steps = math.ceil(2 * math.pi / self.search_step - 1e-9)
        for i in range(steps + 1):
            if self.sim.observe(marker_id) is not None:
                return self.align_to_marker(marker_id)
            if i < steps:
                self.command(Rotate(self.search_step))
        raise MarkerNotFoundError(f"marker {marker_id} not found in a full turn")

    def _read(self, obs: MarkerObservation) -> PolarPose:
        return localize(
            obs, self.correction,
            alignment_threshold=self.alignment_threshold, ratio_tolerance=self.ratio_tolerance,
        )

    def localize_on(self, obs: MarkerObservation) -> PolarPose:
        """Read range and yaw, and re-anchor the belief in the marker's frame."""
        polar = self._read(obs)
        off_axis = math.atan2(obs.frame_center_offset, self.sim.camera.focal_px)
        self.belief = Pose2D(
            polar.distance * math.cos(polar.bearing),
            polar.distance * math.sin(polar.bearing),
            normalize_angle(polar.bearing + math.pi + off_axis),
        )
        self.frame_marker = obs.marker_id
        return polar

    def acquire(self, marker_id: int) -> PolarPose:
        return self.localize_on(self.find_marker(marker_id))

    # missions

    def go_to(self, point: Pose2D) -> None:
        """Drive to a point given in the current marker frame, using the belief."""
        goal = polar_of(point, self.belief)
        if goal.distance > self.tol.linear:
            self.execute_goal(goal)

    def link(self, a: int, b: int) -> Edge:
        """Measure the edge between markers a and b from the current spot."""
        o_a = self.acquire(a)
        facing_a = o_a.bearing + math.pi
        obs_b = self.find_marker(b)
        off_b = math.atan2(obs_b.frame_center_offset, self.sim.camera.focal_px)
        turn = normalize_angle(self.belief.heading - off_b - facing_a)
        o_b = self._read(obs_b)
        edge = edge_from_link(LinkMeasurement.from_readings(o_a, turn, o_b))
        self.localize_on(obs_b)
        return edge

    def goto_marker(self, graph: MarkerGraph, current: int, target: int, stop_short: float = 0.0) -> Heading:
        """Localize on ``current`` and drive the heading towards ``target`` taken from the map."""
        o_ra = self.acquire(current)
        heading = heading_to_target(o_ra, derive_edge(graph, current, target))
        off_axis = normalize_angle(self.belief.heading - (o_ra.bearing + math.pi))
        self.execute_goal(
            PolarPose(max(0.0, heading.o.distance - stop_short), normalize_angle(heading.o.bearing - off_axis))
        )
        return heading

    def dock(self, marker_id: int, plan: DockingPlan = DockingPlan()) -> DockingReport:
        """Search, localize, reach the waypoint, turn the probes in and approach."""
        try:
            self.begin_phase("search")
            obs = self.find_marker(marker_id)
            self.begin_phase("localize")
            self.localize_on(obs)
            if plan.waypoint.distance > 0:
                self.begin_phase("waypoint")
                w = plan.waypoint
                self.go_to(Pose2D(w.distance * math.cos(w.bearing), w.distance * math.sin(w.bearing)))
            self.begin_phase("align")
            turn = normalize_angle(math.pi + plan.final_yaw - self.belief.heading)
            if abs(turn) > self.tol.angular:
                self.command(Rotate(turn))
            self.begin_phase("approach")
            # signed travel along the heading that lands on the normal at the approach distance
            h = self.belief.heading
            travel = (plan.approach_distance - self.belief.x) * math.cos(h) - self.belief.y * math.sin(h)
            if abs(travel) > self.tol.linear:
                self.command(Translate(travel))
        except MarkerNavError as exc:
            raise MissionError(self.phase, exc) from exc
        return self.dock_report(marker_id, plan)

    def dock_report(self, marker_id: int, plan: DockingPlan) -> DockingReport:
        m = self.sim.world.marker(marker_id)
        ideal = Pose2D(
            m.x + plan.approach_distance * math.cos(m.heading),
            m.y + plan.approach_distance * math.sin(m.heading),
            normalize_angle(m.heading + math.pi + plan.final_yaw),
        )
        r = self.sim.robot
        return DockingReport(
            marker_id,
            math.hypot(r.x - ideal.x, r.y - ideal.y),
            abs(normalize_angle(r.heading - ideal.heading)),
            [p for p in self.phases],
        )


@dataclass
class DockingReport:
    marker_id: int
    position_error_m: float
    yaw_error_rad: float
    phases: list[PhaseStat]

    def to_dict(self) -> dict:
        return {
            "marker_id": self.marker_id,
            "position_error_m": self.position_error_m,
            "yaw_error_rad": self.yaw_error_rad,
            "phases": [
                {"phase": p.phase, "commands": p.commands, "duration_s": p.duration_s} for p in self.phases
            ],
        }


def standoff_point(marker_in_frame: Pose2D, standoff: float) -> Pose2D:
    """Point ``standoff`` metres out along a marker's normal."""
    return Pose2D(
        marker_in_frame.x + standoff * math.cos(marker_in_frame.heading),
        marker_in_frame.y + standoff * math.sin(marker_in_frame.heading),
    )


def run_tour(
    robot: Robot,
    graph: MarkerGraph,
    start: int,
    legs: list[int],
    *,
    relocalize: bool,
    standoff: float = 0.8,
) -> float:
    """Drive between marker standoff points using the map; returns final position error.

    With ``relocalize`` the robot finds and reads each target marker at the end
    of its leg; otherwise it dead-reckons every leg from the first reading.
    """
    robot.acquire(start)
    anchor = robot.frame_marker
    target = start
    for target in legs:
        if target == anchor:
            goal = standoff_point(Pose2D(0.0, 0.0, 0.0), standoff)
        else:
            goal = standoff_point(relative_pose(derive_edge(graph, anchor, target)), standoff)
        robot.go_to(goal)
        if relocalize:
            robot.acquire(target)
            anchor = target
    m = robot.sim.world.marker(target)
    ideal = standoff_point(m, standoff)
    r = robot.sim.robot
    return math.hypot(r.x - ideal.x, r.y - ideal.y)


def map_tour(robot: Robot, tour: list[int], standoff: float = 0.8) -> MarkerGraph:
    """Link consecutive markers of a tour, moving in front of each marker before the next link."""
    graph = MarkerGraph()
    graph.add_node(tour[0])
    for a, b in zip(tour, tour[1:]):
        try:
            graph.add_edge(a, b, robot.link(a, b))
            robot.go_to(standoff_point(Pose2D(), standoff))
        except MarkerNavError as exc:
            raise MissionError(f"link {a}-{b}", exc) from exc
    return graph
