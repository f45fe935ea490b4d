"""Origin-relative odometry from successive rotate-then-drive goals.

Two routes compute the same position.  :func:`update` advances a full
:class:`~markernav.geometry.Pose2D` and reads the polar position back from it;
:func:`compose_polar` chains law-of-cosines triangles directly on polar
positions.  :func:`polar_track` drives the second route over a goal sequence
so the two can be checked against each other.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, TextIO

from .geometry import (
    IDENTITY,
    Pose2D,
    PolarPose,
    loc_angle,
    loc_third_side,
    normalize_angle,
    polar_of,
    pose_compose,
)

ORIGIN = PolarPose(0.0, 0.0)

#: ratio prev/delta below which the previous position counts as the origin
NEAR_ORIGIN = 1e-9

TRAJECTORY_HEADER = ["step", "x_m", "y_m", "heading_rad", "d_m", "theta_rad"]


def compose_polar(prev: PolarPose, delta: PolarPose) -> PolarPose:
    """Chain a goal onto an origin-relative polar position.

    ``delta.bearing`` is the turn measured from the outward radial direction
    (origin towards ``prev``).  The unsigned arccos angle at the origin takes
    the sign of that turn.
    """
    if delta.distance == 0.0:
        return prev
    # a start this close to the origin has no usable bearing triangle
    if prev.distance <= NEAR_ORIGIN * delta.distance:
        return PolarPose(delta.distance, normalize_angle(prev.bearing + delta.bearing))
    turn = normalize_angle(delta.bearing)
    d_i = loc_third_side(prev.distance, delta.distance, math.pi - abs(turn))
    if d_i == 0.0:
        return ORIGIN
    swing = _origin_angle(prev.distance, delta.distance, d_i, turn)
    if turn < 0:
        swing = -swing
    return PolarPose(d_i, normalize_angle(prev.bearing + swing))


def _origin_angle(d_prev: float, d_step: float, d_i: float, turn: float) -> float:
    """arccos((d_i^2 + d_prev^2 - d_step^2) / (2 d_i d_prev)), evaluated stably.

    Writing the argument as 1 - m and -1 + p, the factors of m and p that
    cancel near a collinear step are rewritten through the turn angle, then
    the angle is 2 atan2(sqrt(m), sqrt(p)).
    """
    sin2 = math.sin(0.5 * turn) ** 2
    cos2 = math.cos(0.5 * turn) ** 2
    four_ab = 4.0 * d_prev * d_step
    # d_step + d_prev - d_i, and d_i - |d_prev - d_step|
    outer_gap = four_ab * sin2 / (d_prev + d_step + d_i)
    inner_gap = four_ab * cos2 / (d_i + abs(d_prev - d_step))
    if d_prev >= d_step:
        m = outer_gap * inner_gap
        p = (d_i + d_prev - d_step) * (d_i + d_prev + d_step)
    else:
        m = outer_gap * (d_step + d_i - d_prev)
        p = inner_gap * (d_i + d_prev + d_step)
    return 2.0 * math.atan2(math.sqrt(max(0.0, m)), math.sqrt(max(0.0, p)))


def polar_track(goals: Iterable[PolarPose], heading: float = 0.0) -> list[PolarPose]:
    """Polar positions after each goal, computed with :func:`compose_polar` only.

    The robot heading is a running sum of turns; it converts each goal's turn,
    which is relative to the robot, into a turn relative to the outward radial.
    """
    position = ORIGIN
    out = []
    for goal in goals:
        outward = heading - position.bearing
        position = compose_polar(position, PolarPose(goal.distance, normalize_angle(goal.bearing + outward)))
        heading = normalize_angle(heading + goal.bearing)
        out.append(position)
    return out


@dataclass(frozen=True)
class OdometryState:
    polar: PolarPose = ORIGIN
    pose: Pose2D = IDENTITY
    step_index: int = 0
    origin: Pose2D = field(default=IDENTITY)


def update(state: OdometryState, executed_goal: PolarPose) -> OdometryState:
    """Advance by a rotate-then-translate goal expressed in the robot frame."""
    pose = pose_compose(state.pose, Pose2D.from_motion(executed_goal.bearing, executed_goal.distance))
    if state.step_index == 0 and state.pose == state.origin:
        # first goal from the origin is the odometry itself
        if executed_goal.distance > 0:
            polar = PolarPose(executed_goal.distance, normalize_angle(executed_goal.bearing))
        else:
            polar = ORIGIN
    else:
        polar = polar_of(pose, state.origin)
    return OdometryState(polar, pose, state.step_index + 1, state.origin)


def reset(state: OdometryState) -> OdometryState:
    """Make the current pose the new origin."""
    return replace(state, polar=ORIGIN, origin=state.pose, step_index=0)


def trajectory_rows(states: Iterable[OdometryState]) -> list[list[str]]:
    return [
        [str(s.step_index), repr(s.pose.x), repr(s.pose.y), repr(s.pose.heading),
         repr(s.polar.distance), repr(s.polar.bearing)]
        for s in states
    ]


def write_trajectory(states: Iterable[OdometryState], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    writer.writerows(trajectory_rows(states))
