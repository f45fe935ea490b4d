"""Marker yaw and range from four corner pixels plus a depth reading.

Corners follow a fixed labelling contract: ``a`` top-left, ``b`` bottom-left,
``c`` bottom-right, ``d`` top-right, in image coordinates (x right, y down).
The returned bearing is the yaw of the marker as seen by the camera, which
is also the angle of the camera's position measured counter-clockwise from
the marker's outward normal.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

from .errors import GeometryError, InconsistentCornersError, MisalignmentError
from .geometry import PolarPose

#: tolerance on s_a / s_i above 1 before the corners are declared inconsistent
RATIO_TOLERANCE = 1e-6

#: looser tolerance for detector output carrying pixel noise or off-axis residue
NOISY_RATIO_TOLERANCE = 0.05

#: horizontal centroid offset (px) beyond which a reading is considered off-center
DEFAULT_ALIGNMENT_THRESHOLD_PX = 5.0

LOG_HEADER = ["marker_id", "xa", "ya", "xb", "yb", "xc", "yc", "xd", "yd", "depth_m"]

Point = tuple[float, float]


@dataclass(frozen=True)
class CornerSet:
    a: Point
    b: Point
    c: Point
    d: Point

    def __post_init__(self) -> None:
        for name in "abcd":
            x, y = getattr(self, name)
            if not (math.isfinite(x) and math.isfinite(y)):
                raise GeometryError(f"corner {name} is not finite")
            if x < 0 or y < 0:
                raise GeometryError(f"corner {name} has negative pixel coordinates")

    @property
    def left_height(self) -> float:
        return abs(self.a[1] - self.b[1])

    @property
    def right_height(self) -> float:
        return abs(self.d[1] - self.c[1])

    @property
    def centroid_x(self) -> float:
        return (self.a[0] + self.b[0] + self.c[0] + self.d[0]) / 4.0

    @property
    def center_x(self) -> float:
        """Horizontal pixel of the diagonals' crossing, the projected marker centre.

        Unlike the corner average this is exact under perspective.  Falls back to
        the corner average for a degenerate quadrilateral.
        """
        (xa, ya), (xc, yc) = self.a, self.c
        (xb, yb), (xd, yd) = self.b, self.d
        r = (xc - xa, yc - ya)
        q = (xd - xb, yd - yb)
        denom = r[0] * q[1] - r[1] * q[0]
        if abs(denom) < 1e-12:
            return self.centroid_x
        t = ((xb - xa) * q[1] - (yb - ya) * q[0]) / denom
        return xa + t * r[0]

    def as_tuple(self) -> tuple[float, ...]:
        return (*self.a, *self.b, *self.c, *self.d)


@dataclass(frozen=True)
class MarkerObservation:
    marker_id: int
    corners: CornerSet
    depth: float
    frame_center_offset: float = 0.0

    def __post_init__(self) -> None:
        if self.marker_id < 0:
            raise GeometryError("marker ID must be non-negative")
        if not (self.depth > 0 and math.isfinite(self.depth)):
            raise GeometryError(f"depth must be positive, got {self.depth}")


@dataclass(frozen=True)
class YawEstimate:
    s_a: float
    s_i: float
    theta: float


@dataclass(frozen=True)
class DistanceCorrection:
    """Affine map ``scale * d + offset`` applied to raw depth readings."""

    scale: float = 1.0
    offset: float = 0.0

    def __call__(self, depth: float) -> float:
        return self.scale * depth + self.offset


IDENTITY_CORRECTION = DistanceCorrection()

_REFERENCES = ("mean", "max", "ab", "dc")


def estimate_yaw(
    corners: CornerSet, reference: str = "mean", ratio_tolerance: float = RATIO_TOLERANCE
) -> YawEstimate:
    """Estimate signed marker yaw from the foreshortening of its horizontal sides.

    ``reference`` picks the unforeshortened side length ``s_i``: the mean of the
    two vertical sides (default), the taller one (``"max"``), or a named side.
    Under an ideal pinhole with the marker centred, the mean makes
    ``s_a / s_i`` equal to ``cos(yaw)`` exactly; the taller side alone is
    biased by roughly ``side / (2 * distance)`` rad.
    """
    left, right = corners.left_height, corners.right_height
    if left <= 0 or right <= 0:
        raise GeometryError("degenerate vertical side in corner set")
    if reference == "mean":
        s_i = 0.5 * (left + right)
    elif reference == "max":
        s_i = max(left, right)
    elif reference == "ab":
        s_i = left
    elif reference == "dc":
        s_i = right
    else:
        raise ValueError(f"reference must be one of {_REFERENCES}, got {reference!r}")

    a, b, c, d = corners.a, corners.b, corners.c, corners.d
    s_a = (abs(a[0] - d[0]) + abs(c[0] - b[0])) / 2.0
    ratio = s_a / s_i
    if ratio > 1.0 + ratio_tolerance:
        raise InconsistentCornersError(
            f"apparent width {s_a:.3f}px exceeds reference side {s_i:.3f}px"
        )
    magnitude = math.acos(max(-1.0, min(1.0, ratio)))
    # taller right side means the right edge is nearer the camera; ties read as positive
    theta = -magnitude if left > right else magnitude
    return YawEstimate(s_a, s_i, theta)


def localize(
    obs: MarkerObservation,
    correction: DistanceCorrection = IDENTITY_CORRECTION,
    *,
    alignment_threshold: float = DEFAULT_ALIGNMENT_THRESHOLD_PX,
    reference: str = "mean",
    ratio_tolerance: float = RATIO_TOLERANCE,
) -> PolarPose:
    """Camera position relative to the observed marker as (distance, yaw)."""
    if abs(obs.frame_center_offset) > alignment_threshold:
        raise MisalignmentError(
            f"marker {obs.marker_id} is {obs.frame_center_offset:+.1f}px off center "
            f"(threshold {alignment_threshold}px)"
        )
    yaw = estimate_yaw(obs.corners, reference, ratio_tolerance)
    return PolarPose(max(0.0, correction(obs.depth)), yaw.theta)


def to_cartesian(p: PolarPose) -> tuple[float, float]:
    """Lateral ``x`` (to the right when facing the marker) and forward ``y``."""
    return p.distance * math.sin(p.bearing), p.distance * math.cos(p.bearing)


def write_observation_log(observations: Iterable[MarkerObservation], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(LOG_HEADER)
    for obs in observations:
        writer.writerow([obs.marker_id, *(repr(v) for v in obs.corners.as_tuple()), repr(obs.depth)])


def read_observation_log(fh: TextIO) -> Iterator[MarkerObservation]:
    """Parse an observation log; raises ``ValueError`` naming the bad row.

    Logged rows carry no centroid offset, so they are treated as centred.
    """
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None:
        return
    if [h.strip() for h in header] != LOG_HEADER:
        raise ValueError(f"row 1: expected header {','.join(LOG_HEADER)}")
    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(LOG_HEADER):
            raise ValueError(f"row {row_no}: expected {len(LOG_HEADER)} fields, got {len(row)}")
        try:
            marker_id = int(row[0])
            xa, ya, xb, yb, xc, yc, xd, yd, depth = (float(v) for v in row[1:])
            corners = CornerSet((xa, ya), (xb, yb), (xc, yc), (xd, yd))
            yield MarkerObservation(marker_id, corners, depth)
        except (ValueError, GeometryError) as exc:
            raise ValueError(f"row {row_no}: {exc}") from exc
