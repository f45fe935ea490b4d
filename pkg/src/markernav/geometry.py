"""Planar angle, triangle and rigid-pose primitives.

Angles are plain floats in radians.  Every function that returns an angle
returns it normalized to ``(-pi, pi]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError, InconsistentTriangleError

TAU = 2.0 * math.pi

#: arccos arguments this far outside [-1, 1] are clamped, anything further is an error
ACOS_TOLERANCE = 1e-6


def normalize_angle(raw: float) -> float:
    """Reduce ``raw`` radians to the interval ``(-pi, pi]``."""
    if not math.isfinite(raw):
        raise GeometryError(f"angle must be finite, got {raw!r}")
    r = math.remainder(raw, TAU)
    if r <= -math.pi:
        r += TAU
    return r


@dataclass(frozen=True)
class PolarPose:
    """Distance and bearing of a point, as seen from some reference."""

    distance: float
    bearing: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.distance) and math.isfinite(self.bearing)):
            raise GeometryError("polar pose must be finite")
        if self.distance < 0:
            raise GeometryError(f"distance must be >= 0, got {self.distance}")


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.heading)):
            raise GeometryError("pose components must be finite")

    @classmethod
    def from_motion(cls, turn: float, forward: float) -> Pose2D:
        """Relative pose reached by rotating ``turn`` then driving ``forward``."""
        h = normalize_angle(turn)
        return cls(forward * math.cos(h), forward * math.sin(h), h)


IDENTITY = Pose2D()


def loc_third_side(d1: float, d2: float, included_angle: float) -> float:
    """Side opposite ``included_angle`` in a triangle with adjacent sides d1, d2."""
    if d1 < 0 or d2 < 0:
        raise GeometryError(f"side lengths must be >= 0, got {d1}, {d2}")
    # (d1-d2)^2 + 4 d1 d2 sin^2(g/2) is the law of cosines without cancellation
    s = math.sin(0.5 * included_angle)
    return math.sqrt((d1 - d2) ** 2 + 4.0 * d1 * d2 * s * s)


def loc_angle(opposite: float, adj1: float, adj2: float) -> float:
    """Angle between sides ``adj1`` and ``adj2`` given the side ``opposite`` it.

    Computes ``arccos((adj1^2 + adj2^2 - opposite^2) / (2 adj1 adj2))`` in [0, pi].
    Arguments within ``ACOS_TOLERANCE`` of the boundary are clamped; anything
    further out raises :class:`InconsistentTriangleError`.
    """
    if adj1 <= 0 or adj2 <= 0:
        raise GeometryError(f"adjacent sides must be > 0, got {adj1}, {adj2}")
    if opposite < 0:
        raise GeometryError(f"opposite side must be >= 0, got {opposite}")
    denom = 2.0 * adj1 * adj2
    # 1 - arg and 1 + arg in factored form; both stay accurate near the ends
    one_minus = (opposite - adj1 + adj2) * (opposite + adj1 - adj2) / denom
    one_plus = (adj1 + adj2 - opposite) * (adj1 + adj2 + opposite) / denom
    if one_minus < -ACOS_TOLERANCE or one_plus < -ACOS_TOLERANCE:
        raise InconsistentTriangleError(
            f"sides ({opposite}, {adj1}, {adj2}) give arccos argument "
            f"{1.0 - one_minus:.9g} outside [-1, 1]"
        )
    if one_minus <= one_plus:
        return 2.0 * math.asin(min(1.0, math.sqrt(max(0.0, one_minus) / 2.0)))
    return math.pi - 2.0 * math.asin(min(1.0, math.sqrt(max(0.0, one_plus) / 2.0)))


def pose_compose(base: Pose2D, motion: Pose2D) -> Pose2D:
    """Apply ``motion``, expressed in ``base``'s frame, on top of ``base``."""
    c, s = math.cos(base.heading), math.sin(base.heading)
    return Pose2D(
        base.x + c * motion.x - s * motion.y,
        base.y + s * motion.x + c * motion.y,
        normalize_angle(base.heading + motion.heading),
    )


def pose_inverse(p: Pose2D) -> Pose2D:
    c, s = math.cos(p.heading), math.sin(p.heading)
    return Pose2D(-c * p.x - s * p.y, s * p.x - c * p.y, normalize_angle(-p.heading))


def pose_between(frame: Pose2D, p: Pose2D) -> Pose2D:
    """Express ``p`` in the coordinates of ``frame``."""
    return pose_compose(pose_inverse(frame), p)


def polar_of(target: Pose2D, observer: Pose2D) -> PolarPose:
    """Range and signed bearing of ``target`` relative to ``observer``'s heading."""
    dx, dy = target.x - observer.x, target.y - observer.y
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return PolarPose(0.0, 0.0)
    return PolarPose(dist, normalize_angle(math.atan2(dy, dx) - observer.heading))


def unit(angle: float) -> tuple[float, float]:
    return math.cos(angle), math.sin(angle)
