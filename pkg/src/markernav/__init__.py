"""Fiducial-marker localization, marker node-graph mapping and navigation in the plane."""

from .geometry import PolarPose, Pose2D, loc_angle, loc_third_side, normalize_angle, polar_of, pose_compose
from .mapgraph import Edge, LinkMeasurement, MarkerGraph, compose_edges, derive_edge, edge_from_link, reverse
from .perception import CornerSet, MarkerObservation, estimate_yaw, localize, to_cartesian

__all__ = [
    "CornerSet",
    "Edge",
    "LinkMeasurement",
    "MarkerGraph",
    "MarkerObservation",
    "PolarPose",
    "Pose2D",
    "compose_edges",
    "derive_edge",
    "edge_from_link",
    "estimate_yaw",
    "loc_angle",
    "loc_third_side",
    "localize",
    "normalize_angle",
    "polar_of",
    "pose_compose",
    "reverse",
    "to_cartesian",
]
