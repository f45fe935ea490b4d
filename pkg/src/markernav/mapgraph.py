"""Marker node graph: edge construction, edge composition and persistence.

An edge ``E_ab`` holds four values linking markers ``a`` and ``b``:

* ``theta_ab`` - angle from a's outward normal to the direction a->b,
  counter-clockwise positive;
* ``theta_ba`` - angle from b's outward normal to the direction b->a,
  clockwise positive;
* ``phi`` - ``pi - (theta_ab + theta_ba)``, which equals the heading of a's
  normal minus that of b's normal;
* ``dist`` - straight-line distance between the marker centres.

With opposite rotation senses at the two ends, two markers on facing or
adjacent walls have both angles positive, and ``phi`` adds along a chain.
"""

from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import TextIO

from .errors import (
    DegenerateLinkError,
    GeometryError,
    MapFormatError,
    MapValidationError,
    NodeNotFoundError,
    NoPathError,
)
from .geometry import PolarPose, Pose2D, loc_angle, loc_third_side, normalize_angle

log = logging.getLogger(__name__)

#: distances below this are treated as coincident markers
MIN_LINK_DISTANCE = 1e-9

#: tolerance on the phi invariant for edges read from disk
LOAD_TOLERANCE = 1e-6


@dataclass(frozen=True)
class Edge:
    phi: float
    theta_ab: float
    theta_ba: float
    dist: float

    @classmethod
    def from_angles(cls, theta_ab: float, theta_ba: float, dist: float) -> Edge:
        theta_ab, theta_ba = normalize_angle(theta_ab), normalize_angle(theta_ba)
        return cls(normalize_angle(math.pi - (theta_ab + theta_ba)), theta_ab, theta_ba, dist)

    def invariant_error(self) -> float:
        """Distance of ``phi`` from ``pi - (theta_ab + theta_ba)``, modulo 2 pi."""
        return abs(normalize_angle(self.phi - (math.pi - (self.theta_ab + self.theta_ba))))

    def is_valid(self, tol: float = 1e-9) -> bool:
        return self.dist >= 0 and self.invariant_error() <= tol


@dataclass(frozen=True)
class LinkMeasurement:
    """Robot readings taken at one spot that tie marker ``a`` to marker ``b``.

    ``o_a``: robot position relative to a (range, angle counter-clockwise from
    a's normal), either measured directly or carried by odometry.
    ``theta_delta``: robot turn from the outward radial (the direction a->robot)
    to the direction robot->b, counter-clockwise positive.
    ``o_b``: range to b and the angle from b's normal to the robot measured
    clockwise, i.e. the negated yaw reading of b.
    """

    o_a: PolarPose
    theta_delta: float
    o_b: PolarPose

    def __post_init__(self) -> None:
        if self.o_a.distance <= 0 or self.o_b.distance <= 0:
            raise GeometryError("link distances must be > 0")

    @classmethod
    def from_readings(cls, o_a: PolarPose, turn_from_a: float, yaw_b: PolarPose) -> LinkMeasurement:
        """Build from a reading of a, the turn from facing a to facing b, and a reading of b."""
        return cls(
            o_a,
            normalize_angle(turn_from_a - math.pi),
            PolarPose(yaw_b.distance, normalize_angle(-yaw_b.bearing)),
        )


def edge_from_link(m: LinkMeasurement) -> Edge:
    """Edge between the two markers of a link measurement.

    Positive ``theta_delta`` is the configuration of the law-of-cosines
    construction as usually drawn; a negative turn mirrors it, which flips
    the sign of both arccos terms.
    """
    d_a, d_b = m.o_a.distance, m.o_b.distance
    turn = normalize_angle(m.theta_delta)
    d_ab = loc_third_side(d_a, d_b, math.pi - abs(turn))
    if d_ab < MIN_LINK_DISTANCE:
        raise DegenerateLinkError("linked markers coincide")
    sign = 1.0 if turn >= 0 else -1.0
    theta_ab = m.o_a.bearing + sign * loc_angle(d_b, d_a, d_ab)
    theta_ba = m.o_b.bearing + sign * loc_angle(d_a, d_b, d_ab)
    return Edge.from_angles(theta_ab, theta_ba, d_ab)


def compose_edges(e_ab: Edge, e_bc: Edge) -> Edge:
    """Edge a->c from edges a->b and b->c sharing marker b."""
    if e_ab.dist < MIN_LINK_DISTANCE or e_bc.dist < MIN_LINK_DISTANCE:
        raise DegenerateLinkError("cannot compose a zero-length edge")
    phi = normalize_angle(e_ab.phi + e_bc.phi)
    # angle at b, counter-clockwise from b->a to b->c
    at_b = normalize_angle(e_ab.theta_ba + e_bc.theta_ab)
    d_ac = loc_third_side(e_ab.dist, e_bc.dist, at_b)
    if d_ac < MIN_LINK_DISTANCE:
        raise DegenerateLinkError("composed edge joins coincident markers")
    sign = 1.0 if at_b >= 0 else -1.0
    theta_ac = normalize_angle(e_ab.theta_ab - sign * loc_angle(e_bc.dist, e_ab.dist, d_ac))
    theta_ca = normalize_angle(math.pi - phi - theta_ac)
    return Edge(phi, theta_ac, theta_ca, d_ac)


def reverse(e: Edge) -> Edge:
    """The same link seen from the other end (E_ba from E_ab)."""
    return Edge(
        normalize_angle(-e.phi),
        normalize_angle(-e.theta_ba),
        normalize_angle(-e.theta_ab),
        e.dist,
    )


def relative_pose(e: Edge) -> Pose2D:
    """Pose of marker b in marker a's frame (x along a's normal, y to its left)."""
    return Pose2D(
        e.dist * math.cos(e.theta_ab),
        e.dist * math.sin(e.theta_ab),
        normalize_angle(-e.phi),
    )


@dataclass
class MarkerGraph:
    nodes: set[int] = field(default_factory=set)
    edges: dict[tuple[int, int], Edge] = field(default_factory=dict)
    home: int | None = None

    def add_node(self, marker_id: int) -> None:
        if marker_id < 0:
            raise ValueError("marker IDs are non-negative")
        self.nodes.add(marker_id)
        if self.home is None:
            self.home = marker_id

    def add_edge(self, a: int, b: int, edge: Edge) -> None:
        """Store ``edge`` as E_ab; a previous measurement of the pair is replaced."""
        if a == b:
            raise ValueError("self-edges are undefined")
        self.add_node(a)
        self.add_node(b)
        old = self.edges.pop((a, b), None)
        if old is None and (b, a) in self.edges:
            old = reverse(self.edges.pop((b, a)))
        if old is not None:
            log.info(
                "re-measured edge %d-%d: dist changed by %.4g m, phi by %.4g rad",
                a, b, abs(edge.dist - old.dist), abs(normalize_angle(edge.phi - old.phi)),
            )
        self.edges[(a, b)] = edge

    def neighbors(self, node: int) -> list[int]:
        out = {b for a, b in self.edges if a == node} | {a for a, b in self.edges if b == node}
        return sorted(out)

    def edge(self, a: int, b: int) -> Edge | None:
        """Stored edge for the ordered pair, reversing the stored direction if needed."""
        if (a, b) in self.edges:
            return self.edges[(a, b)]
        if (b, a) in self.edges:
            return reverse(self.edges[(b, a)])
        return None

    def path(self, start: int, goal: int) -> list[int]:
        """Fewest-hop node path; ties go to the lowest-ID next node."""
        for node in (start, goal):
            if node not in self.nodes:
                raise NodeNotFoundError(f"marker {node} is not in the graph")
        parent: dict[int, int | None] = {start: None}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node == goal:
                break
            for nxt in self.neighbors(node):
                if nxt not in parent:
                    parent[nxt] = node
                    queue.append(nxt)
        if goal not in parent:
            raise NoPathError(f"no path between markers {start} and {goal}")
        out = [goal]
        while parent[out[-1]] is not None:
            out.append(parent[out[-1]])
        return out[::-1]

    def to_dict(self) -> dict:
        return {
            "home": self.home,
            "nodes": sorted(self.nodes),
            "edges": [
                {"a": a, "b": b, "phi": e.phi, "theta_ab": e.theta_ab, "theta_ba": e.theta_ba, "d": e.dist}
                for (a, b), e in sorted(self.edges.items())
            ],
        }


def derive_edge(g: MarkerGraph, start: int, goal: int) -> Edge:
    """Edge between any two connected markers, composing stored edges along a path."""
    if start == goal:
        raise ValueError(f"edge from marker {start} to itself is undefined")
    nodes = g.path(start, goal)
    edge = g.edge(nodes[0], nodes[1])
    for a, b in zip(nodes[1:], nodes[2:]):
        edge = compose_edges(edge, g.edge(a, b))
    return edge


def invalid_edges(g: MarkerGraph, tol: float = LOAD_TOLERANCE) -> list[tuple[int, int]]:
    bad = []
    for (a, b), e in sorted(g.edges.items()):
        if a not in g.nodes or b not in g.nodes or not e.is_valid(tol):
            bad.append((a, b))
    return bad


def save(g: MarkerGraph, sink: TextIO) -> None:
    # float repr is shortest round-trip, so load(save(g)) == g bit for bit
    json.dump(g.to_dict(), sink, indent=2)
    sink.write("\n")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MapFormatError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise MapFormatError(f"{where}: value is not finite")
    return value


def _marker_id(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise MapFormatError(f"{where}: expected a non-negative integer ID, got {value!r}")
    return value


def from_dict(doc) -> MarkerGraph:
    if not isinstance(doc, dict):
        raise MapFormatError("top level: expected a JSON object")
    for key in ("home", "nodes", "edges"):
        if key not in doc:
            raise MapFormatError(f"missing field {key!r}")
    if not isinstance(doc["nodes"], list) or not isinstance(doc["edges"], list):
        raise MapFormatError("'nodes' and 'edges' must be lists")
    g = MarkerGraph()
    g.nodes = {_marker_id(v, f"nodes[{i}]") for i, v in enumerate(doc["nodes"])}
    g.home = None if doc["home"] is None else _marker_id(doc["home"], "home")
    if g.home is not None and g.home not in g.nodes:
        raise MapValidationError(f"home marker {g.home} is not a node")
    seen = set()
    for i, rec in enumerate(doc["edges"]):
        where = f"edges[{i}]"
        if not isinstance(rec, dict):
            raise MapFormatError(f"{where}: expected an object")
        missing = {"a", "b", "phi", "theta_ab", "theta_ba", "d"} - rec.keys()
        if missing:
            raise MapFormatError(f"{where}: missing {sorted(missing)}")
        a, b = _marker_id(rec["a"], f"{where}.a"), _marker_id(rec["b"], f"{where}.b")
        e = Edge(*(_number(rec[k], f"{where}.{k}") for k in ("phi", "theta_ab", "theta_ba", "d")))
        if a == b or a not in g.nodes or b not in g.nodes:
            raise MapValidationError(f"{where}: endpoints {a}-{b} must be distinct nodes")
        if frozenset((a, b)) in seen:
            raise MapValidationError(f"{where}: duplicate edge {a}-{b}")
        if e.dist < 0:
            raise MapValidationError(f"{where}: negative distance {e.dist}")
        if e.invariant_error() > LOAD_TOLERANCE:
            raise MapValidationError(
                f"{where}: phi deviates from pi - (theta_ab + theta_ba) by {e.invariant_error():.3g} rad"
            )
        seen.add(frozenset((a, b)))
        g.edges[(a, b)] = e
    return g


def load(source: TextIO) -> MarkerGraph:
    try:
        doc = json.load(source)
    except json.JSONDecodeError as exc:
        raise MapFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return from_dict(doc)


def load_unchecked(source: TextIO) -> MarkerGraph:
    """Parse a map without enforcing edge invariants (for the validate command)."""
    doc = json.load(source)
    g = MarkerGraph(set(doc["nodes"]), {}, doc["home"])
    for rec in doc["edges"]:
        g.edges[(rec["a"], rec["b"])] = Edge(rec["phi"], rec["theta_ab"], rec["theta_ba"], rec["d"])
    return g


def to_dot(g: MarkerGraph) -> str:
    lines = ["graph markers {"]
    for n in sorted(g.nodes):
        attrs = ' [shape=doublecircle, label="%d (home)"]' % n if n == g.home else ""
        lines.append(f"  {n}{attrs};")
    for (a, b), e in sorted(g.edges.items()):
        lines.append(f'  {a} -- {b} [label="d={e.dist:.3f}, phi={math.degrees(e.phi):.2f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
