"""Command-line entry point: simulate missions, build and query maps, replay logs."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import re
import sys
from dataclasses import replace
from pathlib import Path

from . import mapgraph
from .errors import MarkerNavError, MissionError
from .geometry import PolarPose
from .mapgraph import MarkerGraph, derive_edge, invalid_edges
from .navigator import DockingPlan, Robot, map_tour
from .perception import (
    NOISY_RATIO_TOLERANCE,
    localize,
    read_observation_log,
    to_cartesian,
    write_observation_log,
)
from .simulator import NoiseModel, Rotate, Simulator, Translate, load_world

log = logging.getLogger("markernav")

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

TRAJECTORY_HEADER = ["step", "x_m", "y_m", "heading_rad", "d_m", "theta_rad", "phase"]


class InputError(Exception):
    pass


def _summary(status: str, phase: str) -> None:
    print(f"status={status} phase={phase}")


def error_kind(exc: Exception) -> str:
    """``MarkerNotFoundError`` -> ``marker-not-found``."""
    name = type(exc).__name__.removesuffix("Error")
    return re.sub(r"(?<!^)(?=[A-Z])", "-", name).lower()


def deg(rad: float) -> str:
    return f"{math.degrees(rad):.2f}deg"


def parse_noise(spec: str, base: NoiseModel) -> NoiseModel:
    """``pixel=1,depth=0.01,rot=0.5,trans=0.01``; rot in degrees."""
    fields = {"pixel": "pixel_sigma", "depth": "depth_sigma", "rot": "rot_sigma", "trans": "trans_sigma"}
    values = {}
    for item in filter(None, spec.split(",")):
        key, sep, raw = item.partition("=")
        if not sep or key.strip() not in fields:
            raise InputError(f"bad noise term {item!r}; expected pixel=,depth=,rot=,trans=")
        try:
            value = float(raw)
        except ValueError:
            raise InputError(f"bad noise value in {item!r}") from None
        if key.strip() == "rot":
            value = math.radians(value)
        values[fields[key.strip()]] = value
    try:
        return replace(base, **values)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _load_world(path, seed=None, noise=None):
    if not Path(path).is_file():
        raise InputError(f"world file not found: {path}")
    try:
        world, camera, world_noise = load_world(path)
    except (ValueError, json.JSONDecodeError) as exc:
        raise InputError(f"malformed world file {path}: {exc}") from None
    if seed is not None:
        world = replace(world, rng_seed=seed)
    if noise is not None:
        world_noise = parse_noise(noise, world_noise)
    return Simulator(world, camera, world_noise)


def _load_map(path) -> MarkerGraph:
    try:
        with open(path, encoding="utf-8") as fh:
            return mapgraph.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read map {path}: {exc}") from None
    except MarkerNavError as exc:
        raise InputError(f"{path}: {exc}") from None


def _write_trajectory(robot: Robot, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for rec in robot.trajectory:
            writer.writerow([rec.step, repr(rec.truth.x), repr(rec.truth.y), repr(rec.truth.heading),
                             repr(rec.odometry.distance), repr(rec.odometry.bearing), rec.phase])


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def run_mission(robot: Robot, graph: MarkerGraph, mission: list[dict]) -> list[dict]:
    """Execute mission steps in order; raises MissionError on the first failure."""
    results = []
    for i, step in enumerate(mission):
        op = step.get("op")
        if op == "dock":
            plan = DockingPlan(
                PolarPose(float(step.get("waypoint_m", 1.0)), math.radians(float(step.get("waypoint_deg", 0.0)))),
                math.radians(float(step.get("final_yaw_deg", 0.0))),
                float(step.get("approach_m", 0.3)),
            )
            robot.phases = []
            report = robot.dock(int(step["marker"]), plan)
            results.append({"op": "dock", **report.to_dict()})
            log.info("dock %d: position error %.3f m, yaw error %s",
                     report.marker_id, report.position_error_m, deg(report.yaw_error_rad))
        elif op == "goto_marker":
            robot.begin_phase("goto")
            target = int(step["marker"])
            try:
                heading = robot.goto_marker(graph, int(step["from"]), target, float(step.get("stop_short_m", 0.0)))
            except MarkerNavError as exc:
                raise MissionError("goto", exc) from exc
            m = robot.sim.world.marker(target)
            r = robot.sim.robot
            results.append({"op": "goto_marker", "marker": target,
                            "d_heading_m": heading.o.distance, "theta_heading_rad": heading.o.bearing,
                            "distance_to_marker_m": math.hypot(r.x - m.x, r.y - m.y)})
        elif op == "goal":
            robot.begin_phase("goal")
            robot.execute_goal(PolarPose(float(step["d"]), math.radians(float(step.get("theta_deg", 0.0)))))
            results.append({"op": "goal", "odometry_d_m": robot.odometry.polar.distance,
                            "odometry_theta_rad": robot.odometry.polar.bearing})
        elif op == "link":
            robot.begin_phase("link")
            a, b = int(step["a"]), int(step["b"])
            try:
                edge = robot.link(a, b)
            except MarkerNavError as exc:
                raise MissionError("link", exc) from exc
            graph.add_edge(a, b, edge)
            results.append({"op": "link", "a": a, "b": b, "d": edge.dist, "phi": edge.phi})
        elif op == "localize":
            robot.begin_phase("localize")
            try:
                polar = robot.acquire(int(step["marker"]))
            except MarkerNavError as exc:
                raise MissionError("localize", exc) from exc
            results.append({"op": "localize", "marker": int(step["marker"]),
                            "d_m": polar.distance, "theta_rad": polar.bearing})
        else:
            raise InputError(f"mission[{i}]: unknown op {op!r}")
    return results


def cmd_simulate(args) -> int:
    scenario_path = Path(args.scenario)
    if not scenario_path.is_file():
        raise InputError(f"scenario file not found: {scenario_path}")
    try:
        scenario = json.loads(scenario_path.read_text(encoding="utf-8"))
        mission = scenario["mission"]
        if not isinstance(mission, list):
            raise TypeError("'mission' must be a list")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"malformed scenario {scenario_path}: {exc}") from None
    world_path = args.world or scenario.get("world")
    if world_path is None:
        raise InputError("no world given on the command line or in the scenario")
    if args.world is None:
        world_path = scenario_path.parent / world_path
    sim = _load_world(world_path, args.seed, args.noise)
    graph = MarkerGraph()
    if "map" in scenario:
        graph = _load_map(scenario_path.parent / scenario["map"])

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    robot = Robot(sim)
    report = {"status": "ok", "phase": "done"}
    status = EXIT_OK
    try:
        report["steps"] = run_mission(robot, graph, mission)
    except MissionError as exc:
        status = EXIT_FAIL
        report.update(status="fail", phase=exc.phase, error=error_kind(exc.cause), message=str(exc.cause))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"malformed mission step: {exc}") from None

    _write_trajectory(robot, out / "trajectory.csv")
    with open(out / "observations.csv", "w", newline="", encoding="utf-8") as fh:
        write_observation_log(robot.observations, fh)
    with open(out / "map.json", "w", encoding="utf-8") as fh:
        mapgraph.save(graph, fh)
    _write_json(out / "report.json", report)
    if status != EXIT_OK:
        print(f"mission failed in phase {report['phase']}: {report['error']}: {report['message']}", file=sys.stderr)
    _summary(report["status"], report["phase"])
    return status


def cmd_map(args) -> int:
    if args.action == "build":
        if not args.world:
            raise InputError("map build needs --world")
        sim = _load_world(args.world, args.seed)
        tour = [int(v) for v in args.tour.split(",")] if args.tour else sorted(sim.world.markers)
        if len(tour) < 2:
            raise InputError("a tour needs at least two markers")
        try:
            graph = map_tour(Robot(sim), tour)
        except MissionError as exc:
            print(f"map build failed at {exc.phase}: {exc.cause}", file=sys.stderr)
            _summary("fail", "build")
            return EXIT_FAIL
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                mapgraph.save(graph, fh)
        else:
            mapgraph.save(graph, sys.stdout)
        _summary("ok", "build")
        return EXIT_OK

    if not args.map:
        raise InputError(f"map {args.action} needs --map")
    if args.action == "validate":
        try:
            with open(args.map, encoding="utf-8") as fh:
                graph = mapgraph.load_unchecked(fh)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"cannot parse map {args.map}: {exc}") from None
        bad = invalid_edges(graph)
        for a, b in bad:
            e = graph.edges[(a, b)]
            print(f"invalid edge {a}-{b}: invariant error {e.invariant_error():.3g} rad, d={e.dist}")
        if bad:
            _summary("fail", "validate")
            return EXIT_FAIL
        print(f"{len(graph.nodes)} nodes, {len(graph.edges)} edges, all valid")
        _summary("ok", "validate")
        return EXIT_OK

    graph = _load_map(args.map)
    if args.action == "derive":
        if args.a is None or args.c is None:
            raise InputError("map derive needs two marker IDs")
        try:
            e = derive_edge(graph, args.a, args.c)
        except (MarkerNavError, ValueError) as exc:
            print(f"cannot derive edge {args.a}-{args.c}: {exc}", file=sys.stderr)
            _summary("fail", "derive")
            return EXIT_FAIL
        print(f"E_{args.a}_{args.c}: phi={deg(e.phi)} theta_ab={deg(e.theta_ab)} "
              f"theta_ba={deg(e.theta_ba)} d={e.dist:.3f}m")
        _summary("ok", "derive")
        return EXIT_OK

    if args.format != "dot":
        raise InputError(f"unsupported export format {args.format!r}")
    dot = mapgraph.to_dot(graph)
    if args.out:
        Path(args.out).write_text(dot, encoding="utf-8")
    else:
        sys.stdout.write(dot)
    _summary("ok", "export")
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        with open(args.log, newline="", encoding="utf-8") as fh:
            observations = list(read_observation_log(fh))
    except OSError as exc:
        raise InputError(f"cannot read log: {exc}") from None
    except ValueError as exc:
        raise InputError(f"malformed log {args.log}: {exc}") from None
    per_marker: dict[int, list[float]] = {}
    for row_no, obs in enumerate(observations, start=2):
        try:
            polar = localize(obs, ratio_tolerance=NOISY_RATIO_TOLERANCE)
        except MarkerNavError as exc:
            print(f"row={row_no} marker={obs.marker_id} error={error_kind(exc)}")
            continue
        x, y = to_cartesian(polar)
        print(f"row={row_no} marker={obs.marker_id} d={polar.distance:.3f}m theta={deg(polar.bearing)} "
              f"x={x:.3f}m y={y:.3f}m")
        per_marker.setdefault(obs.marker_id, []).append(polar.bearing)
    for marker_id, angles in sorted(per_marker.items()):
        mean = sum(angles) / len(angles)
        peak = max(angles, key=abs)
        print(f"marker={marker_id} n={len(angles)} mean_theta={deg(mean)} max_theta={deg(peak)}")
    _summary("ok", "replay")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="markernav", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a mission scenario in the simulator")
    sim.add_argument("--world")
    sim.add_argument("--scenario", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--noise", help="pixel=SIGMA,depth=SIGMA,rot=DEG,trans=FRACTION")
    sim.set_defaults(func=cmd_simulate)

    mp = sub.add_parser("map", help="build, query, export or validate a marker map")
    mp.add_argument("action", choices=["build", "derive", "export", "validate"])
    mp.add_argument("a", type=int, nargs="?")
    mp.add_argument("c", type=int, nargs="?")
    mp.add_argument("--map")
    mp.add_argument("--world")
    mp.add_argument("--tour", help="comma-separated marker IDs (default: all, ascending)")
    mp.add_argument("--seed", type=int)
    mp.add_argument("--out")
    mp.add_argument("--format", default="dot")
    mp.set_defaults(func=cmd_map)

    rp = sub.add_parser("replay", help="localize every row of an observation log")
    rp.add_argument("--log", required=True)
    rp.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None):
            _summary("error", "args")
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _summary("error", "input")
        return EXIT_INPUT
