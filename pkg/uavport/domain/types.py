"""
Core value types for uavport

Time, routes and airport geometry shared by every other package. All
types here are immutable once constructed.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, Sequence, Tuple

import networkx as nx
import numpy as np
from matplotlib.path import Path

from .errors import InvariantError

Point2 = Tuple[float, float]
Point3 = Tuple[float, float, float]

DEFAULT_DT = 0.1


@dataclass(frozen=True, order=True)
class SimTime:
    """
    A point on the simulation clock

    Time is an integer tick count; seconds are always derived from it so
    no floating drift can accumulate.
    """
    ticks: int
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if self.ticks < 0:
            raise InvariantError('simtime-non-negative', f"ticks must be >= 0, got {self.ticks}")
        if self.dt <= 0:
            raise InvariantError('simtime-dt-positive', f"dt must be > 0, got {self.dt}")

    @property
    def seconds(self) -> float:
        return self.ticks * self.dt

    @classmethod
    def from_seconds(cls, seconds: float, dt: float = DEFAULT_DT) -> 'SimTime':
        """Round up to the first tick at or after the given time"""
        return cls(max(0, math.ceil(seconds / dt - 1e-9)), dt)

    def __add__(self, other: 'SimTime') -> 'SimTime':
        if not isinstance(other, SimTime):
            return NotImplemented
        if other.dt != self.dt:
            raise ValueError("cannot add SimTimes with different dt")
        return SimTime(self.ticks + other.ticks, self.dt)

    def advance(self, ticks: int = 1) -> 'SimTime':
        return SimTime(self.ticks + ticks, self.dt)

    def __repr__(self):
        return f"SimTime({self.ticks} ticks = {self.seconds:.1f}s)"


class Direction(Enum):
    """Which way a route is flown"""
    OUTBOUND = 'outbound'
    RETURN = 'return'


@dataclass(frozen=True)
class Route:
    """A predefined flight route between the airport and one station"""
    station: int
    direction: Direction
    waypoints: Tuple[Point3, ...]
    length: float = field(init=False, compare=False)

    def __post_init__(self):
        points = tuple(tuple(float(c) for c in p) for p in self.waypoints)
        if len(points) < 2:
            raise InvariantError('route-waypoints', "a route needs at least 2 waypoints")
        if any(len(p) != 3 for p in points):
            raise InvariantError('route-waypoints', "route waypoints must be 3D points")
        object.__setattr__(self, 'waypoints', points)
        object.__setattr__(self, 'length', _polyline_length(points))

    @property
    def start(self) -> Point3:
        return self.waypoints[0]

    @property
    def end(self) -> Point3:
        return self.waypoints[-1]

    @property
    def cruise_altitude(self) -> float:
        return self.waypoints[0][2]

    def point_at(self, distance: float) -> Point3:
        """Position after flying ``distance`` meters along the route"""
        pts = np.asarray(self.waypoints)
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        cum = np.concatenate(([0.0], np.cumsum(seg)))
        d = min(max(distance, 0.0), cum[-1])
        return tuple(float(np.interp(d, cum, pts[:, i])) for i in range(3))

    def __repr__(self):
        return f"Route(station={self.station}, {self.direction.value}, {self.length:.1f}m)"


def _polyline_length(points: Sequence[Point3]) -> float:
    pts = np.asarray(points, dtype=float)
    return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())


def route_length(route: Route) -> float:
    """Arc length of a route's polyline in meters"""
    return _polyline_length(route.waypoints)


def nominal_flight_time(route: Route, speed: float, overhead_s: float = 0.0) -> float:
    """
    Estimated gate-to-gate flight time

    Args:
        route: Route to fly
        speed: Cruise speed in m/s
        overhead_s: Fixed vertical takeoff plus landing time

    Returns:
        Seconds: cruise time plus the vertical overhead
    """
    if speed <= 0:
        raise ValueError(f"speed must be > 0, got {speed}")
    return route_length(route) / speed + overhead_s


class NodeKind(Enum):
    """Role of a point on an AGV loop"""
    LOADING = 'loading'
    TAKEOFF = 'takeoff'
    HOLD = 'hold'
    LANDING = 'landing'


@dataclass(frozen=True)
class LayoutNode:
    """A loop point of the airport"""
    id: int
    kind: NodeKind
    x: float
    y: float

    @property
    def position(self) -> Point2:
        return (self.x, self.y)


@dataclass(frozen=True)
class LoopSpec:
    """The node cycle of one AGV loop, starting at its loading point"""
    id: int
    nodes: Tuple[int, ...]


@dataclass(frozen=True)
class LoopEdge:
    """Directed loop edge"""
    loop: int
    src: int
    dst: int
    length: float


@dataclass(frozen=True)
class AirportLayout:
    """
    Geometric placement of the airport

    Holds the AW and GW regions, the workbenches, every loop point and the
    loops that connect them.
    """
    aw_region: Tuple[Point2, ...]
    gw_region: Tuple[Point2, ...]
    workbenches: Tuple[Point2, ...]
    nodes: Tuple[LayoutNode, ...]
    loops: Tuple[LoopSpec, ...]

    @cached_property
    def _by_id(self) -> Dict[int, LayoutNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def _aw_path(self) -> Path:
        return Path(self.aw_region)

    @cached_property
    def _gw_path(self) -> Path:
        return Path(self.gw_region)

    def node(self, node_id: int) -> LayoutNode:
        return self._by_id[node_id]

    def _of_kind(self, kind: NodeKind) -> Tuple[LayoutNode, ...]:
        return tuple(n for n in self.nodes if n.kind is kind)

    @property
    def takeoff_points(self) -> Tuple[LayoutNode, ...]:
        return self._of_kind(NodeKind.TAKEOFF)

    @property
    def landing_points(self) -> Tuple[LayoutNode, ...]:
        return self._of_kind(NodeKind.LANDING)

    @property
    def hold_points(self) -> Tuple[LayoutNode, ...]:
        return self._of_kind(NodeKind.HOLD)

    @property
    def loading_points(self) -> Tuple[LayoutNode, ...]:
        return self._of_kind(NodeKind.LOADING)

    def loops_of(self, node_id: int) -> Tuple[int, ...]:
        """LoopIds whose cycle passes through the node"""
        return tuple(loop.id for loop in self.loops if node_id in loop.nodes)

    @property
    def loop_edges(self) -> Tuple[LoopEdge, ...]:
        edges = []
        for loop in self.loops:
            ring = loop.nodes + loop.nodes[:1]
            for src, dst in zip(ring, ring[1:]):
                edges.append(LoopEdge(loop.id, src, dst, self.distance(src, dst)))
        return tuple(edges)

    def distance(self, a: int, b: int) -> float:
        pa, pb = self.node(a), self.node(b)
        return math.hypot(pb.x - pa.x, pb.y - pa.y)

    def in_gw(self, point: Point2) -> bool:
        return bool(self._gw_path.contains_point(point[:2]))

    def in_aw(self, point: Point2) -> bool:
        return bool(self._aw_path.contains_point(point[:2]))

    def validate(self):
        """Check the layout invariants, raising InvariantError on the first failure"""
        if len(self.aw_region) < 3 or len(self.gw_region) < 3:
            raise InvariantError('layout-regions', "AW and GW regions must be polygons")
        ids = [n.id for n in self.nodes]
        if len(ids) != len(set(ids)):
            raise InvariantError('layout-node-ids', "node ids must be unique")
        for n in self.nodes:
            if n.kind is NodeKind.LOADING and not self.in_gw(n.position):
                raise InvariantError('loading-in-gw', f"loading point {n.id} lies outside the GW region")
            if n.kind is not NodeKind.LOADING and not self.in_aw(n.position):
                raise InvariantError('aw-points-in-aw', f"{n.kind.value} point {n.id} lies outside the AW region")
            if self.in_gw(n.position) and self.in_aw(n.position):
                raise InvariantError('regions-disjoint', f"node {n.id} lies in both regions")
        if not self.loops:
            raise InvariantError('layout-loops', "layout needs at least one loop")
        for loop in self.loops:
            self._validate_loop(loop)

    def _validate_loop(self, loop: LoopSpec):
        missing = [n for n in loop.nodes if n not in self._by_id]
        if missing:
            raise InvariantError('loop-nodes-exist', f"loop {loop.id} references unknown nodes {missing}")
        graph = nx.DiGraph()
        ring = loop.nodes + loop.nodes[:1]
        graph.add_edges_from(zip(ring, ring[1:]))
        cycles = list(nx.simple_cycles(graph))
        if len(cycles) != 1 or len(cycles[0]) != len(loop.nodes):
            raise InvariantError('loop-single-cycle', f"loop {loop.id} is not a single directed cycle")
        kinds = [self.node(n).kind for n in loop.nodes]
        shape_ok = (
            len(kinds) >= 4
            and kinds[0] is NodeKind.LOADING
            and kinds[1] is NodeKind.TAKEOFF
            and kinds[-1] is NodeKind.LANDING
            and all(k is NodeKind.HOLD for k in kinds[2:-1])
        )
        if not shape_ok:
            raise InvariantError(
                'loop-order',
                f"loop {loop.id} must visit loading -> takeoff -> hold(s) -> landing",
            )
        for src, dst in zip(ring, ring[1:]):
            if self.distance(src, dst) <= 0:
                raise InvariantError('loop-edge-length', f"loop {loop.id} edge {src}->{dst} has zero length")
