"""
World state

Ground truth of every vehicle, staff member and station pad. Only the
engine mutates it; management nodes and the master see it through
status messages.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

from ..domain import Route, ScenarioConfig

Point3 = Tuple[float, float, float]

PARKING_RING_M = 8.0


class FlightPhase(Enum):
    WORKBENCH = 'workbench'
    ON_AGV = 'on-agv'
    AT_STATION = 'at-station'
    CLIMB = 'climb'
    CRUISE = 'cruise'
    HOLD = 'hold'
    DESCENT = 'descent'

    @property
    def grounded(self) -> bool:
        return self in (FlightPhase.WORKBENCH, FlightPhase.ON_AGV, FlightPhase.AT_STATION)


@dataclass
class UavRecord:
    id: int
    pos: Point3
    phase: FlightPhase = FlightPhase.WORKBENCH
    workbench: Optional[int] = None
    mounted_on: Optional[int] = None
    cargo: bool = False
    order: Optional[int] = None
    station: Optional[int] = None
    route: Optional[Route] = None
    route_s: float = 0.0
    vertical_left: int = 0
    landing_point: Optional[int] = None
    landing_agv: Optional[int] = None
    landing_seq: Optional[int] = None
    flights_since_swap: int = 0
    landed_tick: Optional[int] = None
    unload_until: Optional[int] = None
    unloaded: bool = False
    parking_slot: Optional[int] = None
    hold_logged: bool = False

    @property
    def airborne(self) -> bool:
        return not self.phase.grounded

    @property
    def returning(self) -> bool:
        return self.landing_point is not None


@dataclass
class AgvRecord:
    id: int
    loop: int
    pos: Tuple[float, float]
    node: Optional[int] = None
    edge: Optional[Tuple[int, int]] = None
    progress_m: float = 0.0
    carrying: Optional[int] = None
    service: Optional[str] = None
    service_until: Optional[int] = None
    service_staff: Optional[int] = None
    service_order: Optional[int] = None

    @property
    def at_rest(self) -> bool:
        return self.edge is None


@dataclass
class StaffRecord:
    id: int
    loading_point: int
    busy_with: Optional[int] = None


@dataclass
class StationRecord:
    """A station pad plus a parking ring for UAVs waiting to fly home"""
    id: int
    x: float
    y: float
    pad_user: Optional[int] = None
    unloading: Optional[int] = None
    parked: Dict[int, int] = field(default_factory=dict)

    @property
    def pad_free(self) -> bool:
        return self.pad_user is None and self.unloading is None

    def park(self, uav: int) -> int:
        slot = 0
        while slot in self.parked:
            slot += 1
        self.parked[slot] = uav
        return slot

    def unpark(self, slot: Optional[int]):
        if slot is not None:
            self.parked.pop(slot, None)

    def slot_position(self, slot: int) -> Tuple[float, float]:
        """Ring k (from 1) holds 8k slots at radius 8k m"""
        ring, index = 1, slot
        while index >= 8 * ring:
            index -= 8 * ring
            ring += 1
        angle = 2 * math.pi * index / (8 * ring)
        radius = PARKING_RING_M * ring
        return (self.x + radius * math.cos(angle), self.y + radius * math.sin(angle))


@dataclass
class WorldState:
    tick: int = 0
    uavs: Dict[int, UavRecord] = field(default_factory=dict)
    agvs: Dict[int, AgvRecord] = field(default_factory=dict)
    staff: Dict[int, StaffRecord] = field(default_factory=dict)
    stations: Dict[int, StationRecord] = field(default_factory=dict)
    workbenches: Dict[int, Tuple[float, float]] = field(default_factory=dict)

    @classmethod
    def build(cls, config: ScenarioConfig) -> 'WorldState':
        """Empty world with stations, staff and one workbench per loading point"""
        world = cls()
        for s in config.stations:
            world.stations[s.id] = StationRecord(s.id, s.x_m, s.y_m)
        loading = sorted(n.id for n in config.layout.loading_points)
        for node_id in loading:
            here = config.layout.node(node_id).position
            world.workbenches[node_id] = min(config.layout.workbenches, key=lambda w: math.dist(w, here))
        for sid in range(1, config.n_staff + 1):
            world.staff[sid] = StaffRecord(sid, loading[(sid - 1) % len(loading)])
        return world

    def free_staff(self, loading_point: int) -> Optional[StaffRecord]:
        for sid in sorted(self.staff):
            member = self.staff[sid]
            if member.loading_point == loading_point and member.busy_with is None:
                return member
        return None

    def uavs_at_workbench(self, loading_point: int) -> List[int]:
        return sorted(u.id for u in self.uavs.values()
                      if u.phase is FlightPhase.WORKBENCH and u.workbench == loading_point)

    def agv_at(self, node: int) -> Optional[AgvRecord]:
        for agv in self.agvs.values():
            if agv.at_rest and agv.node == node:
                return agv
        return None
