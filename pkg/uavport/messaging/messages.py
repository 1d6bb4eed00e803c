"""
Message contract between the management nodes

Status and command messages are immutable; nodes exchange nothing else.
Ticks are integer base ticks of the simulation clock.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from ..domain import Route
from ..fsm import AgvCommand, AgvState, UavCommand, UavState


class VehicleKind(Enum):
    UAV = 'uav'
    AGV = 'agv'


class Directive(Enum):
    """AGV movement directives; these bypass the FSM"""
    MOVE = 'move'
    WAIT = 'wait'


@dataclass(frozen=True)
class StatusMsg:
    """
    Standardised status published by a management node for one vehicle

    AGVs fill ``carrying``, ``node``/``edge`` and ``service``; UAVs fill
    ``cargo``, ``station``, ``mounted_on``, ``phase`` and the swap counter.
    ``assignment`` is the AGV's LoopId or the UAV's OrderId.
    """
    kind: VehicleKind
    sender: int
    tick: int
    state: Union[UavState, AgvState]
    pose: Tuple[float, float, float]
    carrying: Optional[int] = None
    cargo: bool = False
    assignment: Optional[int] = None
    node: Optional[int] = None
    edge: Optional[Tuple[int, int]] = None
    progress_m: float = 0.0
    service: Optional[str] = None
    service_left_s: float = 0.0
    station: Optional[int] = None
    mounted_on: Optional[int] = None
    phase: Optional[str] = None
    flights_since_swap: int = 0
    landed_tick: Optional[int] = None

    @property
    def at_rest(self) -> bool:
        return self.node is not None and self.edge is None

    def age(self, now_tick: int) -> int:
        return now_tick - self.tick


@dataclass(frozen=True)
class CommandMsg:
    """A command for one vehicle, with the arguments its payload needs"""
    kind: VehicleKind
    target: int
    issued_tick: int
    payload: Union[UavCommand, AgvCommand, Directive]
    route: Optional[Route] = None
    node: Optional[int] = None
    uav: Optional[int] = None
    agv: Optional[int] = None
    order: Optional[int] = None
    landing_point: Optional[int] = None
    landing_seq: Optional[int] = None
    issuer: str = 'master'

    @property
    def is_directive(self) -> bool:
        return isinstance(self.payload, Directive)

    def to_record(self) -> Dict[str, Any]:
        """Flat trace payload; empty arguments are omitted"""
        record: Dict[str, Any] = {
            'vehicle': self.kind.value,
            'target': self.target,
            'issued': self.issued_tick,
            'payload': self.payload.value,
            'issuer': self.issuer,
        }
        for name in ('node', 'uav', 'agv', 'order', 'landing_point', 'landing_seq'):
            value = getattr(self, name)
            if value is not None:
                record[name] = value
        if self.route is not None:
            record['route'] = f"{self.route.direction.value}:{self.route.station}"
        return record


@dataclass(frozen=True)
class NodeClock:
    """Node cadences in base ticks"""
    master_period: int = 5
    mgmt_period: int = 1
    fsm_period: int = 1

    def __post_init__(self):
        for name in ('master_period', 'mgmt_period', 'fsm_period'):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    def is_master_tick(self, tick: int) -> bool:
        return tick % self.master_period == 0

    def is_mgmt_tick(self, tick: int) -> bool:
        return tick % self.mgmt_period == 0

    @property
    def max_status_age(self) -> int:
        """Oldest status the master may act on"""
        return self.mgmt_period + self.master_period


@dataclass(frozen=True)
class Ack:
    """Acknowledgement of a vehicle registration"""
    kind: VehicleKind
    vehicle_id: int
    tick: int


@dataclass(frozen=True)
class FleetSnapshot:
    """Latest fresh status of every vehicle, as seen by one master tick"""
    tick: int
    dt: float
    uavs: Mapping[int, StatusMsg] = field(default_factory=dict)
    agvs: Mapping[int, StatusMsg] = field(default_factory=dict)
    stale: Mapping[int, StatusMsg] = field(default_factory=dict)

    @property
    def now_s(self) -> float:
        return self.tick * self.dt

    @classmethod
    def from_statuses(cls, tick: int, dt: float, statuses, max_age: int) -> 'FleetSnapshot':
        """
        Split statuses into fresh UAV and AGV views

        Stale AGV statuses are kept apart: their last known position still
        claims track space even though the master no longer acts on them.
        """
        uavs, agvs, stale = {}, {}, {}
        for msg in sorted(statuses, key=lambda m: (m.kind.value, m.sender)):
            fresh = msg.age(tick) <= max_age
            if msg.kind is VehicleKind.UAV:
                if fresh:
                    uavs[msg.sender] = msg
            elif fresh:
                agvs[msg.sender] = msg
            else:
                stale[msg.sender] = msg
        return cls(tick, dt, uavs, agvs, stale)
