"""
Air traffic scheduler

Admits UAV takeoffs and returns. A takeoff is approved only if the UAV's
predicted arrival at its station is more than ``go_gap_s`` away from every
arrival already booked for that station. A return is approved only if
some AGV can reach a landing point before the UAV does; among feasible
landing points the one with the fewest reservations wins, ties going to
the lowest loop id. Approved flights are booked; the books are the only
state this scheduler keeps.
"""

import bisect
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Set, Tuple

from ..domain import Route, ScenarioConfig, StationRoutes, nominal_flight_time

logger = logging.getLogger(__name__)


class SchedulingError(Exception):
    """Base class for scheduler errors"""
    pass


class UnknownStationError(SchedulingError):
    """Raised for a request naming a station without routes"""
    pass


@dataclass(frozen=True)
class TakeoffRequest:
    """A UAV in Waitting_Go at a takeoff point asking to leave"""
    uav: int
    station: int
    request_tick: int
    takeoff_point: Optional[int] = None


@dataclass(frozen=True)
class ReturnRequest:
    """A UAV in Waitting_Back at its station asking to fly home"""
    uav: int
    station: int
    request_tick: int


@dataclass(frozen=True, order=True)
class ArrivalEntry:
    arrival_s: float
    uav: int
    station: int = field(compare=False)
    requested_s: float = field(compare=False, default=0.0)


class ArrivalBook:
    """Predicted station arrivals of UAVs en route, sorted per station"""

    def __init__(self):
        self._by_station: Dict[int, List[ArrivalEntry]] = {}
        self._by_uav: Dict[int, ArrivalEntry] = {}

    def book(self, entry: ArrivalEntry):
        if entry.uav in self._by_uav:
            raise SchedulingError(f"UAV {entry.uav} already has a booked arrival")
        bisect.insort(self._by_station.setdefault(entry.station, []), entry)
        self._by_uav[entry.uav] = entry

    def remove(self, uav: int) -> Optional[ArrivalEntry]:
        entry = self._by_uav.pop(uav, None)
        if entry is not None:
            self._by_station[entry.station].remove(entry)
        return entry

    def entries(self, station: int) -> List[ArrivalEntry]:
        return list(self._by_station.get(station, []))

    def entry_for_uav(self, uav: int) -> Optional[ArrivalEntry]:
        return self._by_uav.get(uav)

    def conflicts(self, station: int, arrival_s: float, gap_s: float) -> List[ArrivalEntry]:
        """Booked arrivals that are not strictly more than ``gap_s`` away"""
        return [e for e in self._by_station.get(station, []) if abs(e.arrival_s - arrival_s) <= gap_s]

    def __len__(self):
        return len(self._by_uav)


@dataclass(frozen=True)
class LandingEntry:
    """A landing reservation: UAV and AGV expected at a landing point"""
    uav: int
    agv: int
    landing_point: int
    loop: int
    uav_land_s: float
    agv_land_s: float
    seq: int


class LandingBook:
    """Per-landing-point reservations; at most one per AGV and per UAV"""

    def __init__(self):
        self._by_point: Dict[int, List[LandingEntry]] = {}
        self._by_uav: Dict[int, LandingEntry] = {}
        self._by_agv: Dict[int, LandingEntry] = {}
        self._next_seq: Dict[int, int] = {}

    def book(self, uav: int, agv: int, landing_point: int, loop: int,
             uav_land_s: float, agv_land_s: float) -> LandingEntry:
        if not agv_land_s < uav_land_s:
            raise SchedulingError(f"AGV {agv} would reach the landing point after UAV {uav}")
        if uav in self._by_uav or agv in self._by_agv:
            raise SchedulingError(f"UAV {uav} or AGV {agv} already holds a landing reservation")
        seq = self._next_seq.get(landing_point, 0) + 1
        self._next_seq[landing_point] = seq
        entry = LandingEntry(uav, agv, landing_point, loop, uav_land_s, agv_land_s, seq)
        self._by_point.setdefault(landing_point, []).append(entry)
        self._by_uav[uav] = entry
        self._by_agv[agv] = entry
        return entry

    def remove(self, uav: int) -> Optional[LandingEntry]:
        entry = self._by_uav.pop(uav, None)
        if entry is not None:
            del self._by_agv[entry.agv]
            self._by_point[entry.landing_point].remove(entry)
        return entry

    def entries(self, landing_point: int) -> List[LandingEntry]:
        return list(self._by_point.get(landing_point, []))

    def reservations(self, landing_point: int) -> int:
        return len(self._by_point.get(landing_point, []))

    def entry_for_uav(self, uav: int) -> Optional[LandingEntry]:
        return self._by_uav.get(uav)

    def entry_for_agv(self, agv: int) -> Optional[LandingEntry]:
        return self._by_agv.get(agv)

    def reserved_agvs(self) -> Set[int]:
        return set(self._by_agv)

    def __len__(self):
        return len(self._by_uav)


@dataclass(frozen=True)
class AirDecision:
    """Outcome of one admission request, with the operands it was based on"""
    request: str
    uav: int
    station: int
    approved: bool
    reason: str = ''
    route: Optional[Route] = None
    landing_point: Optional[int] = None
    agv: Optional[int] = None
    landing_seq: Optional[int] = None
    operands: Mapping[str, Any] = field(default_factory=dict)

    def to_record(self) -> Dict[str, Any]:
        record = {'request': self.request, 'uav': self.uav, 'station': self.station,
                  'operands': dict(self.operands)}
        if self.reason:
            record['reason'] = self.reason
        for name in ('landing_point', 'agv', 'landing_seq'):
            value = getattr(self, name)
            if value is not None:
                record[name] = value
        return record


@dataclass(frozen=True)
class ArrivalRecord:
    """A completed booking with its prediction error"""
    uav: int
    station: int
    predicted_s: float
    actual_s: float

    @property
    def error_s(self) -> float:
        return self.actual_s - self.predicted_s

    def to_record(self) -> Dict[str, Any]:
        return {'uav': self.uav, 'station': self.station, 'predicted_s': round(self.predicted_s, 4),
                'actual_s': round(self.actual_s, 4), 'error_s': round(self.error_s, 4)}


class AirScheduler:
    """
    Takeoff and return admission control

    Args:
        routes: Routes per station
        go_gap_s: Minimum separation of predicted arrivals at one station
        uav_speed_mps: Cruise speed used for flight-time estimates
        vertical_overhead_s: Climb plus descent time added to every estimate
        dt: Seconds per base tick
        pad_margin_s: Padding around climb and descent windows at a station pad
        loop_of_landing: LoopId of each landing point, for tie-breaking
    """

    def __init__(self, routes: Mapping[int, StationRoutes], go_gap_s: float = 30.0,
                 uav_speed_mps: float = 10.0, vertical_overhead_s: float = 10.0, dt: float = 0.1,
                 pad_margin_s: float = 1.0, loop_of_landing: Optional[Mapping[int, int]] = None):
        self.routes = dict(routes)
        self.go_gap_s = go_gap_s
        self.uav_speed_mps = uav_speed_mps
        self.vertical_overhead_s = vertical_overhead_s
        self.dt = dt
        self.pad_margin_s = pad_margin_s
        self.loop_of_landing = dict(loop_of_landing or {})
        self.arrivals = ArrivalBook()
        self.landings = LandingBook()
        self._departures: Dict[int, List[float]] = {}

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> 'AirScheduler':
        loop_of_landing = {
            node.id: config.layout.loops_of(node.id)[0] for node in config.layout.landing_points
        }
        return cls(
            config.routes,
            go_gap_s=config.go_gap_s,
            uav_speed_mps=config.speeds.uav_max_mps,
            vertical_overhead_s=config.timing.vertical_overhead_s,
            dt=config.dt,
            pad_margin_s=config.policy.pad_margin_s,
            loop_of_landing=loop_of_landing,
        )

    @property
    def climb_s(self) -> float:
        return self.vertical_overhead_s / 2

    def flight_time(self, route: Route) -> float:
        return nominal_flight_time(route, self.uav_speed_mps, self.vertical_overhead_s)

    def _station_routes(self, station: int) -> StationRoutes:
        try:
            return self.routes[station]
        except KeyError:
            raise UnknownStationError(f"no routes for station {station}") from None

    def request_takeoff(self, req: TakeoffRequest, book: Optional[ArrivalBook] = None) -> AirDecision:
        """
        Gap admission for a takeoff

        Args:
            req: The takeoff request
            book: Arrival book to check and update (defaults to this scheduler's)

        Returns:
            AirDecision carrying the outbound route when approved
        """
        book = book if book is not None else self.arrivals
        routes = self._station_routes(req.station)
        point = req.takeoff_point
        if point is None:
            if len(routes.outbound) != 1:
                raise SchedulingError("takeoff_point required when several takeoff points exist")
            point = next(iter(routes.outbound))
        route = routes.outbound[point]
        t_req = req.request_tick * self.dt
        t_go = self.flight_time(route)
        t_arri = t_req + t_go
        booked = book.entries(req.station)
        conflicts = book.conflicts(req.station, t_arri, self.go_gap_s)
        operands = {
            't_req': round(t_req, 4),
            't_go': round(t_go, 4),
            't_arri': round(t_arri, 4),
            'gap': self.go_gap_s,
            'booked': [[e.uav, round(e.arrival_s, 4)] for e in booked],
            'takeoff_point': point,
        }
        if conflicts:
            logger.debug("takeoff of UAV %d deferred: %d conflicting arrivals", req.uav, len(conflicts))
            return AirDecision('takeoff', req.uav, req.station, False, 'arrival-gap', operands=operands)
        book.book(ArrivalEntry(t_arri, req.uav, req.station, t_req))
        return AirDecision('takeoff', req.uav, req.station, True, route=route, operands=operands)

    def request_return(self, req: ReturnRequest, agv_etas: Mapping[int, Sequence[Tuple[int, float]]],
                       landing: Optional[LandingBook] = None) -> AirDecision:
        """
        Landing admission for a return flight

        Args:
            req: The return request
            agv_etas: Candidate (AgvId, eta seconds) per landing point, front first
            landing: Landing book to check and update (defaults to this scheduler's)

        Returns:
            AirDecision carrying the return route, landing point and AGV when approved
        """
        landing = landing if landing is not None else self.landings
        routes = self._station_routes(req.station)
        t_req = req.request_tick * self.dt
        operands: Dict[str, Any] = {'t_req': round(t_req, 4)}
        blocked = self._pad_conflict(req.station, t_req)
        if blocked:
            operands['pad'] = blocked
            return AirDecision('return', req.uav, req.station, False, 'pad-clearance', operands=operands)

        options = []
        considered = []
        for point in sorted(routes.inbound):
            route = routes.inbound[point]
            t_land = t_req + self.flight_time(route)
            reservations = landing.reservations(point)
            for agv, eta in agv_etas.get(point, ()):
                considered.append([point, agv, round(eta, 4), round(t_land, 4), reservations])
                if eta < t_land:
                    options.append((reservations, self.loop_of_landing.get(point, point), point, agv, eta, t_land, route))
                    break
        operands['candidates'] = considered
        if not options:
            return AirDecision('return', req.uav, req.station, False, 'no-agv-before-uav', operands=operands)

        reservations, loop, point, agv, eta, t_land, route = min(options, key=lambda o: (o[0], o[1], o[2]))
        entry = landing.book(req.uav, agv, point, loop, t_land, eta)
        self._note_departure(req.station, t_req)
        operands.update({'t_land_uav': round(t_land, 4), 't_land_agv': round(eta, 4),
                         'reservations': reservations})
        return AirDecision('return', req.uav, req.station, True, route=route, landing_point=point,
                           agv=agv, landing_seq=entry.seq, operands=operands)

    def on_arrival(self, uav: int, station: int, tick: int) -> Optional[ArrivalRecord]:
        """Drop a completed arrival booking; None when the UAV was never booked"""
        entry = self.arrivals.remove(uav)
        if entry is None:
            logger.warning("UAV %d arrived at station %s without a booking", uav, station)
            return None
        record = ArrivalRecord(uav, station, entry.arrival_s, tick * self.dt)
        logger.debug("UAV %d arrival error %.2fs", uav, record.error_s)
        return record

    def on_landing(self, uav: int) -> Optional[LandingEntry]:
        return self.landings.remove(uav)

    def cancel(self, uav: int):
        """Forget every booking held by a UAV whose approval was never executed"""
        self.arrivals.remove(uav)
        self.landings.remove(uav)

    def _note_departure(self, station: int, t_req: float):
        horizon = t_req - self.climb_s - 2 * self.pad_margin_s
        recent = [t for t in self._departures.get(station, []) if t > horizon]
        recent.append(t_req)
        self._departures[station] = recent

    def _pad_conflict(self, station: int, t_req: float) -> Optional[str]:
        """Name the pad user whose window overlaps a climb starting now, if any"""
        m = self.pad_margin_s
        start, end = t_req - m, t_req + self.climb_s + m
        for entry in self.arrivals.entries(station):
            if entry.arrival_s - self.climb_s - m < end and entry.arrival_s + m > start:
                return f"arrival of UAV {entry.uav}"
        for t in self._departures.get(station, []):
            if t - m < end and t + self.climb_s + m > start:
                return "recent departure"
        return None
