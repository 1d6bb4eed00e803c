"""
Scenario configuration

A ScenarioConfig bundles everything one simulation run needs: the airport
layout, the cycle scheme, fleet sizes, vehicle limits, service times,
stations and the order model. Scenario files are YAML with explicit
units in every field name.
"""

import dataclasses
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple, Union

import yaml

from .errors import InvariantError, ScenarioParseError
from .layouts import DEFAULT_EDGE_M, default_layout, default_station_rows
from .types import (
    AirportLayout,
    Direction,
    LayoutNode,
    LoopSpec,
    NodeKind,
    Route,
)

logger = logging.getLogger(__name__)

BUNDLED_DIR = Path(__file__).parent / 'scenarios'


class SchemeName(Enum):
    """The three AGV loop schemes"""
    ONE_CYCLE = 'one-cycle'
    TWO_CYCLE = 'two-cycle'
    THREE_CYCLE = 'three-cycle'


@dataclass(frozen=True)
class SchemeShape:
    """Cardinalities every layout of a scheme must have"""
    loops: int
    agvs_per_loop: int
    takeoff_points: int
    landing_points: int

    @property
    def agvs(self) -> int:
        return self.loops * self.agvs_per_loop


SCHEME_SHAPES = {
    SchemeName.ONE_CYCLE: SchemeShape(loops=1, agvs_per_loop=6, takeoff_points=1, landing_points=1),
    SchemeName.TWO_CYCLE: SchemeShape(loops=2, agvs_per_loop=3, takeoff_points=1, landing_points=2),
    SchemeName.THREE_CYCLE: SchemeShape(loops=3, agvs_per_loop=2, takeoff_points=3, landing_points=3),
}


@dataclass(frozen=True)
class Speeds:
    uav_max_mps: float = 10.0
    agv_max_mps: float = 1.5


@dataclass(frozen=True)
class ServiceTimes:
    load_s: float = 10.0
    battery_swap_s: float = 10.0
    unload_s: float = 3.0


@dataclass(frozen=True)
class MinDistances:
    uav_m: float = 5.0
    agv_m: float = 3.0


@dataclass(frozen=True)
class Timing:
    """Base tick and node cadences, in ticks of ``dt_s``"""
    dt_s: float = 0.1
    master_period_ticks: int = 5
    mgmt_period_ticks: int = 1
    fsm_period_ticks: int = 1
    vertical_overhead_s: float = 10.0

    @property
    def vertical_ticks(self) -> int:
        """Ticks for one climb or one descent"""
        return max(1, round(self.vertical_overhead_s / 2 / self.dt_s))


@dataclass(frozen=True)
class OrderParams:
    rate_per_s: float = 0.05
    better_offset_s: float = 300.0
    timeout_offset_s: float = 900.0


@dataclass(frozen=True)
class Policy:
    """Tunable scheduling policy knobs"""
    swap_every: int = 1
    hold_spacing_m: float = 10.0
    clearance_margin_m: float = 0.5
    pad_margin_s: float = 1.0


@dataclass(frozen=True)
class StationDef:
    """An unloading station and its two altitude layers"""
    id: int
    x_m: float
    y_m: float
    outbound_alt_m: float
    return_alt_m: float

    @property
    def position(self) -> Tuple[float, float]:
        return (self.x_m, self.y_m)


@dataclass(frozen=True)
class StationRoutes:
    """Outbound routes keyed by takeoff node, return routes keyed by landing node"""
    station: int
    outbound: Mapping[int, Route]
    inbound: Mapping[int, Route]


def default_stations() -> Tuple[StationDef, ...]:
    return tuple(StationDef(*row) for row in default_station_rows())


def bundled_layout(scheme: SchemeName, edge_m: float) -> AirportLayout:
    """The scheme's bundled layout with loop edges of ``edge_m``"""
    try:
        return default_layout(scheme.value, float(edge_m))
    except ValueError as e:
        raise InvariantError('layout-edge', str(e)) from e


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Fully validated configuration of one simulation run

    Construction checks every invariant and raises InvariantError naming
    the one that failed.
    """
    layout: AirportLayout
    scheme: SchemeName
    n_uavs: int
    n_agvs: int
    n_staff: int
    stations: Tuple[StationDef, ...] = field(default_factory=default_stations)
    speeds: Speeds = Speeds()
    service_times: ServiceTimes = ServiceTimes()
    min_dist: MinDistances = MinDistances()
    go_gap_s: float = 30.0
    duration_s: float = 3600.0
    seed: int = 0
    timing: Timing = Timing()
    orders: OrderParams = OrderParams()
    policy: Policy = Policy()
    layout_edge_m: float = DEFAULT_EDGE_M

    def __post_init__(self):
        self.validate()

    @classmethod
    def default(cls, scheme: Union[str, SchemeName] = SchemeName.ONE_CYCLE, **overrides) -> 'ScenarioConfig':
        """The bundled layout for a scheme with default parameters"""
        scheme = SchemeName(scheme)
        layout = bundled_layout(scheme, overrides.get('layout_edge_m', DEFAULT_EDGE_M))
        values = dict(
            layout=layout,
            scheme=scheme,
            n_uavs=16,
            n_agvs=SCHEME_SHAPES[scheme].agvs,
            n_staff=len(layout.loading_points),
        )
        values.update(overrides)
        return cls(**values)

    def replace(self, **changes) -> 'ScenarioConfig':
        return dataclasses.replace(self, **changes)

    def with_scheme(self, scheme: Union[str, SchemeName]) -> 'ScenarioConfig':
        """Switch to another scheme's bundled layout, keeping every other parameter"""
        scheme = SchemeName(scheme)
        layout = bundled_layout(scheme, self.layout_edge_m)
        return self.replace(
            layout=layout,
            scheme=scheme,
            n_agvs=SCHEME_SHAPES[scheme].agvs,
            n_staff=max(self.n_staff, len(layout.loading_points)),
        )

    @property
    def dt(self) -> float:
        return self.timing.dt_s

    @property
    def total_ticks(self) -> int:
        return round(self.duration_s / self.timing.dt_s)

    @property
    def station_ids(self) -> Tuple[int, ...]:
        return tuple(s.id for s in self.stations)

    def station(self, station_id: int) -> StationDef:
        for s in self.stations:
            if s.id == station_id:
                return s
        raise KeyError(station_id)

    @cached_property
    def routes(self) -> Dict[int, StationRoutes]:
        """Straight-line routes for every (takeoff point, station) and (station, landing point)"""
        routes = {}
        for s in self.stations:
            outbound = {
                n.id: Route(s.id, Direction.OUTBOUND,
                            ((n.x, n.y, s.outbound_alt_m), (s.x_m, s.y_m, s.outbound_alt_m)))
                for n in self.layout.takeoff_points
            }
            inbound = {
                n.id: Route(s.id, Direction.RETURN,
                            ((s.x_m, s.y_m, s.return_alt_m), (n.x, n.y, s.return_alt_m)))
                for n in self.layout.landing_points
            }
            routes[s.id] = StationRoutes(s.id, outbound, inbound)
        return routes

    def validate(self):
        """Raise InvariantError for the first violated invariant"""
        positive = {
            'load_s': self.service_times.load_s,
            'battery_swap_s': self.service_times.battery_swap_s,
            'unload_s': self.service_times.unload_s,
            'duration_s': self.duration_s,
            'go_gap_s': self.go_gap_s,
            'dt_s': self.timing.dt_s,
            'vertical_overhead_s': self.timing.vertical_overhead_s,
        }
        for name, value in positive.items():
            if not value > 0:
                raise InvariantError('durations-positive', f"{name} must be > 0, got {value}")
        if not (self.speeds.uav_max_mps > 0 and self.speeds.agv_max_mps > 0):
            raise InvariantError('speeds-positive', "vehicle speeds must be > 0")
        if not (self.min_dist.uav_m > 0 and self.min_dist.agv_m > 0):
            raise InvariantError('min-dist-positive', "minimum distances must be > 0")
        if not self.layout_edge_m > 0:
            raise InvariantError('layout-edge', "layout_edge_m must be > 0")
        for name in ('master_period_ticks', 'mgmt_period_ticks', 'fsm_period_ticks'):
            value = getattr(self.timing, name)
            if not (isinstance(value, int) and value > 0):
                raise InvariantError('periods-positive', f"{name} must be a positive integer, got {value}")
        if self.n_uavs < 1:
            raise InvariantError('fleet-uavs', f"n_uavs must be >= 1, got {self.n_uavs}")
        if self.policy.swap_every < 1:
            raise InvariantError('swap-every', "policy.swap_every must be >= 1")
        if self.orders.rate_per_s <= 0:
            raise InvariantError('order-rate', "orders.rate_per_s must be > 0")
        if not (0 <= self.orders.better_offset_s < self.orders.timeout_offset_s):
            raise InvariantError('order-windows', "need 0 <= better_offset_s < timeout_offset_s")

        self.layout.validate()
        shape = SCHEME_SHAPES[self.scheme]
        layout = self.layout
        if (len(layout.loops), len(layout.takeoff_points), len(layout.landing_points)) != (
                shape.loops, shape.takeoff_points, shape.landing_points):
            raise InvariantError(
                'scheme-layout',
                f"{self.scheme.value} needs {shape.loops} loops, {shape.takeoff_points} takeoff and "
                f"{shape.landing_points} landing points",
            )
        if self.n_agvs != shape.agvs:
            raise InvariantError(
                'scheme-partition',
                f"{self.scheme.value} assigns {shape.agvs_per_loop} AGVs to each of {shape.loops} loops "
                f"and requires n_agvs={shape.agvs}, got {self.n_agvs}",
            )
        if self.n_staff < len(layout.loading_points):
            raise InvariantError('staff-per-loading-point', "every loading point needs a staff member")
        for loop in layout.loops:
            holds = sum(1 for n in loop.nodes if layout.node(n).kind is NodeKind.HOLD)
            if holds + 2 < shape.agvs_per_loop:
                raise InvariantError('loop-capacity', f"loop {loop.id} cannot park {shape.agvs_per_loop} AGVs")

        ids = sorted(s.id for s in self.stations)
        if not ids or ids != list(range(1, len(ids) + 1)):
            raise InvariantError('station-ids', f"station ids must be 1..K, got {ids}")
        altitudes = [a for s in self.stations for a in (s.outbound_alt_m, s.return_alt_m)]
        if len(set(altitudes)) != len(altitudes) or min(altitudes) <= 0:
            raise InvariantError('altitude-layers', "every station direction needs its own positive altitude")
        climb_s = self.timing.vertical_overhead_s / 2
        if max(altitudes) / climb_s > self.speeds.uav_max_mps + 1e-9:
            raise InvariantError('vertical-speed', "highest altitude layer cannot be reached within the climb time")


# -- YAML mapping -----------------------------------------------------------

def _section(cls, raw: Mapping[str, Any], name: str):
    data = raw.get(name) or {}
    if not isinstance(data, Mapping):
        raise ScenarioParseError(f"'{name}' must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ScenarioParseError(f"unknown keys in '{name}': {sorted(unknown)}")
    return cls(**data)


def _layout_from_dict(raw: Mapping[str, Any]) -> AirportLayout:
    def points(key):
        return tuple((float(x), float(y)) for x, y in raw[key])

    nodes = tuple(
        LayoutNode(int(n['id']), NodeKind(n['kind']), float(n['x_m']), float(n['y_m']))
        for n in raw['nodes']
    )
    loops = tuple(LoopSpec(int(lp['id']), tuple(int(i) for i in lp['nodes'])) for lp in raw['loops'])
    return AirportLayout(points('aw_region'), points('gw_region'), points('workbenches'), nodes, loops)


def _layout_to_dict(layout: AirportLayout) -> Dict[str, Any]:
    return {
        'aw_region': [list(p) for p in layout.aw_region],
        'gw_region': [list(p) for p in layout.gw_region],
        'workbenches': [list(p) for p in layout.workbenches],
        'nodes': [{'id': n.id, 'kind': n.kind.value, 'x_m': n.x, 'y_m': n.y} for n in layout.nodes],
        'loops': [{'id': lp.id, 'nodes': list(lp.nodes)} for lp in layout.loops],
    }


def config_from_dict(raw: Mapping[str, Any]) -> ScenarioConfig:
    """Build a ScenarioConfig from parsed scenario data"""
    if not isinstance(raw, Mapping):
        raise ScenarioParseError("scenario must be a mapping at top level")
    try:
        scheme = SchemeName(raw.get('scheme', SchemeName.ONE_CYCLE.value))
        layout_raw = raw.get('layout', 'default')
        edge_m = float(raw.get('layout_edge_m', DEFAULT_EDGE_M))
        if layout_raw in (None, 'default'):
            layout = bundled_layout(scheme, edge_m)
        elif isinstance(layout_raw, Mapping):
            layout = _layout_from_dict(layout_raw)
        else:
            raise ScenarioParseError("'layout' must be 'default' or a mapping")
        fleet = raw.get('fleet') or {}
        stations_raw = raw.get('stations')
        stations = default_stations() if stations_raw is None else tuple(
            StationDef(int(s['id']), float(s['x_m']), float(s['y_m']),
                       float(s['outbound_alt_m']), float(s['return_alt_m']))
            for s in stations_raw
        )
        return ScenarioConfig(
            layout=layout,
            scheme=scheme,
            n_uavs=int(fleet.get('uavs', 16)),
            n_agvs=int(fleet.get('agvs', SCHEME_SHAPES[scheme].agvs)),
            n_staff=int(fleet.get('staff', len(layout.loading_points))),
            stations=stations,
            speeds=_section(Speeds, raw, 'speeds'),
            service_times=_section(ServiceTimes, raw, 'service_times'),
            min_dist=_section(MinDistances, raw, 'min_dist'),
            go_gap_s=float(raw.get('go_gap_s', 30.0)),
            duration_s=float(raw.get('duration_s', 3600.0)),
            seed=int(raw.get('seed', 0)),
            timing=_section(Timing, raw, 'timing'),
            orders=_section(OrderParams, raw, 'orders'),
            policy=_section(Policy, raw, 'policy'),
            layout_edge_m=edge_m,
        )
    except InvariantError:
        raise
    except ScenarioParseError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioParseError(f"invalid scenario: {e}") from e


def config_to_dict(config: ScenarioConfig) -> Dict[str, Any]:
    return {
        'scheme': config.scheme.value,
        'layout': _layout_to_dict(config.layout),
        'fleet': {'uavs': config.n_uavs, 'agvs': config.n_agvs, 'staff': config.n_staff},
        'stations': [dataclasses.asdict(s) for s in config.stations],
        'speeds': dataclasses.asdict(config.speeds),
        'service_times': dataclasses.asdict(config.service_times),
        'min_dist': dataclasses.asdict(config.min_dist),
        'go_gap_s': config.go_gap_s,
        'duration_s': config.duration_s,
        'seed': config.seed,
        'timing': dataclasses.asdict(config.timing),
        'orders': dataclasses.asdict(config.orders),
        'policy': dataclasses.asdict(config.policy),
        'layout_edge_m': config.layout_edge_m,
    }


def bundled_scenario(name: str) -> Path:
    """Path of a bundled scenario such as ``one_cycle`` or ``two_cycle.scenario``"""
    filename = name if name.endswith('.scenario') else f"{name}.scenario"
    path = BUNDLED_DIR / filename
    if not path.exists():
        raise ScenarioParseError(f"no bundled scenario named '{name}'")
    return path


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """
    Load and validate a scenario file

    Args:
        path: Scenario file path

    Returns:
        A fully validated ScenarioConfig
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioParseError(f"cannot read scenario {path}: {e}") from e
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ScenarioParseError(f"cannot parse scenario {path}: {e}") from e
    config = config_from_dict(raw)
    logger.debug("loaded scenario %s (%s, %d UAVs)", path, config.scheme.value, config.n_uavs)
    return config


def save_scenario(config: ScenarioConfig, path: Union[str, Path]) -> Path:
    """Write a scenario with its explicit layout so it loads back unchanged"""
    path = Path(path)
    path.write_text(yaml.safe_dump(config_to_dict(config), sort_keys=False))
    return path
