"""Core domain types, geometry and scenario configuration"""
from .errors import ScenarioError, ScenarioParseError, InvariantError
from .types import (
    SimTime,
    Direction,
    Route,
    NodeKind,
    LayoutNode,
    LoopSpec,
    LoopEdge,
    AirportLayout,
    route_length,
    nominal_flight_time,
)
from .config import (
    SchemeName,
    SchemeShape,
    SCHEME_SHAPES,
    Speeds,
    ServiceTimes,
    MinDistances,
    Timing,
    OrderParams,
    Policy,
    StationDef,
    StationRoutes,
    ScenarioConfig,
    bundled_scenario,
    load_scenario,
    save_scenario,
)

__all__ = [
    'ScenarioError', 'ScenarioParseError', 'InvariantError',
    'SimTime', 'Direction', 'Route', 'NodeKind', 'LayoutNode', 'LoopSpec', 'LoopEdge',
    'AirportLayout', 'route_length', 'nominal_flight_time',
    'SchemeName', 'SchemeShape', 'SCHEME_SHAPES', 'Speeds', 'ServiceTimes', 'MinDistances',
    'Timing', 'OrderParams', 'Policy', 'StationDef', 'StationRoutes', 'ScenarioConfig',
    'bundled_scenario', 'load_scenario', 'save_scenario',
]
