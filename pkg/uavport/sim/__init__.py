"""Tick-driven simulation of the airport, its fleets and the stations"""
from ..trace import EventTrace, TraceEvent, TraceFormatError, TraceKind
from .world import (
    FlightPhase,
    UavRecord,
    AgvRecord,
    StaffRecord,
    StationRecord,
    WorldState,
)
from .engine import SimulationError, Engine, run

__all__ = [
    'EventTrace', 'TraceEvent', 'TraceFormatError', 'TraceKind',
    'FlightPhase', 'UavRecord', 'AgvRecord', 'StaffRecord', 'StationRecord', 'WorldState',
    'SimulationError', 'Engine', 'run',
]
