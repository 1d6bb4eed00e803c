"""Air admission and AGV ground scheduling"""
from .air import (
    SchedulingError,
    UnknownStationError,
    TakeoffRequest,
    ReturnRequest,
    ArrivalEntry,
    ArrivalBook,
    LandingEntry,
    LandingBook,
    AirDecision,
    ArrivalRecord,
    AirScheduler,
)
from .ground import (
    SchemeError,
    LoopDef,
    CycleScheme,
    AgvPlan,
    GroundScheduler,
    eta_to_landing,
    occupancy_check,
    release_distances,
)

__all__ = [
    'SchedulingError', 'UnknownStationError', 'TakeoffRequest', 'ReturnRequest',
    'ArrivalEntry', 'ArrivalBook', 'LandingEntry', 'LandingBook', 'AirDecision',
    'ArrivalRecord', 'AirScheduler',
    'SchemeError', 'LoopDef', 'CycleScheme', 'AgvPlan', 'GroundScheduler',
    'eta_to_landing', 'occupancy_check', 'release_distances',
]
