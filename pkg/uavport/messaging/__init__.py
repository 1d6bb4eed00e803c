"""Management nodes and the message contract between them"""
from .messages import (
    VehicleKind,
    Directive,
    StatusMsg,
    CommandMsg,
    NodeClock,
    Ack,
    FleetSnapshot,
)
from .bus import MessageBus
from .nodes import (
    MessagingError,
    DuplicateVehicleError,
    UnknownVehicleError,
    VehiclePlant,
    VehicleManagementNode,
    UavManagementNode,
    AgvManagementNode,
)
from .master import MasterNode

__all__ = [
    'VehicleKind', 'Directive', 'StatusMsg', 'CommandMsg', 'NodeClock', 'Ack', 'FleetSnapshot',
    'MessageBus',
    'MessagingError', 'DuplicateVehicleError', 'UnknownVehicleError', 'VehiclePlant',
    'VehicleManagementNode', 'UavManagementNode', 'AgvManagementNode',
    'MasterNode',
]
