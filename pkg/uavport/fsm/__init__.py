"""UAV and AGV finite state machines and their per-vehicle drivers"""
from typing import Dict, Set, Tuple

from .machine import Edge, Effect, StateMachine, StepResult
from .uav import UavState, UavCommand, UavCondition, UAV_MACHINE, uav_step
from .agv import AgvState, AgvCommand, AgvCondition, AGV_MACHINE, agv_step
from .drivers import VehicleDriver, UavDriver, AgvDriver, make_driver
from .graph import export_machines


def legal_transitions() -> Dict[str, Set[Tuple[str, str, str]]]:
    """Complete edge sets of both machines, keyed 'uav' and 'agv'"""
    return {
        'uav': UAV_MACHINE.legal_transitions(),
        'agv': AGV_MACHINE.legal_transitions(),
    }


__all__ = [
    'Edge', 'Effect', 'StateMachine', 'StepResult',
    'UavState', 'UavCommand', 'UavCondition', 'UAV_MACHINE', 'uav_step',
    'AgvState', 'AgvCommand', 'AgvCondition', 'AGV_MACHINE', 'agv_step',
    'VehicleDriver', 'UavDriver', 'AgvDriver', 'make_driver',
    'export_machines', 'legal_transitions',
]
