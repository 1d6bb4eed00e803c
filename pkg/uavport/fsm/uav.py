"""
UAV state machine

Six states carry a UAV from the workbench, onto an AGV, out to a station
and back onto an AGV again.
"""

from dataclasses import dataclass, fields
from enum import Enum
from typing import Optional

from .machine import Edge, Effect, StateMachine, StepResult


class UavState(Enum):
    READY = 'Ready'
    ON_CAR = 'On_Car'
    WAITTING_GO = 'Waitting_Go'
    FLYING_GO = 'Flying_Go'
    WAITTING_BACK = 'Waitting_Back'
    FLYING_BACK = 'Flying_Back'


class UavCommand(Enum):
    DELIVERY = 'Delivery'
    RELEASE_CARGO = 'Release_Cargo'
    LOAD_CARGO = 'Load_Cargo'


@dataclass(frozen=True)
class UavCondition:
    """Condition predicates, evaluated from world ground truth each tick"""
    landed: bool = False
    on_car: bool = False
    get_cargo: bool = False
    retrieved: bool = False

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, bool(getattr(self, f.name)))


UAV_LABELS = {
    'landed': 'Landed',
    'on_car': 'On_Car',
    'get_cargo': 'Get_Cargo',
    'retrieved': 'Retrieved',
}

S, C = UavState, UavCommand

UAV_EDGES = (
    Edge(S.READY, None, (('on_car', True),), S.ON_CAR),
    Edge(S.ON_CAR, C.LOAD_CARGO, (('on_car', True), ('get_cargo', False)), S.ON_CAR, (Effect.TAKE_CARGO,)),
    Edge(S.ON_CAR, C.LOAD_CARGO, (('on_car', True), ('get_cargo', True)), S.WAITTING_GO),
    Edge(S.ON_CAR, None, (('on_car', True), ('get_cargo', True)), S.WAITTING_GO),
    Edge(S.ON_CAR, None, (('retrieved', True),), S.READY),
    Edge(S.WAITTING_GO, C.DELIVERY, (('on_car', True), ('get_cargo', True)), S.FLYING_GO, (Effect.START_FLIGHT,)),
    Edge(S.FLYING_GO, C.RELEASE_CARGO, (('landed', True), ('get_cargo', True), ('on_car', False)),
         S.WAITTING_BACK, (Effect.DROP_CARGO,)),
    Edge(S.WAITTING_BACK, C.DELIVERY, (('landed', True), ('on_car', False), ('get_cargo', False)),
         S.FLYING_BACK, (Effect.START_FLIGHT,)),
    Edge(S.FLYING_BACK, None, (('landed', True), ('on_car', True)), S.ON_CAR),
)

UAV_MACHINE = StateMachine('uav', UavState, UavCommand, UavCondition, UAV_LABELS, UAV_EDGES)


def uav_step(state: UavState, cmd: Optional[UavCommand], cond: UavCondition) -> StepResult:
    """Pure UAV transition function"""
    return UAV_MACHINE.step(state, cmd, cond)
