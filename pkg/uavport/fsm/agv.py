"""
AGV state machine

Four waiting states; the AGV ferries a UAV between the AW area, where
it takes off and lands, and the GW area, where staff service it.
"""

from dataclasses import dataclass, fields
from enum import Enum
from typing import Optional

from .machine import Edge, Effect, StateMachine, StepResult


class AgvState(Enum):
    WAITTING_GO_GW = 'Waitting_Go_GW'
    WAITTING_PICKUP = 'Waitting_Pickup'
    WAITTING_WORKING = 'Waitting_Working'
    WAITTING_GO_AW = 'Waitting_Go_AW'


class AgvCommand(Enum):
    UAV_GET_CARGO = 'UAV_Get_Cargo'
    UAV_RECEIVE = 'UAV_Receive'
    UAV_RETRIEVE = 'UAV_Retrieve'
    UAV_CHARGE = 'UAV_Charge'


@dataclass(frozen=True)
class AgvCondition:
    """Condition predicates; In_GW and In_AW are never both true"""
    have_uav: bool = False
    in_gw: bool = False
    in_aw: bool = False

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, bool(getattr(self, f.name)))
        if self.in_gw and self.in_aw:
            raise ValueError("In_GW and In_AW are mutually exclusive")


AGV_LABELS = {
    'have_uav': 'Have_UAV',
    'in_gw': 'In_GW',
    'in_aw': 'In_AW',
}

S, C = AgvState, AgvCommand
AT_GW_LOADED = (('have_uav', True), ('in_gw', True))

AGV_EDGES = (
    Edge(S.WAITTING_PICKUP, C.UAV_RECEIVE, (('have_uav', False), ('in_gw', True)),
         S.WAITTING_WORKING, (Effect.MOUNT_UAV,)),
    Edge(S.WAITTING_PICKUP, None, (('have_uav', True), ('in_aw', True)), S.WAITTING_GO_GW),
    Edge(S.WAITTING_GO_GW, None, AT_GW_LOADED, S.WAITTING_WORKING),
    Edge(S.WAITTING_WORKING, C.UAV_CHARGE, AT_GW_LOADED, S.WAITTING_WORKING, (Effect.BEGIN_SWAP,)),
    Edge(S.WAITTING_WORKING, C.UAV_GET_CARGO, AT_GW_LOADED, S.WAITTING_GO_AW, (Effect.BEGIN_LOAD,)),
    Edge(S.WAITTING_WORKING, C.UAV_RETRIEVE, AT_GW_LOADED, S.WAITTING_PICKUP, (Effect.UNMOUNT_UAV,)),
    Edge(S.WAITTING_GO_AW, None, (('have_uav', False), ('in_aw', True)), S.WAITTING_PICKUP),
)

AGV_MACHINE = StateMachine('agv', AgvState, AgvCommand, AgvCondition, AGV_LABELS, AGV_EDGES)


def agv_step(state: AgvState, cmd: Optional[AgvCommand], cond: AgvCondition) -> StepResult:
    """Pure AGV transition function"""
    return AGV_MACHINE.step(state, cmd, cond)
