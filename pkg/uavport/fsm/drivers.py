"""
Per-vehicle FSM drivers

A driver owns exactly one vehicle's machine state. Management nodes feed
it one optional command and fresh conditions per tick.
"""

from typing import Optional

from .agv import AGV_MACHINE, AgvState
from .machine import StateMachine, StepResult
from .uav import UAV_MACHINE, UavState


class VehicleDriver:
    """Owns one vehicle's FSM state"""

    kind = ''
    machine: StateMachine = None
    initial_state = None

    def __init__(self, vehicle_id: int, state=None):
        self.vehicle_id = vehicle_id
        self.state = state if state is not None else self.initial_state
        self.halted = False
        self.steps = 0

    def propose(self, cmd, cond) -> StepResult:
        """Compute the next step without committing it"""
        return self.machine.step(self.state, cmd, cond)

    def commit(self, result: StepResult):
        self.state = result.state
        self.steps += 1

    def step(self, cmd, cond) -> StepResult:
        result = self.propose(cmd, cond)
        self.commit(result)
        return result

    def halt(self):
        """Stop the driver; its vehicle's machine freezes in its current state"""
        self.halted = True

    def __repr__(self):
        flag = ' halted' if self.halted else ''
        return f"{type(self).__name__}({self.vehicle_id}, {self.state.value}{flag})"


class UavDriver(VehicleDriver):
    kind = 'uav'
    machine = UAV_MACHINE
    initial_state = UavState.READY


class AgvDriver(VehicleDriver):
    kind = 'agv'
    machine = AGV_MACHINE
    initial_state = AgvState.WAITTING_PICKUP


def make_driver(kind: str, vehicle_id: int, state: Optional[object] = None) -> VehicleDriver:
    drivers = {'uav': UavDriver, 'agv': AgvDriver}
    try:
        return drivers[kind](vehicle_id, state)
    except KeyError:
        raise ValueError(f"unknown vehicle kind '{kind}'") from None
