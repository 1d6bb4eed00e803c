"""
UAV and AGV management nodes

A management node owns the FSM drivers of one fleet. Each tick it hands
every driver at most one command together with freshly evaluated
conditions, asks the plant (the simulation engine) to carry out the
resulting effects and publishes one status per vehicle.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Mapping, Optional, Protocol, Sequence, Set, Tuple

from ..fsm import StepResult, UavCommand, UavState, VehicleDriver, make_driver
from ..trace import EventTrace, TraceKind
from .bus import MessageBus
from .messages import Ack, CommandMsg, StatusMsg, VehicleKind

logger = logging.getLogger(__name__)


class MessagingError(Exception):
    """Base class for management-node errors"""
    pass


class DuplicateVehicleError(MessagingError):
    """Raised when registering a vehicle id that is already managed"""
    pass


class UnknownVehicleError(MessagingError):
    """Raised when addressing a vehicle the node does not manage"""
    pass


class VehiclePlant(Protocol):
    """What a management node needs from the world it drives"""

    def condition(self, kind: VehicleKind, vehicle_id: int): ...

    def admit(self, kind: VehicleKind, vehicle_id: int, msg: CommandMsg) -> Optional[str]: ...

    def apply(self, kind: VehicleKind, vehicle_id: int, result: StepResult,
              msg: Optional[CommandMsg], tick: int) -> None: ...

    def direct(self, vehicle_id: int, msg: CommandMsg, tick: int) -> Optional[str]: ...

    def status(self, kind: VehicleKind, vehicle_id: int, state, tick: int) -> StatusMsg: ...

    def release_due(self, vehicle_id: int) -> bool: ...


class VehicleManagementNode:
    """
    Relays commands to one fleet's FSM drivers and publishes their status

    Drivers are always visited in ascending id. With ``workers > 1`` the
    pure FSM steps run on a thread pool; effects are still applied one
    vehicle at a time in id order.
    """

    kind: VehicleKind = None

    def __init__(self, plant: VehiclePlant, bus: MessageBus, trace: EventTrace, workers: int = 1):
        self.plant = plant
        self.bus = bus
        self.trace = trace
        self.drivers: Dict[int, VehicleDriver] = {}
        self._rejected: Set[int] = set()
        self._executor = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def add_vehicle(self, vehicle_id: int, tick: int, state=None) -> Ack:
        """Register a new FSM driver; it steps and reports from the next tick"""
        if vehicle_id in self.drivers:
            raise DuplicateVehicleError(f"{self.kind.value} {vehicle_id} is already managed")
        self.drivers[vehicle_id] = make_driver(self.kind.value, vehicle_id, state)
        logger.info("registered %s %d", self.kind.value, vehicle_id)
        return Ack(self.kind, vehicle_id, tick)

    def halt(self, vehicle_id: int, tick: int, reason: str = 'halted'):
        """Stop one driver; every other driver keeps running"""
        driver = self.drivers.get(vehicle_id)
        if driver is None:
            raise UnknownVehicleError(f"{self.kind.value} {vehicle_id} is not managed here")
        driver.halt()
        self.trace.record(tick, TraceKind.ANOMALY, reason=reason, vehicle=self.kind.value,
                          id=vehicle_id, state=driver.state)
        logger.warning("%s %d driver halted (%s)", self.kind.value, vehicle_id, reason)

    def state_of(self, vehicle_id: int):
        return self.drivers[vehicle_id].state

    def is_halted(self, vehicle_id: int) -> bool:
        return self.drivers[vehicle_id].halted

    def close(self):
        """Shut the worker pool down; later ticks step serially"""
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def mgmt_tick(self, tick: int, inbox: Sequence[CommandMsg]) -> List[StatusMsg]:
        """
        One full management cycle

        Args:
            tick: Current base tick
            inbox: Commands addressed to this fleet

        Returns:
            One StatusMsg per running vehicle, in ascending id
        """
        self.deliver(tick, inbox)
        self.settle(tick)
        return self.publish(tick)

    def deliver(self, tick: int, inbox: Sequence[CommandMsg]):
        """Hand each driver its command (if any) and step it once"""
        self._rejected.clear()
        commands: Dict[int, CommandMsg] = {}
        for msg in inbox:
            if msg.target not in self.drivers:
                self.trace.record(tick, TraceKind.DEAD_LETTER, **msg.to_record())
                logger.warning("dead letter: %s for unknown %s %d",
                               msg.payload.value, self.kind.value, msg.target)
                continue
            commands[msg.target] = msg
        for msg in self._self_issued(tick, commands):
            commands[msg.target] = msg
        self._step_all(tick, commands)

    def settle(self, tick: int):
        """Condition-only pass so effects applied by the other fleet are seen this tick"""
        self._step_all(tick, {}, only_changes=True)

    def publish(self, tick: int) -> List[StatusMsg]:
        statuses = []
        for vid, driver in sorted(self.drivers.items()):
            if driver.halted:
                continue
            msg = self.plant.status(self.kind, vid, driver.state, tick)
            self.bus.publish_status(msg)
            statuses.append(msg)
        return statuses

    def _self_issued(self, tick: int, commands: Mapping[int, CommandMsg]) -> List[CommandMsg]:
        return []

    def _step_all(self, tick: int, commands: Mapping[int, CommandMsg], only_changes: bool = False):
        prepared: List[Tuple[int, VehicleDriver, Optional[CommandMsg], object]] = []
        for vid, driver in sorted(self.drivers.items()):
            if driver.halted or (only_changes and vid in self._rejected):
                continue
            msg = commands.get(vid)
            try:
                if msg is not None and msg.is_directive:
                    reason = self.plant.direct(vid, msg, tick)
                    if reason:
                        self._reject(tick, vid, driver, msg, reason)
                    msg = None
                elif msg is not None:
                    reason = self.plant.admit(self.kind, vid, msg)
                    if reason:
                        self._reject(tick, vid, driver, msg, reason)
                        continue
                prepared.append((vid, driver, msg, self.plant.condition(self.kind, vid)))
            except Exception:
                self._fault(tick, vid, driver)

        jobs = [(d, m.payload if m is not None else None, c) for _, d, m, c in prepared]
        if self._executor is not None:
            results = list(self._executor.map(lambda job: job[0].propose(job[1], job[2]), jobs))
        else:
            results = [d.propose(cmd, cond) for d, cmd, cond in jobs]

        for (vid, driver, msg, _), result in zip(prepared, results):
            if only_changes and result.edge is None:
                continue
            previous = driver.state
            driver.commit(result)
            if result.edge is not None:
                self.trace.record(
                    tick, TraceKind.STATE_TRANSITION,
                    vehicle=self.kind.value, id=vid, **{'from': previous},
                    trigger=driver.machine.trigger_label(result.edge), to=result.state,
                )
            if result.rejected:
                self._reject(tick, vid, driver, msg, 'no-edge')
                continue
            try:
                self.plant.apply(self.kind, vid, result, msg, tick)
            except Exception:
                self._fault(tick, vid, driver)

    def _reject(self, tick: int, vid: int, driver: VehicleDriver, msg: CommandMsg, reason: str):
        self._rejected.add(vid)
        self.trace.record(tick, TraceKind.REJECTION, vehicle=self.kind.value, id=vid,
                          state=driver.state, payload=msg.payload, reason=reason)
        logger.warning("%s %d rejected %s in %s: %s", self.kind.value, vid,
                       msg.payload.value, driver.state.value, reason)

    def _fault(self, tick: int, vid: int, driver: VehicleDriver):
        logger.exception("%s %d driver fault", self.kind.value, vid)
        self.halt(vid, tick, reason='driver-fault')


class UavManagementNode(VehicleManagementNode):
    """Manages the UAV fleet; issues Release_Cargo itself once unloading is done"""

    kind = VehicleKind.UAV

    def _self_issued(self, tick: int, commands: Mapping[int, CommandMsg]) -> List[CommandMsg]:
        issued = []
        for vid, driver in sorted(self.drivers.items()):
            if driver.halted or vid in commands:
                continue
            if driver.state is UavState.FLYING_GO and self.plant.release_due(vid):
                msg = CommandMsg(VehicleKind.UAV, vid, tick, UavCommand.RELEASE_CARGO, issuer='uav-mgmt')
                self.trace.record(tick, TraceKind.COMMAND, **msg.to_record())
                issued.append(msg)
        return issued


class AgvManagementNode(VehicleManagementNode):
    """Manages the AGV fleet; movement directives go straight to the plant"""

    kind = VehicleKind.AGV
