"""
Tests for the message bus and management nodes
"""

import pytest

from uavport.fsm import AgvCommand, AgvCondition, AgvState, UavCommand, UavCondition, UavState
from uavport.messaging import (
    AgvManagementNode,
    CommandMsg,
    Directive,
    DuplicateVehicleError,
    FleetSnapshot,
    MessageBus,
    NodeClock,
    StatusMsg,
    UavManagementNode,
    UnknownVehicleError,
    VehicleKind,
)
from uavport.trace import EventTrace, TraceKind


class FakePlant:
    """Minimal world: fixed conditions per vehicle and a record of applied effects"""

    def __init__(self):
        self.conditions = {}
        self.refusals = {}
        self.applied = []
        self.directed = []
        self.due = set()
        self.explode = set()

    def condition(self, kind, vid):
        if vid in self.explode:
            raise RuntimeError("sensor failure")
        default = UavCondition() if kind is VehicleKind.UAV else AgvCondition()
        return self.conditions.get((kind, vid), default)

    def admit(self, kind, vid, msg):
        return self.refusals.get((kind, vid))

    def apply(self, kind, vid, result, msg, tick):
        self.applied.append((kind, vid, result.state, result.effects))

    def direct(self, vid, msg, tick):
        self.directed.append((vid, msg.node))
        return None

    def status(self, kind, vid, state, tick):
        return StatusMsg(kind, vid, tick, state, (0.0, 0.0, 0.0))

    def release_due(self, vid):
        return vid in self.due


@pytest.fixture
def trace():
    return EventTrace()


@pytest.fixture
def plant():
    return FakePlant()


@pytest.fixture
def bus(trace):
    return MessageBus(trace)


def uav_cmd(target, payload, tick=0):
    return CommandMsg(VehicleKind.UAV, target, tick, payload)


class TestNodeClock:
    """Test cases for node cadences"""

    def test_defaults(self):
        """Master every five ticks, management every tick"""
        clock = NodeClock()
        assert clock.is_master_tick(10)
        assert not clock.is_master_tick(12)
        assert clock.is_mgmt_tick(7)
        assert clock.max_status_age == 6

    def test_non_positive_period_rejected(self):
        """Periods must be positive integers"""
        with pytest.raises(ValueError):
            NodeClock(master_period=0)


class TestMessageBus:
    """Test cases for the in-process bus"""

    def test_newer_command_replaces_unconsumed(self, bus, trace):
        """At most one pending command per target; the replacement is traced"""
        bus.send_command(uav_cmd(1, UavCommand.LOAD_CARGO), 0)
        bus.send_command(uav_cmd(1, UavCommand.DELIVERY), 0)
        assert bus.pending(VehicleKind.UAV) == 1
        drained = bus.drain_commands(VehicleKind.UAV)
        assert [m.payload for m in drained] == [UavCommand.DELIVERY]
        commands = trace.of_kind(TraceKind.COMMAND)
        assert commands[-1]['replaced'] == 'Load_Cargo'

    def test_drain_is_id_ordered_and_clears(self, bus):
        """Draining returns targets in ascending id and empties the topic"""
        for target in (5, 2, 9):
            bus.send_command(uav_cmd(target, UavCommand.DELIVERY), 0)
        assert [m.target for m in bus.drain_commands(VehicleKind.UAV)] == [2, 5, 9]
        assert bus.drain_commands(VehicleKind.UAV) == []

    def test_status_ticks_must_not_go_backwards(self, bus):
        """A vehicle's status stream is monotone"""
        bus.publish_status(StatusMsg(VehicleKind.AGV, 1, 10, AgvState.WAITTING_PICKUP, (0, 0, 0)))
        with pytest.raises(ValueError):
            bus.publish_status(StatusMsg(VehicleKind.AGV, 1, 9, AgvState.WAITTING_PICKUP, (0, 0, 0)))

    def test_latest_status_per_sender(self, bus):
        """Only the newest status per vehicle is current"""
        bus.publish_status(StatusMsg(VehicleKind.UAV, 1, 1, UavState.READY, (0, 0, 0)))
        bus.publish_status(StatusMsg(VehicleKind.UAV, 1, 2, UavState.ON_CAR, (0, 0, 0)))
        latest = bus.latest_statuses()
        assert len(latest) == 1
        assert latest[0].state is UavState.ON_CAR
        assert len(bus.history(VehicleKind.UAV)) == 2


class TestFleetSnapshot:
    """Test cases for status aggregation"""

    def test_stale_statuses_split_out(self):
        """Old UAV statuses are dropped; old AGV statuses are kept apart"""
        statuses = [
            StatusMsg(VehicleKind.UAV, 1, 100, UavState.READY, (0, 0, 0)),
            StatusMsg(VehicleKind.UAV, 2, 10, UavState.READY, (0, 0, 0)),
            StatusMsg(VehicleKind.AGV, 1, 100, AgvState.WAITTING_PICKUP, (0, 0, 0)),
            StatusMsg(VehicleKind.AGV, 2, 10, AgvState.WAITTING_PICKUP, (0, 0, 0)),
        ]
        snapshot = FleetSnapshot.from_statuses(100, 0.1, statuses, max_age=6)
        assert list(snapshot.uavs) == [1]
        assert list(snapshot.agvs) == [1]
        assert list(snapshot.stale) == [2]
        assert snapshot.now_s == pytest.approx(10.0)


class TestManagementNodes:
    """Test cases for command relay and fault isolation"""

    def test_registration(self, plant, bus, trace):
        """Vehicles register once; unknown ids are refused"""
        node = UavManagementNode(plant, bus, trace)
        ack = node.add_vehicle(1, tick=0)
        assert ack.vehicle_id == 1
        with pytest.raises(DuplicateVehicleError):
            node.add_vehicle(1, tick=0)
        with pytest.raises(UnknownVehicleError):
            node.halt(7, tick=0)

    def test_condition_edge_steps_and_publishes(self, plant, bus, trace):
        """A satisfied condition edge fires and the new state is published"""
        node = UavManagementNode(plant, bus, trace)
        node.add_vehicle(1, tick=0)
        plant.conditions[(VehicleKind.UAV, 1)] = UavCondition(on_car=True, landed=True)
        statuses = node.mgmt_tick(1, [])
        assert node.state_of(1) is UavState.ON_CAR
        assert statuses[0].state is UavState.ON_CAR
        transitions = trace.of_kind(TraceKind.STATE_TRANSITION)
        assert transitions[0]['from'] == 'Ready'
        assert transitions[0]['to'] == 'On_Car'

    def test_dead_letter_for_unknown_target(self, plant, bus, trace):
        """Commands for unmanaged vehicles are traced and dropped"""
        node = UavManagementNode(plant, bus, trace)
        node.mgmt_tick(1, [uav_cmd(42, UavCommand.DELIVERY)])
        assert trace.count(TraceKind.DEAD_LETTER) == 1

    def test_plant_refusal_is_a_rejection(self, plant, bus, trace):
        """A command the plant will not admit is rejected with its reason"""
        node = UavManagementNode(plant, bus, trace)
        node.add_vehicle(1, tick=0)
        plant.refusals[(VehicleKind.UAV, 1)] = 'not-at-takeoff'
        node.mgmt_tick(1, [uav_cmd(1, UavCommand.DELIVERY)])
        rejection = trace.of_kind(TraceKind.REJECTION)[0]
        assert rejection['reason'] == 'not-at-takeoff'
        assert node.state_of(1) is UavState.READY
        assert plant.applied == []

    def test_fsm_rejection_leaves_state(self, plant, bus, trace):
        """A command with no edge from the current state is rejected by the machine"""
        node = UavManagementNode(plant, bus, trace)
        node.add_vehicle(1, tick=0)
        node.mgmt_tick(1, [uav_cmd(1, UavCommand.RELEASE_CARGO)])
        assert trace.of_kind(TraceKind.REJECTION)[0]['reason'] == 'no-edge'
        assert node.state_of(1) is UavState.READY

    def test_release_cargo_self_issued(self, plant, bus, trace):
        """The UAV node issues Release_Cargo once the plant reports unloading done"""
        node = UavManagementNode(plant, bus, trace)
        node.add_vehicle(3, tick=0, state=UavState.FLYING_GO)
        plant.conditions[(VehicleKind.UAV, 3)] = UavCondition(landed=True, get_cargo=True)
        plant.due.add(3)
        node.mgmt_tick(1, [])
        assert node.state_of(3) is UavState.WAITTING_BACK
        issued = trace.of_kind(TraceKind.COMMAND)[0]
        assert issued['issuer'] == 'uav-mgmt'

    def test_driver_fault_is_isolated(self, plant, bus, trace):
        """A failing vehicle halts alone; its neighbours keep stepping"""
        node = UavManagementNode(plant, bus, trace)
        for vid in (1, 2):
            node.add_vehicle(vid, tick=0)
            plant.conditions[(VehicleKind.UAV, vid)] = UavCondition(on_car=True)
        plant.explode.add(1)
        statuses = node.mgmt_tick(1, [])
        assert [s.sender for s in statuses] == [2]
        assert node.state_of(2) is UavState.ON_CAR
        assert node.drivers[1].halted
        assert trace.of_kind(TraceKind.ANOMALY)[0]['reason'] == 'driver-fault'

    def test_directives_bypass_the_machine(self, plant, bus, trace):
        """Move directives go to the plant and do not step the FSM with a command"""
        node = AgvManagementNode(plant, bus, trace)
        node.add_vehicle(1, tick=0)
        msg = CommandMsg(VehicleKind.AGV, 1, 0, Directive.MOVE, node=4)
        node.mgmt_tick(1, [msg])
        assert plant.directed == [(1, 4)]
        assert node.state_of(1) is AgvState.WAITTING_PICKUP
        assert trace.count(TraceKind.REJECTION) == 0

    def test_thread_pool_matches_serial(self):
        """Stepping on a worker pool gives the same trace as stepping serially"""
        def run(workers):
            plant, log = FakePlant(), EventTrace()
            node = AgvManagementNode(plant, MessageBus(log), log, workers=workers)
            for vid in range(1, 7):
                node.add_vehicle(vid, tick=0)
                plant.conditions[(VehicleKind.AGV, vid)] = AgvCondition(in_gw=True)
            inbox = [CommandMsg(VehicleKind.AGV, vid, 0, AgvCommand.UAV_RECEIVE) for vid in (2, 4, 6)]
            node.mgmt_tick(1, inbox)
            return list(log.lines())

        assert run(1) == run(4)
