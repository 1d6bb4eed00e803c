"""
Tests for the UAV and AGV state machines
"""

import networkx as nx
import numpy as np
import pytest

from uavport.fsm import (
    AGV_MACHINE,
    UAV_MACHINE,
    AgvCommand,
    AgvCondition,
    AgvState,
    Effect,
    UavCommand,
    UavCondition,
    UavState,
    agv_step,
    export_machines,
    legal_transitions,
    make_driver,
    uav_step,
)


class TestMachineTotality:
    """Every input has exactly one, repeatable outcome"""

    @pytest.mark.parametrize('machine', [UAV_MACHINE, AGV_MACHINE], ids=['uav', 'agv'])
    def test_total_and_deterministic(self, machine):
        """Stepping never raises and gives the same answer twice"""
        count = 0
        for state, cmd, cond in machine.all_inputs():
            first = machine.step(state, cmd, cond)
            second = machine.step(state, cmd, cond)
            assert first == second
            assert first.state in machine.states
            count += 1
        assert count > 0

    @pytest.mark.parametrize('machine', [UAV_MACHINE, AGV_MACHINE], ids=['uav', 'agv'])
    def test_unmatched_command_is_rejected(self, machine):
        """A command with no admitted edge keeps the state and rejects"""
        for state, cmd, cond in machine.all_inputs():
            if cmd is None:
                continue
            result = machine.step(state, cmd, cond)
            if result.edge is None:
                assert result.state is state
                assert result.effects == (Effect.REJECTED,)

    @pytest.mark.parametrize('machine', [UAV_MACHINE, AGV_MACHINE], ids=['uav', 'agv'])
    def test_random_walk_takes_only_legal_edges(self, machine):
        """10^5 random inputs along one walk: every move is a table edge, every miss a rejection"""
        rng = np.random.default_rng(2024)
        legal = machine.legal_transitions()
        conditions = list(machine.all_conditions())
        commands = [None, *machine.commands]
        state = next(iter(machine.states))
        picks = zip(rng.integers(len(commands), size=100_000), rng.integers(len(conditions), size=100_000))
        for cmd_i, cond_i in picks:
            cmd = commands[cmd_i]
            result = machine.step(state, cmd, conditions[cond_i])
            if result.edge is not None:
                assert (state.value, machine.trigger_label(result.edge), result.state.value) in legal
                assert result.edge.trigger is cmd
            elif cmd is not None:
                assert result.state is state
                assert result.rejected
            else:
                assert result.state is state and result.effects == ()
            state = result.state

    def test_agv_regions_are_exclusive(self):
        """In_GW and In_AW cannot both hold"""
        with pytest.raises(ValueError):
            AgvCondition(in_gw=True, in_aw=True)

    def test_edge_counts(self):
        """Nine UAV edges and seven AGV edges"""
        legal = legal_transitions()
        assert len(legal['uav']) == 9
        assert len(legal['agv']) == 7


class TestUavMachine:
    """Test cases for the UAV delivery cycle"""

    def test_full_delivery_cycle(self):
        """Ready through a delivery and back onto an AGV"""
        s = UavState.READY
        s = uav_step(s, None, UavCondition(on_car=True, landed=True)).state
        assert s is UavState.ON_CAR
        result = uav_step(s, UavCommand.LOAD_CARGO, UavCondition(on_car=True, landed=True))
        assert result.state is UavState.ON_CAR and Effect.TAKE_CARGO in result.effects
        s = uav_step(s, None, UavCondition(on_car=True, landed=True, get_cargo=True)).state
        assert s is UavState.WAITTING_GO
        result = uav_step(s, UavCommand.DELIVERY, UavCondition(on_car=True, landed=True, get_cargo=True))
        assert result.state is UavState.FLYING_GO and result.effects == (Effect.START_FLIGHT,)
        s = result.state
        assert uav_step(s, None, UavCondition(get_cargo=True)).state is UavState.FLYING_GO
        result = uav_step(s, UavCommand.RELEASE_CARGO, UavCondition(landed=True, get_cargo=True))
        assert result.state is UavState.WAITTING_BACK and result.effects == (Effect.DROP_CARGO,)
        result = uav_step(result.state, UavCommand.DELIVERY, UavCondition(landed=True))
        assert result.state is UavState.FLYING_BACK
        s = uav_step(result.state, None, UavCondition(landed=True, on_car=True)).state
        assert s is UavState.ON_CAR

    def test_delivery_without_cargo_rejected(self):
        """Waitting_Go cannot take off without cargo"""
        result = uav_step(UavState.WAITTING_GO, UavCommand.DELIVERY, UavCondition(on_car=True, landed=True))
        assert result.rejected
        assert result.state is UavState.WAITTING_GO

    def test_release_while_airborne_rejected(self):
        """Cargo is released only after landing"""
        result = uav_step(UavState.FLYING_GO, UavCommand.RELEASE_CARGO, UavCondition(get_cargo=True))
        assert result.rejected

    def test_retrieved_returns_to_ready(self):
        """A UAV put back on the workbench becomes Ready"""
        result = uav_step(UavState.ON_CAR, None, UavCondition(retrieved=True, landed=True))
        assert result.state is UavState.READY


class TestAgvMachine:
    """Test cases for the AGV ferry cycle"""

    def test_full_ferry_cycle(self):
        """Pick up at the loading point, load, deliver, recover and come back"""
        s = AgvState.WAITTING_PICKUP
        result = agv_step(s, AgvCommand.UAV_RECEIVE, AgvCondition(in_gw=True))
        assert result.state is AgvState.WAITTING_WORKING and result.effects == (Effect.MOUNT_UAV,)
        loaded = AgvCondition(have_uav=True, in_gw=True)
        result = agv_step(result.state, AgvCommand.UAV_CHARGE, loaded)
        assert result.state is AgvState.WAITTING_WORKING and result.effects == (Effect.BEGIN_SWAP,)
        result = agv_step(result.state, AgvCommand.UAV_GET_CARGO, loaded)
        assert result.state is AgvState.WAITTING_GO_AW and result.effects == (Effect.BEGIN_LOAD,)
        s = agv_step(result.state, None, AgvCondition(in_aw=True)).state
        assert s is AgvState.WAITTING_PICKUP
        s = agv_step(s, None, AgvCondition(have_uav=True, in_aw=True)).state
        assert s is AgvState.WAITTING_GO_GW
        assert agv_step(s, None, AgvCondition(have_uav=True)).state is AgvState.WAITTING_GO_GW
        s = agv_step(s, None, loaded).state
        assert s is AgvState.WAITTING_WORKING
        result = agv_step(s, AgvCommand.UAV_RETRIEVE, loaded)
        assert result.state is AgvState.WAITTING_PICKUP and result.effects == (Effect.UNMOUNT_UAV,)

    def test_receive_outside_gw_rejected(self):
        """UAVs are only received in the ground work area"""
        result = agv_step(AgvState.WAITTING_PICKUP, AgvCommand.UAV_RECEIVE, AgvCondition(in_aw=True))
        assert result.rejected

    def test_go_aw_waits_while_loaded(self):
        """The AGV stays in Waitting_Go_AW until its UAV has left"""
        result = agv_step(AgvState.WAITTING_GO_AW, None, AgvCondition(have_uav=True, in_aw=True))
        assert result.state is AgvState.WAITTING_GO_AW
        assert result.edge is None


class TestDrivers:
    """Test cases for per-vehicle drivers"""

    def test_initial_states(self):
        """UAVs start Ready, AGVs start Waitting_Pickup"""
        assert make_driver('uav', 1).state is UavState.READY
        assert make_driver('agv', 1).state is AgvState.WAITTING_PICKUP

    def test_propose_does_not_commit(self):
        """propose is side-effect free; commit applies it"""
        driver = make_driver('uav', 3)
        result = driver.propose(None, UavCondition(on_car=True))
        assert driver.state is UavState.READY
        driver.commit(result)
        assert driver.state is UavState.ON_CAR
        assert driver.steps == 1


class TestGraphExport:
    """Test cases for GraphML export"""

    def test_export_writes_both_machines(self, tmp_path):
        """One GraphML file per machine with every edge"""
        paths = export_machines(tmp_path)
        assert sorted(p.name for p in paths) == ['agv_fsm.graphml', 'uav_fsm.graphml']
        uav = nx.read_graphml(tmp_path / 'uav_fsm.graphml')
        assert uav.number_of_nodes() == len(UavState)
        assert uav.number_of_edges() == len(UAV_MACHINE.edges)
