"""
Tests for AGV loops, node reservation and ground planning helpers
"""

import math

import pytest

from uavport.domain import ScenarioConfig, SchemeName, SimTime
from uavport.fsm import AgvCommand, AgvState, UavCommand, UavState
from uavport.messaging import Directive, FleetSnapshot, StatusMsg, VehicleKind
from uavport.orders import Order, OrderBook
from uavport.scheduling import (
    AgvPlan,
    CycleScheme,
    GroundScheduler,
    LandingBook,
    LoopDef,
    SchemeError,
    eta_to_landing,
    occupancy_check,
    release_distances,
)

SQUARE = {1: (0.0, 0.0), 2: (10.0, 0.0), 3: (10.0, 10.0), 4: (0.0, 10.0)}


@pytest.fixture
def square():
    return LoopDef(1, (1, 2, 3, 4), SQUARE)


@pytest.fixture(scope='module')
def one_cycle():
    config = ScenarioConfig.default('one-cycle')
    return config, CycleScheme.from_config(config)


class TestLoopDef:
    """Test cases for loop geometry"""

    def test_roles_follow_node_order(self, square):
        """Loading first, takeoff second, landing last"""
        assert (square.loading, square.takeoff, square.landing) == (1, 2, 4)
        assert square.holds == (3,)

    def test_distances_wrap_around(self, square):
        """Paths follow the loop direction and close at the landing point"""
        assert square.length == pytest.approx(40.0)
        assert square.path_length(1, 4) == pytest.approx(30.0)
        assert square.path_length(4, 2) == pytest.approx(20.0)
        assert square.hops(3, 2) == 3
        assert square.successor(4) == 1

    def test_position_on_edge(self, square):
        """Progress along an edge interpolates linearly and clamps"""
        assert square.position(None, (1, 2), 5.0) == pytest.approx((5.0, 0.0))
        assert square.position(None, (1, 2), 50.0) == pytest.approx((10.0, 0.0))

    def test_approach_path(self, square):
        """Takeoff through landing is the approach; the GW leg is not"""
        assert square.on_approach(2, None)
        assert square.on_approach(None, (3, 4))
        assert not square.on_approach(1, None)
        assert not square.on_approach(None, (4, 1))

    def test_too_short_loop_rejected(self):
        """A loop needs loading, takeoff, one hold and landing"""
        with pytest.raises(ValueError):
            LoopDef(1, (1, 2, 3), SQUARE)


class TestReleaseDistances:
    """Test cases for node release after departure"""

    def test_right_angles(self, square):
        """At right-angle corners the release distance is min plus margin"""
        release = release_distances([square], 3.0, 0.5)
        assert all(d == pytest.approx(3.5) for d in release.values())

    def test_sharp_corner_needs_more_room(self):
        """A 45 degree corner stretches the release distance by 1/sin(45)"""
        positions = dict(SQUARE)
        positions[4] = (2.0, 2.0)
        release = release_distances([LoopDef(1, (1, 2, 3, 4), positions)], 3.0, 0.5)
        assert release[1] == pytest.approx(3.5 * math.sqrt(2))


class TestCycleScheme:
    """Test cases for scheme partition and placement"""

    def test_one_cycle_placement(self, one_cycle):
        """Loading point first, landing point second, holds from the back"""
        _, scheme = one_cycle
        assert scheme.initial_placement() == {1: 1, 2: 7, 3: 6, 4: 5, 5: 4, 6: 3}

    def test_two_cycle_placement(self):
        """The shared takeoff point starts empty"""
        scheme = CycleScheme.from_config(ScenarioConfig.default('two-cycle'))
        placement = scheme.initial_placement()
        assert placement == {1: 2, 2: 5, 3: 4, 4: 6, 5: 9, 6: 8}
        assert 1 not in placement.values()

    def test_wrong_loop_count(self, square):
        """A two-cycle scheme with one loop is rejected"""
        with pytest.raises(SchemeError) as info:
            CycleScheme(SchemeName.TWO_CYCLE, (square,), {a: 1 for a in range(1, 7)}, {})
        assert info.value.invariant == 'scheme-partition'

    def test_wrong_agv_partition(self, square):
        """Every loop carries exactly its share of AGVs"""
        with pytest.raises(SchemeError):
            CycleScheme(SchemeName.ONE_CYCLE, (square,), {a: 1 for a in range(1, 6)}, {})


class TestOccupancy:
    """Test cases for the plan safety check"""

    def test_shared_node_flagged(self, one_cycle):
        """Two AGVs resting on one node are both a conflict and too close"""
        _, scheme = one_cycle
        violations = occupancy_check([AgvPlan(1, 1, 3, 4), AgvPlan(2, 1, 3, 4)], scheme)
        assert [v['type'] for v in violations] == ['node-conflict', 'agv-distance']

    def test_spread_plans_are_safe(self, one_cycle):
        """AGVs on distinct, distant nodes pass"""
        _, scheme = one_cycle
        assert occupancy_check([AgvPlan(1, 1, 3, 4), AgvPlan(2, 1, 5, 6)], scheme) == []

    def test_moving_agv_too_close(self, one_cycle):
        """An AGV closing on a resting one is caught mid-edge"""
        _, scheme = one_cycle
        plans = [AgvPlan(1, 1, 3, 4, progress_m=8.0, queued_action='move'), AgvPlan(2, 1, 4, 5)]
        violations = occupancy_check(plans, scheme)
        assert len(violations) == 1
        assert violations[0]['distance'] == pytest.approx(2.0)


class TestEta:
    """Test cases for landing-point arrival estimates"""

    def test_resting_agv(self, one_cycle):
        """Travel time plus pending service, rounded up to a tick"""
        config, scheme = one_cycle
        loop = scheme.loop(1)
        eta = eta_to_landing(AgvPlan(1, 1, 3, 4), loop, 5.0, SimTime(0), config.speeds.agv_max_mps)
        assert eta.ticks == 317

    def test_moving_agv(self, one_cycle):
        """Progress already made on the current edge is subtracted"""
        config, scheme = one_cycle
        loop = scheme.loop(1)
        plan = AgvPlan(1, 1, 3, 4, progress_m=4.0, queued_action='move')
        assert eta_to_landing(plan, loop, 0.0, SimTime(0), 1.5).ticks == 240


class TestClaims:
    """Test cases for node reservation"""

    def _moving(self, layout, along_m):
        """AGV 1 ``along_m`` metres down edge 3->4"""
        (x3, y3), (x4, y4) = layout.node(3).position, layout.node(4).position
        f = along_m / layout.distance(3, 4)
        pose = (x3 + f * (x4 - x3), y3 + f * (y4 - y3), 0.0)
        return StatusMsg(VehicleKind.AGV, 1, 10, AgvState.WAITTING_GO_AW, pose, edge=(3, 4), progress_m=along_m)

    def test_departing_agv_keeps_start_node(self, one_cycle):
        """The start node stays claimed until the AGV is release_m away"""
        config, scheme = one_cycle
        ground = GroundScheduler(scheme, config)
        near = FleetSnapshot(10, config.dt, agvs={1: self._moving(config.layout, 1.0)})
        assert ground.claimed_nodes(near) == {4: 1, 3: 1}
        far = FleetSnapshot(10, config.dt, agvs={1: self._moving(config.layout, scheme.release_m[3] + 0.5)})
        assert ground.claimed_nodes(far) == {4: 1}

    def test_stale_agv_still_claims(self, one_cycle):
        """A silent AGV's last node is not handed out"""
        config, scheme = one_cycle
        ground = GroundScheduler(scheme, config)
        x, y = config.layout.node(6).position
        st = StatusMsg(VehicleKind.AGV, 2, 0, AgvState.WAITTING_PICKUP, (x, y, 0.0), node=6)
        snapshot = FleetSnapshot(100, config.dt, stale={2: st})
        assert ground.claimed_nodes(snapshot) == {6: 2}


class TestPlanGround:
    """Test cases for the per-tick AGV decisions on the one-cycle loop"""

    def _agv(self, aid, node, state=AgvState.WAITTING_PICKUP, carrying=None):
        return StatusMsg(VehicleKind.AGV, aid, 10, state, (0.0, 0.0, 0.0), carrying=carrying, node=node)

    def _fleet(self, first):
        """AGV 1 as given; AGVs 2..6 parked from the landing point back over the holds"""
        agvs = {1: first}
        agvs.update({aid: self._agv(aid, node) for aid, node in zip(range(2, 7), (7, 6, 5, 4, 3))})
        return agvs

    def _uav(self, state, **fields):
        return StatusMsg(VehicleKind.UAV, 10, 10, state, (0.0, -10.0, 0.0), mounted_on=1, node=1, **fields)

    def _plan(self, one_cycle, agvs, uav, orders=()):
        config, scheme = one_cycle
        ground = GroundScheduler(scheme, config)
        snapshot = FleetSnapshot(10, config.dt, uavs={10: uav}, agvs=agvs)
        book = OrderBook(orders)
        return ground, snapshot, book, ground.plan_ground(snapshot, LandingBook(), book)

    def test_loaded_agv_leaves_for_takeoff(self, one_cycle):
        """The takeoff point is free, so the loaded AGV moves; everyone behind waits"""
        first = self._agv(1, 1, AgvState.WAITTING_GO_AW, carrying=10)
        uav = self._uav(UavState.WAITTING_GO, cargo=True, assignment=1)
        _, _, _, commands = self._plan(one_cycle, self._fleet(first), uav)
        assert [(c.target, c.payload, c.node) for c in commands] == [
            (1, Directive.MOVE, 2),
            (2, Directive.WAIT, 7),
            (3, Directive.WAIT, 6),
            (4, Directive.WAIT, 5),
            (5, Directive.WAIT, 4),
            (6, Directive.WAIT, 3),
        ]

    def test_oldest_order_loaded(self, one_cycle):
        """An idle UAV on the loading point takes the oldest pending order"""
        first = self._agv(1, 1, AgvState.WAITTING_WORKING, carrying=10)
        uav = self._uav(UavState.ON_CAR)
        orders = [Order(2, 3, 0.5, 300.0, 900.0), Order(1, 2, 0.0, 300.0, 900.0)]
        _, _, book, commands = self._plan(one_cycle, self._fleet(first), uav, orders)
        agv_cmd, uav_cmd = commands[:2]
        assert (agv_cmd.target, agv_cmd.payload, agv_cmd.uav, agv_cmd.order) == \
            (1, AgvCommand.UAV_GET_CARGO, 10, 1)
        assert (uav_cmd.kind, uav_cmd.target, uav_cmd.payload, uav_cmd.agv) == \
            (VehicleKind.UAV, 10, UavCommand.LOAD_CARGO, 1)
        assert book.get(1).uav == 10
        assert book.get(2).uav is None

    def test_battery_swap_before_loading(self, one_cycle):
        """A UAV due for a swap is charged instead of loaded"""
        first = self._agv(1, 1, AgvState.WAITTING_WORKING, carrying=10)
        uav = self._uav(UavState.ON_CAR, flights_since_swap=1)
        _, _, book, commands = self._plan(one_cycle, self._fleet(first), uav, [Order(1, 2, 0.0, 300.0, 900.0)])
        assert (commands[0].target, commands[0].payload) == (1, AgvCommand.UAV_CHARGE)
        assert book.get(1).uav is None

    def test_wait_sent_once(self, one_cycle):
        """A repeated WAIT for an AGV that has not moved is suppressed"""
        first = self._agv(1, 1, AgvState.WAITTING_GO_AW, carrying=10)
        uav = self._uav(UavState.WAITTING_GO, cargo=True, assignment=1)
        ground, snapshot, book, _ = self._plan(one_cycle, self._fleet(first), uav)
        again = ground.plan_ground(snapshot, LandingBook(), book)
        assert [c.target for c in again] == [1]
