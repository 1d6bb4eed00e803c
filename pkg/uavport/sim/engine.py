"""
Simulation engine

Advances the world in fixed ticks of ``dt`` seconds. Each tick moves the
vehicles, runs service timers, lets the management nodes step their FSM
drivers, runs the master on its period and finally checks separation and
records poses. The engine is the plant of both management nodes: it
answers condition queries, vets commands against physics and carries
out transition effects.
"""

import json
import logging
import math
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..domain import Direction, Route, ScenarioConfig
from ..fsm import AgvCommand, AgvCondition, Effect, StepResult, UavCommand, UavCondition
from ..messaging import (
    Ack,
    AgvManagementNode,
    CommandMsg,
    Directive,
    MasterNode,
    MessageBus,
    NodeClock,
    StatusMsg,
    UavManagementNode,
    VehicleKind,
)
from ..orders import Order, OrderBook, generate_orders
from ..scheduling import AgvPlan, AirScheduler, CycleScheme, GroundScheduler, occupancy_check
from ..trace import EventTrace, TraceKind
from .world import AgvRecord, FlightPhase, UavRecord, WorldState

logger = logging.getLogger(__name__)

POSE_DIGITS = 4


class SimulationError(Exception):
    """Raised when the engine is asked for something the world cannot do"""
    pass


def _ticks(seconds: float, dt: float) -> int:
    return max(1, int(round(seconds / dt)))


class Engine:
    """
    One simulation run

    Args:
        config: Validated scenario
        orders: Order list; generated from the scenario's order model when omitted
        trace: Trace to append to (a fresh one by default)
        workers: Thread-pool size for FSM steps inside the management nodes
        realtime: Pace ticks to wall-clock time
        snapshot_every: Write a world snapshot every N ticks (0 disables)
        snapshot_path: Target of the snapshots, one JSON object per line
    """

    def __init__(self, config: ScenarioConfig, orders: Optional[Sequence[Order]] = None,
                 trace: Optional[EventTrace] = None, workers: int = 1, realtime: bool = False,
                 snapshot_every: int = 0, snapshot_path: Optional[Union[str, Path]] = None):
        self.config = config
        self.dt = config.dt
        timing = config.timing
        self.clock = NodeClock(timing.master_period_ticks, timing.mgmt_period_ticks, timing.fsm_period_ticks)
        self.trace = trace if trace is not None else EventTrace()
        self.scheme = CycleScheme.from_config(config)
        self.ground = GroundScheduler(self.scheme, config)
        self.air = AirScheduler.from_config(config)
        if orders is None:
            params = config.orders
            orders = generate_orders(params.rate_per_s, config.duration_s, config.station_ids,
                                     (params.better_offset_s, params.timeout_offset_s), config.seed)
        self.orders = OrderBook(orders)
        self.world = WorldState.build(config)
        self.bus = MessageBus(self.trace)
        self.uav_node = UavManagementNode(self, self.bus, self.trace, workers)
        self.agv_node = AgvManagementNode(self, self.bus, self.trace, workers)
        self.master = MasterNode(self.ground, self.air, self.trace, self.clock, self.dt)
        self.realtime = realtime
        self.snapshot_every = snapshot_every
        self.snapshot_path = Path(snapshot_path) if snapshot_path else None
        self.vertical_ticks = timing.vertical_ticks
        self._poses: Dict[Tuple[str, int], Tuple[float, ...]] = {}
        self._started = False
        self._finished = False

    @property
    def tick(self) -> int:
        return self.world.tick

    # -- lifecycle ----------------------------------------------------------

    def start(self):
        """Record the run header, spawn the fleets and publish the tick-0 statuses"""
        if self._started:
            return
        self._started = True
        self.trace.record(0, TraceKind.RUN_START, **self.run_header())
        placement = self.scheme.initial_placement()
        for aid in sorted(placement):
            self._spawn_agv(aid, self.scheme.agv_assignment[aid], placement[aid], 0)
        loading = sorted(self.world.workbenches)
        for uid in range(1, self.config.n_uavs + 1):
            self._spawn_uav(uid, loading[(uid - 1) % len(loading)], 0)
        self.agv_node.publish(0)
        self.uav_node.publish(0)
        self._record_poses(0)
        logger.info("run started: %s, %d UAVs, %d AGVs, %d orders, seed %d",
                    self.config.scheme.value, self.config.n_uavs, len(self.world.agvs),
                    len(self.orders), self.config.seed)

    def run(self, ticks: Optional[int] = None) -> EventTrace:
        """
        Advance the simulation

        Args:
            ticks: Number of ticks; defaults to the rest of the scenario duration

        Returns:
            The event trace (not yet closed; call finish)
        """
        self.start()
        total = ticks if ticks is not None else self.config.total_ticks - self.world.tick
        wall0, tick0 = time.monotonic(), self.world.tick
        for _ in range(max(0, total)):
            self.step()
            if self.realtime:
                lag = (self.world.tick - tick0) * self.dt - (time.monotonic() - wall0)
                if lag > 0:
                    time.sleep(lag)
        return self.trace

    def finish(self) -> EventTrace:
        """Close the trace with a run-end record"""
        if not self._finished:
            self._finished = True
            issued = len(self.orders.issued(self.world.tick * self.dt))
            delivered = len(self.orders.delivered)
            self.trace.record(self.world.tick, TraceKind.RUN_END, ticks=self.world.tick,
                              orders_issued=issued, delivered=delivered,
                              undelivered=max(0, issued - delivered))
            logger.info("run finished at tick %d: %d/%d orders delivered", self.world.tick, delivered, issued)
        self.close()
        return self.trace

    def close(self):
        """Release the management nodes' worker pools"""
        self.uav_node.close()
        self.agv_node.close()

    def step(self):
        """Advance one base tick"""
        if not self._started:
            self.start()
        t = self.world.tick + 1
        self.world.tick = t
        self._move_agvs(t)
        self._move_uavs(t)
        self._run_services(t)
        if self.clock.is_mgmt_tick(t):
            agv_inbox = self.bus.drain_commands(VehicleKind.AGV)
            uav_inbox = self.bus.drain_commands(VehicleKind.UAV)
            self.agv_node.deliver(t, agv_inbox)
            self.uav_node.deliver(t, uav_inbox)
            self.agv_node.settle(t)
            self.uav_node.settle(t)
            self.agv_node.publish(t)
            self.uav_node.publish(t)
        if self.clock.is_master_tick(t):
            for cmd in self.master.master_tick(t, self.bus.latest_statuses(), self.orders):
                self.bus.send_command(cmd, t)
        self.distance_monitor(t)
        self._record_poses(t)
        if self.snapshot_every and self.snapshot_path and t % self.snapshot_every == 0:
            with self.snapshot_path.open('a') as fh:
                fh.write(json.dumps(self.snapshot(), sort_keys=True) + '\n')

    def run_header(self) -> Dict[str, Any]:
        """Config summary the trace verifier needs"""
        c = self.config
        return {
            'scheme': c.scheme.value,
            'n_uavs': c.n_uavs,
            'n_agvs': c.n_agvs,
            'n_staff': c.n_staff,
            'seed': c.seed,
            'dt': c.dt,
            'pose_digits': POSE_DIGITS,
            'duration_s': c.duration_s,
            'total_ticks': c.total_ticks,
            'start_tick': 0,
            'go_gap_s': c.go_gap_s,
            'uav_min_m': c.min_dist.uav_m,
            'agv_min_m': c.min_dist.agv_m,
            'uav_max_mps': c.speeds.uav_max_mps,
            'agv_max_mps': c.speeds.agv_max_mps,
            'vertical_overhead_s': c.timing.vertical_overhead_s,
            'master_period': c.timing.master_period_ticks,
            'orders': len(self.orders),
            'nodes': {n.id: [n.x, n.y] for n in c.layout.nodes},
            'loops': {loop.id: list(loop.nodes) for loop in self.scheme.loops},
            'takeoff_points': sorted(n.id for n in c.layout.takeoff_points),
            'landing_points': sorted(n.id for n in c.layout.landing_points),
            'stations': {s.id: [s.x_m, s.y_m] for s in c.stations},
        }

    # -- fleet changes ------------------------------------------------------

    def add_vehicle(self, kind: Union[str, VehicleKind]) -> Ack:
        """Add a UAV to the emptiest workbench or an AGV to a free hold or landing point"""
        kind = VehicleKind(kind)
        tick = self.world.tick
        if kind is VehicleKind.UAV:
            uid = max(self.world.uavs, default=0) + 1
            lp = min(sorted(self.world.workbenches), key=lambda n: len(self.world.uavs_at_workbench(n)))
            return self._spawn_uav(uid, lp, tick)
        aid = max(self.world.agvs, default=0) + 1
        counts = {loop.id: 0 for loop in self.scheme.loops}
        for agv in self.world.agvs.values():
            counts[agv.loop] += 1
        for loop_id in sorted(counts, key=lambda lid: (counts[lid], lid)):
            loop = self.scheme.loop(loop_id)
            for node in (loop.landing,) + tuple(reversed(loop.holds)):
                if not self._node_claimed(node, aid):
                    self.ground.assign_agv(aid, loop_id)
                    return self._spawn_agv(aid, loop_id, node, tick)
        raise SimulationError("no free hold or landing point for another AGV")

    def halt(self, kind: Union[str, VehicleKind], vehicle_id: int, reason: str = 'halted'):
        """Stop one FSM driver; the rest of the fleet keeps running"""
        node = self.uav_node if VehicleKind(kind) is VehicleKind.UAV else self.agv_node
        node.halt(vehicle_id, self.world.tick, reason)

    def _spawn_agv(self, aid: int, loop_id: int, node: int, tick: int) -> Ack:
        loop = self.scheme.loop(loop_id)
        self.world.agvs[aid] = AgvRecord(aid, loop_id, loop.positions[node], node=node)
        ack = self.agv_node.add_vehicle(aid, tick)
        self.trace.record(tick, TraceKind.SPAWN, vehicle='agv', id=aid, loop=loop_id, node=node)
        return ack

    def _spawn_uav(self, uid: int, loading_point: int, tick: int) -> Ack:
        x, y = self.world.workbenches[loading_point]
        self.world.uavs[uid] = UavRecord(uid, (x, y, 0.0), FlightPhase.WORKBENCH, workbench=loading_point)
        ack = self.uav_node.add_vehicle(uid, tick)
        self.trace.record(tick, TraceKind.SPAWN, vehicle='uav', id=uid, workbench=loading_point)
        return ack

    # -- plant interface ----------------------------------------------------

    def condition(self, kind: VehicleKind, vehicle_id: int):
        if kind is VehicleKind.UAV:
            uav = self.world.uavs[vehicle_id]
            return UavCondition(
                landed=uav.phase.grounded,
                on_car=uav.mounted_on is not None,
                get_cargo=uav.cargo,
                retrieved=uav.phase is FlightPhase.WORKBENCH,
            )
        agv = self.world.agvs[vehicle_id]
        layout = self.config.layout
        return AgvCondition(
            have_uav=agv.carrying is not None,
            in_gw=layout.in_gw(agv.pos),
            in_aw=layout.in_aw(agv.pos),
        )

    def admit(self, kind: VehicleKind, vehicle_id: int, msg: CommandMsg) -> Optional[str]:
        """Reason a command is physically impossible right now, or None"""
        if kind is VehicleKind.UAV:
            return self._admit_uav(self.world.uavs[vehicle_id], msg)
        reason = self._admit_agv(self.world.agvs[vehicle_id], msg)
        if reason and msg.payload is AgvCommand.UAV_GET_CARGO and msg.order is not None:
            self.orders.release(msg.order)
        return reason

    def apply(self, kind: VehicleKind, vehicle_id: int, result: StepResult,
              msg: Optional[CommandMsg], tick: int):
        for effect in result.effects:
            if kind is VehicleKind.UAV:
                self._apply_uav(self.world.uavs[vehicle_id], effect, msg, tick)
            else:
                self._apply_agv(self.world.agvs[vehicle_id], effect, msg, tick)

    def direct(self, vehicle_id: int, msg: CommandMsg, tick: int) -> Optional[str]:
        """Carry out a MOVE or WAIT directive"""
        agv = self.world.agvs[vehicle_id]
        if msg.payload is Directive.WAIT:
            return None
        if not agv.at_rest:
            return 'moving'
        if agv.service:
            return 'in-service'
        loop = self.scheme.loop(agv.loop)
        if msg.node != loop.successor(agv.node):
            return 'not-next-node'
        if self._node_claimed(msg.node, vehicle_id):
            return 'node-claimed'
        self.trace.record(tick, TraceKind.DEPART, agv=vehicle_id, **{'from': agv.node}, to=msg.node)
        agv.edge = (agv.node, msg.node)
        agv.node = None
        agv.progress_m = 0.0
        return None

    def status(self, kind: VehicleKind, vehicle_id: int, state, tick: int) -> StatusMsg:
        if kind is VehicleKind.UAV:
            uav = self.world.uavs[vehicle_id]
            return StatusMsg(
                VehicleKind.UAV, vehicle_id, tick, state,
                pose=tuple(round(c, POSE_DIGITS) for c in uav.pos),
                cargo=uav.cargo,
                assignment=uav.order,
                node=uav.workbench if uav.phase is FlightPhase.WORKBENCH else None,
                station=uav.station,
                mounted_on=uav.mounted_on,
                phase=uav.phase.value,
                flights_since_swap=uav.flights_since_swap,
                landed_tick=uav.landed_tick,
            )
        agv = self.world.agvs[vehicle_id]
        left = (agv.service_until - tick) * self.dt if agv.service else 0.0
        return StatusMsg(
            VehicleKind.AGV, vehicle_id, tick, state,
            pose=(round(agv.pos[0], POSE_DIGITS), round(agv.pos[1], POSE_DIGITS), 0.0),
            carrying=agv.carrying,
            assignment=agv.loop,
            node=agv.node,
            edge=agv.edge,
            progress_m=round(agv.progress_m, POSE_DIGITS),
            service=agv.service,
            service_left_s=max(0.0, left),
        )

    def release_due(self, vehicle_id: int) -> bool:
        uav = self.world.uavs[vehicle_id]
        return uav.phase is FlightPhase.AT_STATION and uav.cargo and uav.unloaded

    # -- admission ----------------------------------------------------------

    def _admit_uav(self, uav: UavRecord, msg: CommandMsg) -> Optional[str]:
        payload = msg.payload
        if payload is UavCommand.DELIVERY:
            route = msg.route
            if route is None:
                return 'missing-route'
            if uav.phase is FlightPhase.ON_AGV:
                agv = self.world.agvs[uav.mounted_on]
                if not agv.at_rest or not self.ground.is_takeoff(agv.node):
                    return 'not-at-takeoff'
                if route.direction is not Direction.OUTBOUND or math.dist(route.start[:2], agv.pos) > 1e-6:
                    return 'route-start-mismatch'
                if uav.station is not None and route.station != uav.station:
                    return 'wrong-station'
                return None
            if uav.phase is FlightPhase.AT_STATION:
                if route.direction is not Direction.RETURN or route.station != uav.station:
                    return 'route-start-mismatch'
                if uav.unload_until is not None:
                    return 'unloading'
                if msg.landing_point is None or msg.agv is None:
                    return 'no-landing-reservation'
                return None
            return 'not-landed'
        if payload is UavCommand.LOAD_CARGO:
            if uav.mounted_on is None or (msg.agv is not None and msg.agv != uav.mounted_on):
                return 'not-on-agv'
            agv = self.world.agvs[uav.mounted_on]
            if not agv.at_rest or agv.node != self.scheme.loop(agv.loop).loading:
                return 'not-at-loading-point'
            return None
        if payload is UavCommand.RELEASE_CARGO:
            if uav.phase is not FlightPhase.AT_STATION or not uav.unloaded:
                return 'unload-pending'
        return None

    def _admit_agv(self, agv: AgvRecord, msg: CommandMsg) -> Optional[str]:
        if not agv.at_rest:
            return 'moving'
        if agv.service:
            return 'in-service'
        loading = self.scheme.loop(agv.loop).loading
        if agv.node != loading:
            return 'not-at-loading-point'
        payload = msg.payload
        if payload is AgvCommand.UAV_RECEIVE:
            uav = self.world.uavs.get(msg.uav)
            if uav is None or uav.phase is not FlightPhase.WORKBENCH or uav.workbench != loading:
                return 'uav-not-on-workbench'
            if self.uav_node.is_halted(uav.id):
                return 'uav-halted'
            return None
        if agv.carrying is None or (msg.uav is not None and msg.uav != agv.carrying):
            return 'no-uav'
        if payload in (AgvCommand.UAV_GET_CARGO, AgvCommand.UAV_CHARGE):
            if self.world.free_staff(loading) is None:
                return 'staff-busy'
            if payload is AgvCommand.UAV_GET_CARGO and msg.order is None:
                return 'no-order'
        return None

    def _node_claimed(self, node: int, requester: int) -> bool:
        target = self.ground.positions[node]
        for aid, agv in self.world.agvs.items():
            if aid == requester:
                continue
            if agv.at_rest and agv.node == node:
                return True
            if agv.edge is not None:
                u, v = agv.edge
                if v == node:
                    return True
                if u == node and math.dist(agv.pos, target) < self.scheme.release_m[node]:
                    return True
        return False

    # -- effects ------------------------------------------------------------

    def _apply_uav(self, uav: UavRecord, effect: Effect, msg: Optional[CommandMsg], tick: int):
        if effect is Effect.START_FLIGHT:
            if uav.phase is FlightPhase.ON_AGV:
                self._start_outbound(uav, msg.route)
            else:
                self._start_return(uav, msg)
        elif effect is Effect.DROP_CARGO:
            finish_t = tick * self.dt
            order_id = uav.order
            uav.cargo = False
            uav.order = None
            uav.unloaded = False
            if order_id is not None:
                points = self.orders.finish(order_id, finish_t)
                self.trace.record(tick, TraceKind.DELIVERED, order=order_id, uav=uav.id,
                                  station=uav.station, finish_t=round(finish_t, 4), score=round(points, 6))

    def _start_outbound(self, uav: UavRecord, route: Route):
        agv = self.world.agvs[uav.mounted_on]
        agv.carrying = None
        uav.mounted_on = None
        uav.route = route
        uav.route_s = 0.0
        uav.station = route.station
        uav.phase = FlightPhase.CLIMB
        uav.vertical_left = self.vertical_ticks
        uav.hold_logged = False

    def _start_return(self, uav: UavRecord, msg: CommandMsg):
        station = self.world.stations[uav.station]
        station.unpark(uav.parking_slot)
        uav.parking_slot = None
        x, y, _ = uav.pos
        alt = msg.route.cruise_altitude
        uav.route = Route(msg.route.station, Direction.RETURN, ((x, y, alt),) + msg.route.waypoints[1:])
        uav.route_s = 0.0
        uav.landing_point = msg.landing_point
        uav.landing_agv = msg.agv
        uav.landing_seq = msg.landing_seq
        uav.phase = FlightPhase.CLIMB
        uav.vertical_left = self.vertical_ticks
        uav.hold_logged = False

    def _apply_agv(self, agv: AgvRecord, effect: Effect, msg: Optional[CommandMsg], tick: int):
        loading = self.scheme.loop(agv.loop).loading
        if effect is Effect.MOUNT_UAV:
            uav = self.world.uavs[msg.uav]
            uav.phase = FlightPhase.ON_AGV
            uav.workbench = None
            uav.mounted_on = agv.id
            uav.pos = (agv.pos[0], agv.pos[1], 0.0)
            agv.carrying = uav.id
        elif effect is Effect.UNMOUNT_UAV:
            uav = self.world.uavs[agv.carrying]
            x, y = self.world.workbenches[loading]
            uav.phase = FlightPhase.WORKBENCH
            uav.workbench = loading
            uav.mounted_on = None
            uav.pos = (x, y, 0.0)
            agv.carrying = None
        elif effect in (Effect.BEGIN_LOAD, Effect.BEGIN_SWAP):
            service = 'load' if effect is Effect.BEGIN_LOAD else 'swap'
            seconds = self.config.service_times.load_s if service == 'load' \
                else self.config.service_times.battery_swap_s
            staff = self.world.free_staff(loading)
            staff.busy_with = agv.id
            agv.service = service
            agv.service_until = tick + _ticks(seconds, self.dt)
            agv.service_staff = staff.id
            agv.service_order = msg.order if service == 'load' else None
            payload = {'service': service, 'agv': agv.id, 'uav': agv.carrying, 'staff': staff.id,
                       'loading_point': loading}
            if agv.service_order is not None:
                payload['order'] = agv.service_order
            self.trace.record(tick, TraceKind.SERVICE_START, **payload)

    # -- services -----------------------------------------------------------

    def _run_services(self, t: int):
        for aid in sorted(self.world.agvs):
            agv = self.world.agvs[aid]
            if agv.service and agv.service_until <= t:
                self._end_agv_service(agv, t)
        for uid in sorted(self.world.uavs):
            uav = self.world.uavs[uid]
            if uav.unload_until is not None and uav.unload_until <= t:
                self._end_unload(uav, t)

    def _end_agv_service(self, agv: AgvRecord, t: int):
        uav = self.world.uavs[agv.carrying]
        payload = {'service': agv.service, 'agv': agv.id, 'uav': uav.id, 'staff': agv.service_staff}
        if agv.service == 'load':
            order = self.orders.get(agv.service_order)
            uav.cargo = True
            uav.order = order.id
            uav.station = order.station
            payload.update(order=order.id, station=order.station)
        else:
            uav.flights_since_swap = 0
        self.world.staff[agv.service_staff].busy_with = None
        agv.service = None
        agv.service_until = None
        agv.service_staff = None
        agv.service_order = None
        self.trace.record(t, TraceKind.SERVICE_END, **payload)

    def _end_unload(self, uav: UavRecord, t: int):
        station = self.world.stations[uav.station]
        station.unloading = None
        station.pad_user = None
        uav.unload_until = None
        uav.unloaded = True
        uav.parking_slot = station.park(uav.id)
        x, y = station.slot_position(uav.parking_slot)
        uav.pos = (x, y, 0.0)
        self.trace.record(t, TraceKind.SERVICE_END, service='unload', uav=uav.id,
                          station=station.id, order=uav.order)

    # -- motion -------------------------------------------------------------

    def _move_agvs(self, t: int):
        step = self.config.speeds.agv_max_mps * self.dt
        for aid in sorted(self.world.agvs):
            agv = self.world.agvs[aid]
            if agv.edge is None:
                continue
            loop = self.scheme.loop(agv.loop)
            u, v = agv.edge
            length = loop.edge_length(u, v)
            agv.progress_m = min(length, agv.progress_m + step)
            if agv.progress_m >= length - 1e-9:
                agv.edge = None
                agv.node = v
                agv.progress_m = 0.0
                agv.pos = loop.positions[v]
                self.trace.record(t, TraceKind.NODE, agv=aid, node=v)
            else:
                agv.pos = loop.position(None, (u, v), agv.progress_m)
            if agv.carrying is not None:
                self.world.uavs[agv.carrying].pos = (agv.pos[0], agv.pos[1], 0.0)

    def _move_uavs(self, t: int):
        for uid in sorted(self.world.uavs):
            uav = self.world.uavs[uid]
            if uav.phase is FlightPhase.CLIMB:
                self._climb(uav)
            elif uav.phase in (FlightPhase.CRUISE, FlightPhase.HOLD):
                self._cruise(uav, t)
            elif uav.phase is FlightPhase.DESCENT:
                self._descend(uav, t)

    def _climb(self, uav: UavRecord):
        alt = uav.route.cruise_altitude
        x, y, z = uav.pos
        uav.vertical_left -= 1
        z = alt if uav.vertical_left <= 0 else min(alt, z + alt / self.vertical_ticks)
        uav.pos = (x, y, z)
        if uav.vertical_left <= 0:
            uav.phase = FlightPhase.CRUISE

    def _cruise(self, uav: UavRecord, t: int):
        route = uav.route
        ahead = self._landings_ahead(uav) if uav.returning else 0
        stop = max(0.0, route.length - self.config.policy.hold_spacing_m * ahead)
        if uav.route_s < stop:
            uav.route_s = min(stop, uav.route_s + self.config.speeds.uav_max_mps * self.dt)
            uav.pos = route.point_at(uav.route_s)
            uav.phase = FlightPhase.CRUISE
        if uav.route_s < stop - 1e-9:
            return
        if uav.route_s >= route.length - 1e-9 and self._may_descend(uav, ahead):
            uav.phase = FlightPhase.DESCENT
            uav.vertical_left = self.vertical_ticks
            return
        uav.phase = FlightPhase.HOLD
        if not uav.hold_logged:
            uav.hold_logged = True
            if uav.returning:
                agv = self.world.agvs.get(uav.landing_agv)
                self.trace.record(t, TraceKind.ANOMALY, reason='landing-hold', uav=uav.id,
                                  landing_point=uav.landing_point, ahead=ahead,
                                  agv=uav.landing_agv, agv_node=agv.node if agv else None)
            else:
                self.trace.record(t, TraceKind.ANOMALY, reason='pad-busy', uav=uav.id, station=uav.station)
            logger.warning("UAV %d holding at tick %d", uav.id, t)

    def _landings_ahead(self, uav: UavRecord) -> int:
        return sum(1 for o in self.world.uavs.values()
                   if o.id != uav.id and o.airborne and o.landing_point == uav.landing_point
                   and o.landing_seq is not None and o.landing_seq < uav.landing_seq)

    def _may_descend(self, uav: UavRecord, ahead: int) -> bool:
        if not uav.returning:
            station = self.world.stations[uav.station]
            if not station.pad_free:
                return False
            station.pad_user = uav.id
            return True
        agv = self.world.agvs.get(uav.landing_agv)
        return (ahead == 0 and agv is not None and agv.at_rest
                and agv.node == uav.landing_point and agv.carrying is None)

    def _descend(self, uav: UavRecord, t: int):
        alt = uav.route.cruise_altitude
        x, y, z = uav.pos
        uav.vertical_left -= 1
        z = 0.0 if uav.vertical_left <= 0 else max(0.0, z - alt / self.vertical_ticks)
        uav.pos = (x, y, z)
        if uav.vertical_left > 0:
            return
        uav.landed_tick = t
        uav.route = None
        uav.route_s = 0.0
        if uav.returning:
            self._touch_down_on_agv(uav, t)
        else:
            self._touch_down_at_station(uav, t)

    def _touch_down_at_station(self, uav: UavRecord, t: int):
        station = self.world.stations[uav.station]
        station.unloading = uav.id
        uav.phase = FlightPhase.AT_STATION
        uav.unload_until = t + _ticks(self.config.service_times.unload_s, self.dt)
        self.trace.record(t, TraceKind.ARRIVAL, uav=uav.id, station=station.id, order=uav.order)
        self.trace.record(t, TraceKind.SERVICE_START, service='unload', uav=uav.id,
                          station=station.id, order=uav.order)

    def _touch_down_on_agv(self, uav: UavRecord, t: int):
        agv = self.world.agvs[uav.landing_agv]
        self.trace.record(t, TraceKind.LANDING, uav=uav.id, agv=agv.id, landing_point=uav.landing_point,
                          seq=uav.landing_seq, agv_node=agv.node)
        agv.carrying = uav.id
        uav.mounted_on = agv.id
        uav.phase = FlightPhase.ON_AGV
        uav.pos = (agv.pos[0], agv.pos[1], 0.0)
        uav.station = None
        uav.flights_since_swap += 1
        uav.landing_point = uav.landing_agv = uav.landing_seq = None

    # -- monitoring ---------------------------------------------------------

    def distance_monitor(self, t: int) -> List[Dict[str, Any]]:
        """
        Check separation and node occupancy; every finding becomes a violation event

        UAV pairs are checked when at least one of them is airborne.
        """
        violations: List[Dict[str, Any]] = []
        ids = sorted(self.world.uavs)
        if len(ids) > 1:
            pts = np.array([self.world.uavs[i].pos for i in ids])
            airborne = np.array([self.world.uavs[i].airborne for i in ids])
            rows, cols = np.triu_indices(len(ids), 1)
            dist = np.linalg.norm(pts[rows] - pts[cols], axis=1)
            close = (dist < self.config.min_dist.uav_m) & (airborne[rows] | airborne[cols])
            for k in np.flatnonzero(close):
                a, b = ids[rows[k]], ids[cols[k]]
                violations.append({
                    'type': 'uav-distance',
                    'uavs': [a, b],
                    'distance': round(float(dist[k]), 4),
                    'message': f"UAVs {a} and {b} are {dist[k]:.2f} m apart",
                })
        plans = []
        for aid in sorted(self.world.agvs):
            agv = self.world.agvs[aid]
            loop = self.scheme.loop(agv.loop)
            if agv.edge is not None:
                plans.append(AgvPlan(aid, agv.loop, agv.edge[0], agv.edge[1], agv.progress_m, 'move'))
            else:
                plans.append(AgvPlan(aid, agv.loop, agv.node, loop.successor(agv.node)))
        violations += occupancy_check(plans, self.scheme, self.config.min_dist.agv_m)
        for v in violations:
            self.trace.record(t, TraceKind.VIOLATION, **v)
            logger.warning("tick %d: %s", t, v['message'])
        return violations

    def _record_poses(self, t: int):
        uavs, agvs = {}, {}
        for uid in sorted(self.world.uavs):
            pose = tuple(round(c, POSE_DIGITS) for c in self.world.uavs[uid].pos)
            if self._poses.get(('uav', uid)) != pose:
                self._poses[('uav', uid)] = pose
                uavs[uid] = list(pose)
        for aid in sorted(self.world.agvs):
            pose = tuple(round(c, POSE_DIGITS) for c in self.world.agvs[aid].pos)
            if self._poses.get(('agv', aid)) != pose:
                self._poses[('agv', aid)] = pose
                agvs[aid] = list(pose)
        if uavs or agvs:
            self.trace.record(t, TraceKind.POSE, uavs=uavs, agvs=agvs)

    def snapshot(self) -> Dict[str, Any]:
        """Plain view of the world for visualisation tooling"""
        w = self.world
        return {
            'tick': w.tick,
            'uavs': {
                u.id: {'pos': [round(c, POSE_DIGITS) for c in u.pos], 'phase': u.phase.value,
                       'state': self.uav_node.state_of(u.id).value, 'cargo': u.cargo,
                       'order': u.order, 'station': u.station, 'mounted_on': u.mounted_on}
                for u in w.uavs.values()
            },
            'agvs': {
                a.id: {'pos': [round(c, POSE_DIGITS) for c in a.pos], 'state': self.agv_node.state_of(a.id).value,
                       'node': a.node, 'edge': list(a.edge) if a.edge else None,
                       'carrying': a.carrying, 'service': a.service}
                for a in w.agvs.values()
            },
            'stations': {s.id: {'pad_user': s.pad_user, 'unloading': s.unloading, 'parked': len(s.parked)}
                         for s in w.stations.values()},
        }


def run(config: ScenarioConfig, orders: Optional[Sequence[Order]] = None, **options) -> Engine:
    """Run one scenario to completion and return the finished engine"""
    engine = Engine(config, orders, **options)
    try:
        engine.run()
        engine.finish()
    finally:
        engine.close()
    return engine
