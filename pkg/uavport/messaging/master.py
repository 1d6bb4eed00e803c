"""
Master node

Runs every master period. It aggregates the newest fresh status of every
vehicle into a snapshot, keeps the air scheduler's books in step with
what the vehicles report, asks the air scheduler to admit returns and
takeoffs, and finally asks the ground scheduler to plan the AGV loops.
"""

import logging
from typing import Dict, List, Sequence, Tuple

from ..fsm import UavCommand, UavState
from ..scheduling.air import ReturnRequest, TakeoffRequest
from ..trace import EventTrace, TraceKind
from .messages import CommandMsg, FleetSnapshot, NodeClock, StatusMsg, VehicleKind

logger = logging.getLogger(__name__)

AT_STATION = 'at-station'


class MasterNode:
    """Scheduler-facing node that turns status snapshots into commands"""

    def __init__(self, ground, air, trace: EventTrace, clock: NodeClock, dt: float):
        self.ground = ground
        self.air = air
        self.trace = trace
        self.clock = clock
        self.dt = dt
        self._awaiting: Dict[int, Tuple[UavState, int]] = {}
        self._seen_landing: Dict[int, int] = {}

    def master_tick(self, tick: int, statuses: Sequence[StatusMsg], orders) -> List[CommandMsg]:
        """
        One scheduling round

        Args:
            tick: Current base tick
            statuses: Latest status per vehicle; stale ones are ignored
            orders: The order book

        Returns:
            Commands for the management nodes, returns first, then takeoffs,
            then ground commands
        """
        snapshot = FleetSnapshot.from_statuses(tick, self.dt, statuses, self.clock.max_status_age)
        self._observe(snapshot)
        commands = self._admit_returns(snapshot)
        commands += self._admit_takeoffs(snapshot)
        commands += self.ground.plan_ground(snapshot, self.air.landings, orders)
        return commands

    def _observe(self, snapshot: FleetSnapshot):
        tick = snapshot.tick
        for uid, st in snapshot.uavs.items():
            if uid in self._awaiting:
                state, issued = self._awaiting[uid]
                if st.state is not state:
                    del self._awaiting[uid]
                elif tick - issued > 2 * self.clock.master_period:
                    del self._awaiting[uid]
                    self.air.cancel(uid)
                    self.trace.record(tick, TraceKind.ANOMALY, reason='approval-expired', uav=uid, state=state)
            if st.phase == AT_STATION and st.landed_tick is not None \
                    and self._seen_landing.get(uid) != st.landed_tick:
                self._seen_landing[uid] = st.landed_tick
                record = self.air.on_arrival(uid, st.station, st.landed_tick)
                if record is None:
                    self.trace.record(tick, TraceKind.ANOMALY, reason='unbooked-arrival',
                                      uav=uid, station=st.station, landed=st.landed_tick)
                else:
                    self.trace.record(tick, TraceKind.BOOKING, op='arrival-done', **record.to_record())
        for aid, st in snapshot.agvs.items():
            if st.carrying is None or self.air.landings.entry_for_uav(st.carrying) is None:
                continue
            entry = self.air.on_landing(st.carrying)
            self.trace.record(tick, TraceKind.BOOKING, op='landing-done', uav=entry.uav,
                              agv=aid, landing_point=entry.landing_point, reserved_agv=entry.agv)

    def _admit_returns(self, snapshot: FleetSnapshot) -> List[CommandMsg]:
        commands = []
        for uid, st in sorted(snapshot.uavs.items()):
            if st.state is not UavState.WAITTING_BACK or st.phase != AT_STATION or uid in self._awaiting:
                continue
            etas = self.ground.landing_etas(snapshot, self.air.landings)
            decision = self.air.request_return(ReturnRequest(uid, st.station, snapshot.tick), etas)
            if not decision.approved:
                self.trace.record(snapshot.tick, TraceKind.DEFERRAL, **decision.to_record())
                continue
            self.trace.record(snapshot.tick, TraceKind.APPROVAL, **decision.to_record())
            self._awaiting[uid] = (st.state, snapshot.tick)
            commands.append(CommandMsg(
                VehicleKind.UAV, uid, snapshot.tick, UavCommand.DELIVERY,
                route=decision.route, agv=decision.agv,
                landing_point=decision.landing_point, landing_seq=decision.landing_seq,
            ))
        return commands

    def _admit_takeoffs(self, snapshot: FleetSnapshot) -> List[CommandMsg]:
        commands = []
        for uid, st in sorted(snapshot.uavs.items()):
            if st.state is not UavState.WAITTING_GO or uid in self._awaiting:
                continue
            agv = snapshot.agvs.get(st.mounted_on)
            if agv is None or not agv.at_rest or not self.ground.is_takeoff(agv.node):
                continue
            decision = self.air.request_takeoff(TakeoffRequest(uid, st.station, snapshot.tick, agv.node))
            if not decision.approved:
                self.trace.record(snapshot.tick, TraceKind.DEFERRAL, **decision.to_record())
                continue
            self.trace.record(snapshot.tick, TraceKind.APPROVAL, **decision.to_record())
            self._awaiting[uid] = (st.state, snapshot.tick)
            commands.append(CommandMsg(VehicleKind.UAV, uid, snapshot.tick, UavCommand.DELIVERY,
                                       route=decision.route, order=st.assignment))
        logger.debug("tick %d: %d takeoff approvals", snapshot.tick, len(commands))
        return commands
