"""
Ground scheduler

Plans the AGV loops once per master tick. Every AGV circulates on its own
loop (loading point, takeoff point, hold points, landing point). Track
safety comes from node reservation: an AGV may start an edge only when
the edge's end node is unclaimed, and a departing AGV keeps its start
node claimed until it is far enough away that the next AGV cannot come
within the minimum AGV distance.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from ..domain import InvariantError, NodeKind, SCHEME_SHAPES, ScenarioConfig, SchemeName, SimTime
from ..fsm import AgvCommand, AgvState, UavCommand, UavState
from ..messaging.messages import CommandMsg, Directive, FleetSnapshot, StatusMsg, VehicleKind
from ..orders.orders import assign_orders

logger = logging.getLogger(__name__)

Point2 = Tuple[float, float]


class SchemeError(InvariantError):
    """Raised when a loop set does not have the cardinalities of its scheme"""

    def __init__(self, message: str):
        super().__init__('scheme-partition', message)


@dataclass(frozen=True)
class LoopDef:
    """
    One AGV loop with its geometry

    ``nodes`` starts at the loading point and ends at the landing point;
    the loop closes with the edge landing -> loading.
    """
    id: int
    nodes: Tuple[int, ...]
    positions: Mapping[int, Point2]
    kinds: Optional[Mapping[int, NodeKind]] = None
    _lengths: Dict[Tuple[int, int], float] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.nodes) < 4 or len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"loop {self.id} needs at least 4 distinct nodes")
        if self.kinds is None:
            kinds = {n: NodeKind.HOLD for n in self.nodes[2:-1]}
            kinds.update({self.nodes[0]: NodeKind.LOADING, self.nodes[1]: NodeKind.TAKEOFF,
                          self.nodes[-1]: NodeKind.LANDING})
            object.__setattr__(self, 'kinds', kinds)
        lengths = {}
        for u, v in self.edges:
            lengths[(u, v)] = math.dist(self.positions[u], self.positions[v])
        object.__setattr__(self, '_lengths', lengths)

    @property
    def edges(self) -> List[Tuple[int, int]]:
        ring = self.nodes + self.nodes[:1]
        return list(zip(ring, ring[1:]))

    @property
    def loading(self) -> int:
        return self.nodes[0]

    @property
    def takeoff(self) -> int:
        return self.nodes[1]

    @property
    def landing(self) -> int:
        return self.nodes[-1]

    @property
    def holds(self) -> Tuple[int, ...]:
        return self.nodes[2:-1]

    @property
    def length(self) -> float:
        return sum(self._lengths.values())

    def kind_of(self, node: int) -> NodeKind:
        return self.kinds[node]

    def successor(self, node: int) -> int:
        i = self.nodes.index(node)
        return self.nodes[(i + 1) % len(self.nodes)]

    def predecessor(self, node: int) -> int:
        i = self.nodes.index(node)
        return self.nodes[i - 1]

    def edge_length(self, u: int, v: int) -> float:
        return self._lengths[(u, v)]

    def path_length(self, src: int, dst: int) -> float:
        """Distance along the loop from ``src`` to ``dst``; 0 when they coincide"""
        total, node = 0.0, src
        while node != dst:
            nxt = self.successor(node)
            total += self._lengths[(node, nxt)]
            node = nxt
        return total

    def hops(self, src: int, dst: int) -> int:
        count, node = 0, src
        while node != dst:
            node = self.successor(node)
            count += 1
        return count

    def remaining_to(self, target: int, node: Optional[int], edge: Optional[Tuple[int, int]],
                     progress_m: float = 0.0) -> float:
        """Distance left to ``target`` for an AGV at rest at ``node`` or on ``edge``"""
        if edge is None:
            return self.path_length(node, target)
        u, v = edge
        return self._lengths[(u, v)] - progress_m + self.path_length(v, target)

    def hops_to(self, target: int, node: Optional[int], edge: Optional[Tuple[int, int]]) -> int:
        if edge is None:
            return self.hops(node, target)
        return 1 + self.hops(edge[1], target)

    def position(self, node: Optional[int], edge: Optional[Tuple[int, int]] = None,
                 progress_m: float = 0.0) -> Point2:
        if edge is None:
            return self.positions[node]
        u, v = edge
        frac = min(1.0, max(0.0, progress_m / self._lengths[(u, v)]))
        a, b = np.asarray(self.positions[u]), np.asarray(self.positions[v])
        p = a + frac * (b - a)
        return (float(p[0]), float(p[1]))

    def on_approach(self, node: Optional[int], edge: Optional[Tuple[int, int]]) -> bool:
        """True between the takeoff point and the landing point, inclusive"""
        approach = self.nodes[1:]
        if edge is None:
            return node in approach
        return edge[1] in approach


def release_distances(loops: Sequence[LoopDef], agv_min_m: float, margin_m: float) -> Dict[int, float]:
    """
    Distance a departing AGV must cover before its start node is free again

    Args:
        loops: Every loop of the scheme; shared nodes see all their edges
        agv_min_m: Minimum AGV separation
        margin_m: Extra clearance

    Returns:
        Release distance per node id
    """
    incoming: Dict[int, List[Point2]] = {}
    outgoing: Dict[int, List[Point2]] = {}
    positions: Dict[int, Point2] = {}
    for loop in loops:
        positions.update(loop.positions)
        for u, v in loop.edges:
            outgoing.setdefault(u, []).append(loop.positions[v])
            incoming.setdefault(v, []).append(loop.positions[u])
    release = {}
    for node, here in positions.items():
        here_v = np.asarray(here)
        smallest = math.pi / 2
        for src in incoming.get(node, []):
            for dst in outgoing.get(node, []):
                a, b = np.asarray(src) - here_v, np.asarray(dst) - here_v
                cos = float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))
                smallest = min(smallest, math.acos(max(-1.0, min(1.0, cos))))
        release[node] = (agv_min_m + margin_m) / max(math.sin(smallest), 1e-6)
    return release


@dataclass(frozen=True)
class CycleScheme:
    """Loops of one scheme, the AGV partition over them and node release distances"""
    name: SchemeName
    loops: Tuple[LoopDef, ...]
    agv_assignment: Mapping[int, int]
    release_m: Mapping[int, float]

    def __post_init__(self):
        shape = SCHEME_SHAPES[self.name]
        if len(self.loops) != shape.loops:
            raise SchemeError(f"{self.name.value} needs {shape.loops} loops, got {len(self.loops)}")
        for loop in self.loops:
            count = sum(1 for lid in self.agv_assignment.values() if lid == loop.id)
            if count != shape.agvs_per_loop:
                raise SchemeError(f"loop {loop.id} has {count} AGVs, {self.name.value} needs {shape.agvs_per_loop}")
        takeoffs = {loop.takeoff for loop in self.loops}
        landings = {loop.landing for loop in self.loops}
        if (len(takeoffs), len(landings)) != (shape.takeoff_points, shape.landing_points):
            raise SchemeError(f"{self.name.value} needs {shape.takeoff_points} takeoff and "
                              f"{shape.landing_points} landing points")

    @classmethod
    def from_config(cls, config: ScenarioConfig) -> 'CycleScheme':
        layout = config.layout
        loops = tuple(
            LoopDef(spec.id, spec.nodes,
                    {n: layout.node(n).position for n in spec.nodes},
                    {n: layout.node(n).kind for n in spec.nodes})
            for spec in sorted(layout.loops, key=lambda s: s.id)
        )
        shape = SCHEME_SHAPES[config.scheme]
        assignment = {}
        aid = 1
        for loop in loops:
            for _ in range(shape.agvs_per_loop):
                assignment[aid] = loop.id
                aid += 1
        release = release_distances(loops, config.min_dist.agv_m, config.policy.clearance_margin_m)
        return cls(config.scheme, loops, assignment, release)

    def loop(self, loop_id: int) -> LoopDef:
        for loop in self.loops:
            if loop.id == loop_id:
                return loop
        raise KeyError(loop_id)

    def loop_of_agv(self, agv: int) -> LoopDef:
        return self.loop(self.agv_assignment[agv])

    def loop_of_landing(self, node: int) -> LoopDef:
        for loop in self.loops:
            if loop.landing == node:
                return loop
        raise KeyError(node)

    def initial_placement(self) -> Dict[int, int]:
        """
        Starting node per AGV

        The first AGV of a loop starts at the loading point, the second at
        the landing point and the rest fill the holds from the back.
        """
        placement = {}
        for loop in self.loops:
            slots = [loop.loading, loop.landing] + list(reversed(loop.holds))
            members = sorted(a for a, lid in self.agv_assignment.items() if lid == loop.id)
            for aid, node in zip(members, slots):
                placement[aid] = node
        return placement


@dataclass(frozen=True)
class AgvPlan:
    """Where an AGV is and what it does next, as the ground planner sees it"""
    agv: int
    loop: int
    current_node: int
    next_node: int
    progress_m: float = 0.0
    queued_action: str = 'wait'

    @classmethod
    def from_status(cls, st: StatusMsg, loop: LoopDef) -> 'AgvPlan':
        if st.edge is not None:
            return cls(st.sender, loop.id, st.edge[0], st.edge[1], st.progress_m, 'move')
        action = 'service' if st.service else 'wait'
        return cls(st.sender, loop.id, st.node, loop.successor(st.node), 0.0, action)

    @property
    def moving(self) -> bool:
        return self.queued_action == 'move'


def eta_to_landing(plan: AgvPlan, loop: LoopDef, pending_services_s: float, now: SimTime,
                   agv_max_mps: float) -> SimTime:
    """
    Earliest time the AGV can be at rest at its loop's landing point

    Args:
        plan: The AGV's current plan
        loop: Its loop
        pending_services_s: Service and waiting time still ahead of it
        now: Current time
        agv_max_mps: AGV top speed

    Returns:
        Arrival time, rounded up to a whole tick
    """
    if plan.moving:
        remaining = loop.remaining_to(loop.landing, None, (plan.current_node, plan.next_node), plan.progress_m)
    else:
        remaining = loop.path_length(plan.current_node, loop.landing)
    return SimTime.from_seconds(now.seconds + remaining / agv_max_mps + pending_services_s, now.dt)


def occupancy_check(plans: Sequence[AgvPlan], scheme: CycleScheme, min_dist_m: float = 3.0) -> List[Dict]:
    """
    Check a set of AGV plans for shared nodes and separation

    Returns:
        One violation dict per offending pair; empty when the plans are safe
    """
    violations = []
    at_node: Dict[int, int] = {}
    points = {}
    for plan in sorted(plans, key=lambda p: p.agv):
        loop = scheme.loop(plan.loop)
        if plan.moving:
            points[plan.agv] = loop.position(None, (plan.current_node, plan.next_node), plan.progress_m)
            continue
        points[plan.agv] = loop.position(plan.current_node)
        other = at_node.setdefault(plan.current_node, plan.agv)
        if other != plan.agv:
            violations.append({
                'type': 'node-conflict',
                'agvs': [other, plan.agv],
                'node': plan.current_node,
                'message': f"AGVs {other} and {plan.agv} both at node {plan.current_node}",
            })
    ids = sorted(points)
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            d = math.dist(points[a], points[b])
            if d < min_dist_m:
                violations.append({
                    'type': 'agv-distance',
                    'agvs': [a, b],
                    'distance': round(d, 4),
                    'message': f"AGVs {a} and {b} are {d:.2f} m apart (min {min_dist_m} m)",
                })
    return violations


class GroundScheduler:
    """
    Per-tick AGV planner

    Args:
        scheme: The cycle scheme
        config: Scenario configuration (speeds, service times, policy)
    """

    def __init__(self, scheme: CycleScheme, config: ScenarioConfig):
        self.scheme = scheme
        self.agv_max_mps = config.speeds.agv_max_mps
        self.service_times = config.service_times
        self.swap_every = config.policy.swap_every
        self.latency_s = config.timing.master_period_ticks * config.dt
        self.dt = config.dt
        self.agv_loops: Dict[int, int] = dict(scheme.agv_assignment)
        self.positions: Dict[int, Point2] = {}
        for loop in scheme.loops:
            self.positions.update(loop.positions)
        self._last_directive: Dict[int, Tuple[Directive, int]] = {}

    def assign_agv(self, agv: int, loop_id: int):
        """Put an AGV added at runtime on a loop"""
        self.scheme.loop(loop_id)
        self.agv_loops[agv] = loop_id

    def loop_of(self, agv: int) -> LoopDef:
        return self.scheme.loop(self.agv_loops[agv])

    def is_takeoff(self, node: Optional[int]) -> bool:
        return any(loop.takeoff == node for loop in self.scheme.loops)

    def claimed_nodes(self, snapshot: FleetSnapshot) -> Dict[int, int]:
        """
        Node -> AGV holding it

        An AGV claims the node it rests at, the end of the edge it is on and
        the start of that edge until it is ``release_m`` away from it. Stale
        AGVs still claim: their last position is the best we know.
        """
        claims: Dict[int, int] = {}
        everyone = dict(snapshot.stale)
        everyone.update(snapshot.agvs)
        for aid, st in sorted(everyone.items()):
            if st.edge is None:
                if st.node is not None:
                    claims.setdefault(st.node, aid)
                continue
            u, v = st.edge
            claims.setdefault(v, aid)
            if math.dist(st.pose[:2], self.positions[u]) < self.scheme.release_m[u]:
                claims.setdefault(u, aid)
        return claims

    def plan_ground(self, snapshot: FleetSnapshot, landing_book, orders) -> List[CommandMsg]:
        """
        Commands for every AGV at rest and without a running service

        Args:
            snapshot: Fresh statuses of this master tick
            landing_book: Current landing reservations
            orders: The order book

        Returns:
            AGV commands and UAV Load_Cargo commands, AGVs in ascending id
        """
        tick = snapshot.tick
        uavs, agvs = snapshot.uavs, snapshot.agvs
        claims = self.claimed_nodes(snapshot)
        reserved = landing_book.reserved_agvs()
        pending = list(orders.pending(snapshot.now_s))

        pools: Dict[int, List[int]] = {}
        for uid, st in sorted(uavs.items()):
            if st.state is UavState.READY and st.phase == 'workbench':
                pools.setdefault(st.node, []).append(uid)
        idle_on_agv = sum(1 for st in agvs.values()
                          if st.state is AgvState.WAITTING_WORKING and st.carrying in uavs
                          and not uavs[st.carrying].cargo and uavs[st.carrying].assignment is None)
        heading: Dict[int, int] = {}
        for aid, st in agvs.items():
            if st.carrying is None and st.state is AgvState.WAITTING_PICKUP and self._heading_to_loading(aid, st):
                lp = self.loop_of(aid).loading
                heading[lp] = heading.get(lp, 0) + 1
        demand = len(pending) - idle_on_agv
        spare = {lp: len(pools.get(lp, [])) - heading.get(lp, 0) for lp in self._loading_points()}
        pull_demand = demand - sum(heading.values())

        commands: List[CommandMsg] = []
        for aid, st in sorted(agvs.items()):
            if st.edge is not None:
                self._last_directive.pop(aid, None)
                continue
            if st.service:
                continue
            loop = self.loop_of(aid)
            kind = loop.kind_of(st.node)
            uav = uavs.get(st.carrying) if st.carrying is not None else None

            if st.state is AgvState.WAITTING_WORKING:
                cmds, took = self._at_loading(tick, aid, st, uav, loop, pending, agvs, reserved)
                if took is not None:
                    pending.remove(took)
                    orders.mark_assigned(took.id, st.carrying)
                commands += cmds
            elif st.state is AgvState.WAITTING_GO_AW:
                if uav is not None and kind is NodeKind.TAKEOFF:
                    commands += self._hold(tick, aid, st)
                elif uav is None or kind is not NodeKind.LOADING or uav.state is UavState.WAITTING_GO:
                    commands += self._advance(tick, aid, st, loop, claims)
            elif st.state is AgvState.WAITTING_GO_GW:
                commands += self._advance(tick, aid, st, loop, claims)
            elif st.state is AgvState.WAITTING_PICKUP:
                if kind is NodeKind.LOADING:
                    pool = pools.get(loop.loading, [])
                    if st.carrying is None and pool and demand > 0:
                        uid = pool.pop(0)
                        demand -= 1
                        commands.append(CommandMsg(VehicleKind.AGV, aid, tick, AgvCommand.UAV_RECEIVE, uav=uid))
                        self._last_directive.pop(aid, None)
                    else:
                        commands += self._advance(tick, aid, st, loop, claims)
                elif kind is NodeKind.LANDING:
                    if aid in reserved:
                        commands += self._hold(tick, aid, st)
                    elif self._blocks_reserved(aid, loop, reserved) or (
                            spare[loop.loading] > 0 and pull_demand > 0):
                        moved = self._advance(tick, aid, st, loop, claims)
                        if moved and moved[0].payload is Directive.MOVE:
                            spare[loop.loading] -= 1
                            pull_demand -= 1
                        commands += moved
                    else:
                        commands += self._hold(tick, aid, st)
                else:
                    commands += self._advance(tick, aid, st, loop, claims)
        return commands

    def landing_etas(self, snapshot: FleetSnapshot, landing_book) -> Dict[int, List[Tuple[int, float]]]:
        """
        Candidate AGV per landing point with its earliest arrival

        Empty AGVs on the approach path are queued by distance to the
        landing point. Reserved AGVs ahead push the candidate back: it can
        only arrive after their UAV has landed and they have left.

        Returns:
            {landing point: [(AgvId, eta seconds)]}, empty list when no AGV can be offered
        """
        now = SimTime(snapshot.tick, self.dt)
        etas: Dict[int, List[Tuple[int, float]]] = {}
        for loop in self.scheme.loops:
            lp = loop.landing
            queue = []
            release_s = None
            for aid, st in sorted(snapshot.agvs.items()):
                if self.agv_loops.get(aid) != loop.id:
                    continue
                if st.carrying is not None and st.at_rest and st.node == lp:
                    release_s = now.seconds + self._exit_s(loop, snapshot)
                    continue
                if st.carrying is not None or st.state is not AgvState.WAITTING_PICKUP:
                    continue
                if not loop.on_approach(st.node, st.edge):
                    continue
                queue.append((loop.remaining_to(lp, st.node, st.edge, st.progress_m), aid, st))
            queue.sort(key=lambda q: (q[0], q[1]))

            offered: List[Tuple[int, float]] = []
            for remaining, aid, st in queue:
                hops = loop.hops_to(lp, st.node, st.edge)
                plan = AgvPlan.from_status(st, loop)
                own = eta_to_landing(plan, loop, hops * self.latency_s, now, self.agv_max_mps).seconds
                arrive = own if release_s is None else max(own, release_s + self._approach_s(loop, remaining))
                entry = landing_book.entry_for_agv(aid)
                if entry is not None:
                    release_s = max(arrive, entry.uav_land_s) + self._exit_s(loop, snapshot)
                    continue
                offered.append((aid, arrive))
                break
            etas[lp] = offered
        return etas

    def _heading_to_loading(self, aid: int, st: StatusMsg) -> bool:
        loop = self.loop_of(aid)
        if st.edge is not None:
            return st.edge[1] == loop.loading
        return st.node == loop.loading

    def _loading_points(self) -> List[int]:
        return [loop.loading for loop in self.scheme.loops]

    def _blocks_reserved(self, aid: int, loop: LoopDef, reserved: Set[int]) -> bool:
        """An unreserved AGV whose loop holds a reserved AGV that must pass it"""
        return aid not in reserved and any(
            other != aid and self.agv_loops.get(other) == loop.id for other in reserved)

    def _approach_s(self, loop: LoopDef, remaining_m: float) -> float:
        """Time for a follower to close up once the landing point is free"""
        hop = loop.edge_length(loop.predecessor(loop.landing), loop.landing)
        return min(remaining_m, hop) / self.agv_max_mps + self.latency_s

    def _exit_s(self, loop: LoopDef, snapshot: FleetSnapshot) -> float:
        """Time for an AGV at the landing point to leave it, including waiting for the loading point"""
        st_times = self.service_times
        clear_loading = self.scheme.release_m[loop.loading] / self.agv_max_mps + self.latency_s
        busy = 0.0
        for aid, st in snapshot.agvs.items():
            if self.agv_loops.get(aid) != loop.id:
                continue
            if st.at_rest and st.node == loop.loading:
                left = st.service_left_s
                if st.state is AgvState.WAITTING_WORKING and not st.service:
                    left += st_times.load_s + st_times.battery_swap_s
                elif st.service == 'swap':
                    left += st_times.load_s
                busy = max(busy, left + clear_loading)
            elif st.edge == (loop.landing, loop.loading):
                travel = (loop.edge_length(*st.edge) - st.progress_m) / self.agv_max_mps
                busy = max(busy, travel + st_times.load_s + st_times.battery_swap_s + clear_loading)
        return busy + self.scheme.release_m[loop.landing] / self.agv_max_mps + 2 * self.latency_s

    def _at_loading(self, tick: int, aid: int, st: StatusMsg, uav: Optional[StatusMsg], loop: LoopDef,
                    pending, agvs: Mapping[int, StatusMsg], reserved: Set[int]):
        """Decide for an AGV in Waitting_Working; returns (commands, order taken)"""
        if uav is None:
            logger.info("AGV %d retrieves UAV %s that stopped reporting", aid, st.carrying)
            return [CommandMsg(VehicleKind.AGV, aid, tick, AgvCommand.UAV_RETRIEVE, uav=st.carrying)], None
        if uav.state is not UavState.ON_CAR or uav.cargo or uav.assignment is not None:
            return [], None
        if uav.flights_since_swap >= self.swap_every:
            return [CommandMsg(VehicleKind.AGV, aid, tick, AgvCommand.UAV_CHARGE, uav=uav.sender)], None
        taken = assign_orders([uav.sender], pending)
        if taken:
            order = next(o for o in pending if o.id in taken)
            return [
                CommandMsg(VehicleKind.AGV, aid, tick, AgvCommand.UAV_GET_CARGO, uav=uav.sender, order=order.id),
                CommandMsg(VehicleKind.UAV, uav.sender, tick, UavCommand.LOAD_CARGO, agv=aid, order=order.id),
            ], order
        behind = loop.predecessor(loop.loading)
        for other, ost in agvs.items():
            if not ost.at_rest or ost.node != behind:
                continue
            if (ost.carrying is not None and ost.state is AgvState.WAITTING_GO_GW) \
                    or (ost.carrying is None and self._blocks_reserved(other, loop, reserved)):
                return [CommandMsg(VehicleKind.AGV, aid, tick, AgvCommand.UAV_RETRIEVE, uav=uav.sender)], None
        return [], None

    def _advance(self, tick: int, aid: int, st: StatusMsg, loop: LoopDef,
                 claims: Dict[int, int]) -> List[CommandMsg]:
        target = loop.successor(st.node)
        holder = claims.get(target)
        if holder is not None and holder != aid:
            return self._hold(tick, aid, st)
        claims[target] = aid
        self._last_directive.pop(aid, None)
        return [CommandMsg(VehicleKind.AGV, aid, tick, Directive.MOVE, node=target)]

    def _hold(self, tick: int, aid: int, st: StatusMsg) -> List[CommandMsg]:
        """WAIT, sent only when it changes what the AGV was last told"""
        key = (Directive.WAIT, st.node)
        if self._last_directive.get(aid) == key:
            return []
        self._last_directive[aid] = key
        return [CommandMsg(VehicleKind.AGV, aid, tick, Directive.WAIT, node=st.node)]
