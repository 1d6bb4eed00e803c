"""
Trace Verifier for uavport

Re-checks a finished event trace without re-running the simulation. The
verifier shares no state with the engine: it rebuilds vehicle positions
from pose records and AGV node occupancy from spawn, depart and node
events, then checks them against the limits in the run-start header.

Checks:
- Consecutive arrivals at one station are more than the go gap apart
  (minus two ticks of quantisation)
- Every landing is onto the AGV its return approval reserved, resting on
  the landing point
- Minimum UAV separation whenever one of the pair is airborne
- Minimum AGV separation and single occupancy of loop nodes
- Speed limits of airborne UAVs and of every AGV, with slack for the
  rounding of recorded poses
- Every FSM transition is an edge of its machine and continues from the
  vehicle's previous state
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Tuple, Union

import numpy as np

from ..fsm import AgvState, UavState, legal_transitions
from ..trace import EventTrace, TraceEvent, TraceKind

logger = logging.getLogger(__name__)

CHECKS = (
    'arrival-gap',
    'landing-reservation',
    'uav-distance',
    'agv-distance',
    'node-occupancy',
    'motion-bounds',
    'fsm-edges',
    'recorded-violations',
)

# Poses are written with this many decimals unless the header says otherwise
DEFAULT_POSE_DIGITS = 4

INITIAL_STATES = {'uav': UavState.READY.value, 'agv': AgvState.WAITTING_PICKUP.value}


def rounding_slack(digits: int) -> float:
    """Largest distance error between two 3D points each rounded to ``digits`` decimals"""
    return 2 * 10.0 ** -digits * 3 ** 0.5


class TraceVerifier:
    """
    Audits one event trace

    Args:
        tolerance: Slack for floating point comparisons, in meters or m/s
    """

    def __init__(self, tolerance: float = 1e-6):
        self.tolerance = tolerance
        self.violations: List[Dict[str, Any]] = []
        self.header: Dict[str, Any] = {}
        self.slack = tolerance

    def analyze(self, trace: EventTrace) -> Dict[str, Any]:
        """
        Run every check over a trace

        Returns:
            Dictionary with 'passed', 'violations', per-check outcome in
            'checks' and event counts in 'stats'
        """
        self.violations = []
        starts = trace.of_kind(TraceKind.RUN_START)
        if not starts:
            self._flag('missing-header', 0, "trace has no run-start record")
            return self._result(trace)
        self.header = dict(starts[0].payload)
        digits = int(self.header.get('pose_digits', DEFAULT_POSE_DIGITS))
        self.slack = max(self.tolerance, rounding_slack(digits))

        self._check_arrivals(trace)
        self._check_fsm(trace)
        self._replay(trace)
        for event in trace.of_kind(TraceKind.VIOLATION):
            self._flag('recorded-violations', event.tick,
                       f"engine reported {event.get('type')}: {event.get('message', '')}",
                       recorded=event.get('type'))
        return self._result(trace)

    def _result(self, trace: EventTrace) -> Dict[str, Any]:
        failed = {v['check'] for v in self.violations}
        return {
            'passed': not self.violations,
            'violations': list(self.violations),
            'checks': {name: name not in failed for name in CHECKS},
            'stats': {
                'events': len(trace),
                'arrivals': trace.count(TraceKind.ARRIVAL),
                'landings': trace.count(TraceKind.LANDING),
                'transitions': trace.count(TraceKind.STATE_TRANSITION),
                'last_tick': trace.last_tick,
            },
        }

    def _flag(self, check: str, tick: int, message: str, **extra):
        self.violations.append({'type': extra.pop('kind', check), 'check': check, 'tick': tick,
                                'message': message, **extra})

    # -- air admission --------------------------------------------------------

    def _check_arrivals(self, trace: EventTrace):
        dt = float(self.header['dt'])
        # two ticks of slack: each arrival is quantised to a tick
        bound_ticks = round(float(self.header['go_gap_s']) / dt) - 2
        last: Dict[int, TraceEvent] = {}
        for event in trace.of_kind(TraceKind.ARRIVAL):
            station = event['station']
            previous = last.get(station)
            if previous is not None:
                gap = (event.tick - previous.tick) * dt
                if event.tick - previous.tick <= bound_ticks:
                    self._flag('arrival-gap', event.tick,
                               f"station {station}: UAVs {previous['uav']} and {event['uav']} "
                               f"arrived {gap:.1f} s apart",
                               station=station, uavs=[previous['uav'], event['uav']], gap_s=round(gap, 4))
            last[station] = event

    # -- FSM ------------------------------------------------------------------

    def _check_fsm(self, trace: EventTrace):
        legal = legal_transitions()
        current: Dict[Tuple[str, int], str] = {}
        for event in trace.of_kind(TraceKind.SPAWN):
            current[(event['vehicle'], event['id'])] = INITIAL_STATES[event['vehicle']]
        for event in trace.of_kind(TraceKind.STATE_TRANSITION):
            vehicle, vid = event['vehicle'], event['id']
            edge = (event['from'], event['trigger'], event['to'])
            if edge not in legal.get(vehicle, set()):
                self._flag('fsm-edges', event.tick, f"{vehicle} {vid}: illegal transition {edge}",
                           vehicle=vehicle, id=vid)
            known = current.get((vehicle, vid))
            if known is not None and known != event['from']:
                self._flag('fsm-edges', event.tick,
                           f"{vehicle} {vid}: transition from {event['from']} but state was {known}",
                           kind='fsm-continuity', vehicle=vehicle, id=vid)
            current[(vehicle, vid)] = event['to']

    # -- replay of positions and node occupancy -------------------------------

    def _replay(self, trace: EventTrace):
        dt = float(self.header['dt'])
        uav_min = float(self.header['uav_min_m'])
        agv_min = float(self.header['agv_min_m'])
        uav_step = float(self.header['uav_max_mps']) * dt
        agv_step = float(self.header['agv_max_mps']) * dt

        uav_pose: Dict[int, Tuple[int, np.ndarray]] = {}
        agv_pose: Dict[int, Tuple[int, np.ndarray]] = {}
        agv_node: Dict[int, Optional[int]] = {}
        close_uavs: Set[Tuple[int, int]] = set()
        close_agvs: Set[Tuple[int, int]] = set()
        reserved: Dict[int, TraceEvent] = {}

        for event in trace:
            kind = event.kind
            if kind is TraceKind.SPAWN and event['vehicle'] == 'agv':
                self._enter_node(event.tick, event['id'], event['node'], agv_node)
            elif kind is TraceKind.DEPART:
                agv_node[event['agv']] = None
            elif kind is TraceKind.NODE:
                self._enter_node(event.tick, event['agv'], event['node'], agv_node)
            elif kind is TraceKind.APPROVAL and event.get('request') == 'return':
                reserved[event['uav']] = event
            elif kind is TraceKind.LANDING:
                self._check_reserved_agv(event, reserved.pop(event['uav'], None))
                at = agv_node.get(event['agv'])
                if at != event['landing_point']:
                    self._flag('landing-reservation', event.tick,
                               f"UAV {event['uav']} landed at {event['landing_point']} but AGV "
                               f"{event['agv']} was at {at}",
                               uav=event['uav'], agv=event['agv'], landing_point=event['landing_point'])
            elif kind is TraceKind.POSE:
                moved_uavs = self._update(event.tick, event.get('uavs', {}), uav_pose, uav_step, 'uav')
                moved_agvs = self._update(event.tick, event.get('agvs', {}), agv_pose, agv_step, 'agv')
                if moved_uavs:
                    close_uavs = self._separation(event.tick, uav_pose, uav_min, close_uavs, 'uav')
                if moved_agvs:
                    close_agvs = self._separation(event.tick, agv_pose, agv_min, close_agvs, 'agv')

    def _check_reserved_agv(self, landing: TraceEvent, approval: Optional[TraceEvent]):
        if approval is None:
            self._flag('landing-reservation', landing.tick,
                       f"UAV {landing['uav']} landed without a return approval",
                       kind='unapproved-landing', uav=landing['uav'], agv=landing['agv'])
        elif (approval.get('agv'), approval.get('landing_point')) != (landing['agv'], landing['landing_point']):
            self._flag('landing-reservation', landing.tick,
                       f"UAV {landing['uav']} landed on AGV {landing['agv']} at {landing['landing_point']} "
                       f"but was approved for AGV {approval.get('agv')} at {approval.get('landing_point')}",
                       kind='landing-agv-mismatch', uav=landing['uav'], agv=landing['agv'],
                       reserved_agv=approval.get('agv'))

    def _enter_node(self, tick: int, agv: int, node: int, agv_node: Dict[int, Optional[int]]):
        for other, at in agv_node.items():
            if other != agv and at == node:
                self._flag('node-occupancy', tick, f"AGVs {other} and {agv} both at node {node}",
                           agvs=sorted((other, agv)), node=node)
        agv_node[agv] = node

    def _update(self, tick: int, poses: Dict[str, List[float]], known: Dict[int, Tuple[int, np.ndarray]],
                max_step: float, vehicle: str) -> bool:
        for key, pose in poses.items():
            vid = int(key)
            point = np.asarray(pose, dtype=float)
            previous = known.get(vid)
            if previous is not None and self._bounded(vehicle, previous[1], point):
                ticks = tick - previous[0]
                moved = float(np.linalg.norm(point - previous[1]))
                if moved > max_step * ticks + self.slack:
                    self._flag('motion-bounds', tick,
                               f"{vehicle.upper()} {vid} moved {moved:.3f} m in {ticks} tick(s)",
                               vehicle=vehicle, id=vid, moved_m=round(moved, 4), ticks=ticks)
            known[vid] = (tick, point)
        return bool(poses)

    @staticmethod
    def _bounded(vehicle: str, before: np.ndarray, after: np.ndarray) -> bool:
        # UAVs are moved by hand between workbench, AGV and parking ring
        if vehicle == 'agv':
            return True
        return before[2] > 0 and after[2] > 0

    def _separation(self, tick: int, poses: Dict[int, Tuple[int, np.ndarray]], min_m: float,
                    close_before: Set[Tuple[int, int]], vehicle: str) -> Set[Tuple[int, int]]:
        """Flag each pair once when it first comes closer than ``min_m``"""
        ids = sorted(poses)
        if len(ids) < 2:
            return set()
        pts = np.array([poses[i][1] for i in ids])
        rows, cols = np.triu_indices(len(ids), 1)
        dist = np.linalg.norm(pts[rows] - pts[cols], axis=1)
        close = dist < min_m - self.slack
        if vehicle == 'uav':
            airborne = pts[:, 2] > 0
            close &= airborne[rows] | airborne[cols]
        now = set()
        for k in np.flatnonzero(close):
            pair = (ids[rows[k]], ids[cols[k]])
            now.add(pair)
            if pair not in close_before:
                self._flag(f'{vehicle}-distance', tick,
                           f"{vehicle.upper()}s {pair[0]} and {pair[1]} are {dist[k]:.2f} m apart (min {min_m} m)",
                           ids=list(pair), distance=round(float(dist[k]), 4))
        return now


def verify_trace(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Parse and audit a trace file

    Raises:
        TraceFormatError: The file is malformed or truncated
    """
    trace = EventTrace.read_jsonl(path)
    result = TraceVerifier().analyze(trace)
    logger.info("verified %s: %d violation(s)", path, len(result['violations']))
    return result


def format_report(result: Dict[str, Any], limit: int = 20) -> str:
    """Human-readable summary of a verification result"""
    lines = []
    for name, ok in result['checks'].items():
        lines.append(f"  {'ok  ' if ok else 'FAIL'} {name}")
    shown = result['violations'][:limit]
    for v in shown:
        lines.append(f"  tick {v['tick']}: [{v['type']}] {v['message']}")
    hidden = len(result['violations']) - len(shown)
    if hidden > 0:
        lines.append(f"  ... {hidden} more")
    return '\n'.join(lines)
