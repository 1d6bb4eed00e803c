"""
In-process message bus

Status topics keep a bounded history plus the newest message per sender.
Command topics hold at most one unconsumed command per target; a newer
command replaces the older one and the replacement is traced.
"""

import logging
from collections import deque
from typing import Deque, Dict, List, Tuple

from ..trace import EventTrace, TraceKind
from .messages import CommandMsg, StatusMsg, VehicleKind

logger = logging.getLogger(__name__)

STATUS_TOPICS = {VehicleKind.UAV: 'uav/status', VehicleKind.AGV: 'agv/status'}
COMMAND_TOPICS = {VehicleKind.UAV: 'uav/cmd', VehicleKind.AGV: 'agv/cmd'}


class MessageBus:
    """Publish/subscribe bus shared by the master and management nodes"""

    def __init__(self, trace: EventTrace, history: int = 256):
        self.trace = trace
        self._history: Dict[str, Deque[StatusMsg]] = {t: deque(maxlen=history) for t in STATUS_TOPICS.values()}
        self._latest: Dict[Tuple[VehicleKind, int], StatusMsg] = {}
        self._commands: Dict[str, Dict[int, CommandMsg]] = {t: {} for t in COMMAND_TOPICS.values()}

    def publish_status(self, msg: StatusMsg):
        key = (msg.kind, msg.sender)
        previous = self._latest.get(key)
        if previous is not None and msg.tick < previous.tick:
            raise ValueError(f"status tick went backwards for {msg.kind.value} {msg.sender}")
        self._history[STATUS_TOPICS[msg.kind]].append(msg)
        self._latest[key] = msg

    def latest_statuses(self) -> List[StatusMsg]:
        return [self._latest[k] for k in sorted(self._latest, key=lambda k: (k[0].value, k[1]))]

    def history(self, kind: VehicleKind) -> List[StatusMsg]:
        return list(self._history[STATUS_TOPICS[kind]])

    def send_command(self, msg: CommandMsg, tick: int):
        queue = self._commands[COMMAND_TOPICS[msg.kind]]
        replaced = queue.get(msg.target)
        record = msg.to_record()
        if replaced is not None:
            record['replaced'] = replaced.payload.value
            logger.warning("command %s for %s %d replaced unconsumed %s",
                           msg.payload.value, msg.kind.value, msg.target, replaced.payload.value)
        queue[msg.target] = msg
        self.trace.record(tick, TraceKind.COMMAND, **record)

    def drain_commands(self, kind: VehicleKind) -> List[CommandMsg]:
        """Take every queued command for one fleet, in ascending target order"""
        queue = self._commands[COMMAND_TOPICS[kind]]
        drained = [queue[t] for t in sorted(queue)]
        queue.clear()
        return drained

    def pending(self, kind: VehicleKind) -> int:
        return len(self._commands[COMMAND_TOPICS[kind]])
