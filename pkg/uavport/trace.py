"""
Append-only event trace

Every FSM transition, command, scheduling decision, service, arrival,
landing, violation and pose change is one TraceEvent. Traces serialise
to line-delimited JSON with sorted keys so identical runs produce
byte-identical files.
"""

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Union

import numpy as np


class TraceFormatError(ValueError):
    """Raised for a malformed or truncated trace file"""
    pass


class TraceKind(Enum):
    RUN_START = 'run-start'
    RUN_END = 'run-end'
    SPAWN = 'spawn'
    STATE_TRANSITION = 'state-transition'
    COMMAND = 'command'
    REJECTION = 'rejection'
    DEAD_LETTER = 'dead-letter'
    APPROVAL = 'approval'
    DEFERRAL = 'deferral'
    BOOKING = 'booking'
    SERVICE_START = 'service-start'
    SERVICE_END = 'service-end'
    ARRIVAL = 'arrival'
    LANDING = 'landing'
    DELIVERED = 'delivered'
    DEPART = 'depart'
    NODE = 'node'
    POSE = 'pose'
    VIOLATION = 'violation'
    ANOMALY = 'anomaly'


def plain(value: Any) -> Any:
    """Convert enums, tuples and numpy scalars into JSON-ready values"""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Mapping):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


@dataclass(frozen=True)
class TraceEvent:
    """One trace line"""
    tick: int
    kind: TraceKind
    payload: Mapping[str, Any]

    def to_json(self) -> str:
        record = dict(self.payload)
        record['tick'] = self.tick
        record['kind'] = self.kind.value
        return json.dumps(record, sort_keys=True, separators=(',', ':'))

    @classmethod
    def from_json(cls, line: str) -> 'TraceEvent':
        record = json.loads(line)
        if not isinstance(record, dict):
            raise ValueError("trace line is not an object")
        tick = record.pop('tick')
        kind = TraceKind(record.pop('kind'))
        if not isinstance(tick, int) or tick < 0:
            raise ValueError(f"bad tick {tick!r}")
        return cls(tick, kind, record)

    def __getitem__(self, key):
        return self.payload[key]

    def get(self, key, default=None):
        return self.payload.get(key, default)


class EventTrace:
    """
    Append-only, tick-ordered event log

    Payloads are normalised to plain JSON values on record.
    """

    def __init__(self, events: Optional[List[TraceEvent]] = None):
        self._events: List[TraceEvent] = list(events or [])

    def record(self, tick: int, kind: TraceKind, **payload) -> TraceEvent:
        if self._events and tick < self._events[-1].tick:
            raise ValueError(f"trace ticks must not decrease ({tick} < {self._events[-1].tick})")
        event = TraceEvent(tick, kind, plain(payload))
        self._events.append(event)
        return event

    @property
    def events(self) -> List[TraceEvent]:
        return list(self._events)

    def of_kind(self, *kinds: TraceKind) -> List[TraceEvent]:
        return [e for e in self._events if e.kind in kinds]

    def count(self, kind: TraceKind) -> int:
        return sum(1 for e in self._events if e.kind is kind)

    @property
    def last_tick(self) -> int:
        return self._events[-1].tick if self._events else 0

    def __len__(self):
        return len(self._events)

    def __iter__(self) -> Iterator[TraceEvent]:
        return iter(self._events)

    def lines(self) -> Iterator[str]:
        for event in self._events:
            yield event.to_json()

    def write_jsonl(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        with path.open('w') as fh:
            for line in self.lines():
                fh.write(line + '\n')
        return path

    @classmethod
    def read_jsonl(cls, path: Union[str, Path], require_complete: bool = True) -> 'EventTrace':
        """
        Parse a trace file

        Args:
            path: File written by write_jsonl
            require_complete: Demand a leading run-start and a trailing run-end

        Returns:
            The parsed trace
        """
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise TraceFormatError(f"cannot read trace {path}: {e}") from e
        events = []
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                events.append(TraceEvent.from_json(line))
            except (ValueError, KeyError) as e:
                raise TraceFormatError(f"{path}:{number}: malformed trace line ({e})") from e
        trace = cls()
        for event in events:
            if trace._events and event.tick < trace._events[-1].tick:
                raise TraceFormatError(f"{path}: ticks decrease at tick {event.tick}")
            trace._events.append(event)
        if require_complete:
            if not events or events[0].kind is not TraceKind.RUN_START:
                raise TraceFormatError(f"{path}: trace does not start with run-start")
            if events[-1].kind is not TraceKind.RUN_END:
                raise TraceFormatError(f"{path}: trace is truncated (no run-end record)")
        return trace

    def summary(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for event in self._events:
            counts[event.kind.value] = counts.get(event.kind.value, 0) + 1
        return counts
