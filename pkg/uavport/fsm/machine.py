"""
Table-driven finite state machines

A machine is a list of edges. Each edge names its source state, an
optional command trigger, a guard over the condition predicates, the
destination state and the effects the engine must carry out. Stepping
is a pure function of (state, command, conditions).
"""

import dataclasses
import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Type

import networkx as nx


class Effect(Enum):
    """Side effects requested by a transition"""
    START_FLIGHT = 'start-flight'
    DROP_CARGO = 'drop-cargo'
    TAKE_CARGO = 'take-cargo'
    MOUNT_UAV = 'mount-uav'
    UNMOUNT_UAV = 'unmount-uav'
    BEGIN_LOAD = 'begin-service(load)'
    BEGIN_SWAP = 'begin-service(swap)'
    REJECTED = 'rejected'


@dataclass(frozen=True)
class Edge:
    """One transition of a machine"""
    src: Enum
    trigger: Optional[Enum]
    guard: Tuple[Tuple[str, bool], ...]
    dst: Enum
    effects: Tuple[Effect, ...] = ()

    def admits(self, cond) -> bool:
        return all(getattr(cond, name) is value for name, value in self.guard)


@dataclass(frozen=True)
class StepResult:
    """Outcome of one machine step"""
    state: Enum
    effects: Tuple[Effect, ...]
    edge: Optional[Edge]

    @property
    def rejected(self) -> bool:
        return Effect.REJECTED in self.effects


class StateMachine:
    """
    A deterministic, total state machine over finite domains

    Commands are tried against the edges of the current state in table
    order; an unmatched command leaves the state unchanged and yields a
    rejection. Without a command the first admitted condition edge fires.
    """

    def __init__(self, name: str, states: Type[Enum], commands: Type[Enum], conditions: type,
                 labels: Mapping[str, str], edges: Sequence[Edge]):
        self.name = name
        self.states = states
        self.commands = commands
        self.conditions = conditions
        self.labels = dict(labels)
        self.edges = tuple(edges)
        self._by_state: Dict[Enum, List[Edge]] = {s: [] for s in states}
        for edge in self.edges:
            self._by_state[edge.src].append(edge)

    def step(self, state: Enum, cmd: Optional[Enum], cond) -> StepResult:
        """
        Advance one tick

        Args:
            state: Current state
            cmd: Command consumed this tick, if any
            cond: Freshly evaluated condition predicates

        Returns:
            StepResult with the successor state and requested effects
        """
        candidates = self._by_state[state]
        if cmd is not None:
            for edge in candidates:
                if edge.trigger is cmd and edge.admits(cond):
                    return StepResult(edge.dst, edge.effects, edge)
            return StepResult(state, (Effect.REJECTED,), None)
        for edge in candidates:
            if edge.trigger is None and edge.admits(cond):
                return StepResult(edge.dst, edge.effects, edge)
        return StepResult(state, (), None)

    def trigger_label(self, edge: Edge) -> str:
        """Command name, or the guard in predicate notation for condition edges"""
        if edge.trigger is not None:
            return edge.trigger.value
        return '∧'.join(
            self.labels[name] if value else f"¬{self.labels[name]}" for name, value in edge.guard
        )

    def legal_transitions(self) -> Set[Tuple[str, str, str]]:
        """Every (state, trigger, state) triple the machine can take"""
        return {(e.src.value, self.trigger_label(e), e.dst.value) for e in self.edges}

    def all_conditions(self) -> Iterator:
        """Every valid condition vector"""
        names = [f.name for f in dataclasses.fields(self.conditions)]
        for values in itertools.product((False, True), repeat=len(names)):
            try:
                yield self.conditions(**dict(zip(names, values)))
            except ValueError:
                continue

    def all_inputs(self) -> Iterator[Tuple[Enum, Optional[Enum], object]]:
        """The whole (state, command, condition) input domain"""
        conditions = list(self.all_conditions())
        for state in self.states:
            for cmd in [None, *self.commands]:
                for cond in conditions:
                    yield state, cmd, cond

    def to_graph(self) -> nx.MultiDiGraph:
        graph = nx.MultiDiGraph(name=self.name)
        for state in self.states:
            graph.add_node(state.value)
        for edge in self.edges:
            graph.add_edge(
                edge.src.value,
                edge.dst.value,
                trigger=self.trigger_label(edge),
                kind='command' if edge.trigger is not None else 'condition',
                effects=','.join(e.value for e in edge.effects),
            )
        return graph

    def __repr__(self):
        return f"StateMachine({self.name}, {len(self.states)} states, {len(self.edges)} edges)"
