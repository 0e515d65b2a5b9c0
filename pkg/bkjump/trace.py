# bkjump/trace.py
"""
Traversal events recorded by the engine, their line-oriented file format,
statistics, projection onto user predicates and event-by-event comparison.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, fields
from pathlib import Path
from typing import IO, Iterable, Mapping, NamedTuple, Protocol, Sequence

from . import constants
from .exceptions import PrologSyntaxError, TraceFormatError, TraceWriteError
from .terms import Compound, Int, PredicateIndicator, Term, is_variant
from .writer import write_term


class TraceKind(enum.Enum):
    CALL = "Call"
    EXIT = "Exit"
    REDO = "Redo"
    FAIL = "Fail"
    CLAUSE_TRY = "ClauseTry"
    THROW = "Throw"
    CATCH = "Catch"
    BACKJUMP = "Backjump"


# Kinds that describe the port of a procedure box
PORT_KINDS = frozenset({TraceKind.CALL, TraceKind.EXIT, TraceKind.REDO, TraceKind.FAIL, TraceKind.CLAUSE_TRY})


@dataclass(frozen=True, slots=True)
class TraceEvent:
    """
    One engine event.

    `node` is set for user-predicate events and Backjump (the target);
    `clause_index` (1-based) only for ClauseTry; `ball` only for Throw and
    Catch. `step` is the 1-based serial of the event within its run.
    """
    step: int
    kind: TraceKind
    pred: PredicateIndicator | None
    node: int | None = None
    clause_index: int | None = None
    ball: Term | None = None
    depth: int = 0


@dataclass(slots=True)
class TraceStats:
    calls: int = 0
    redos: int = 0
    fails: int = 0
    clause_tries: int = 0
    throws: int = 0
    catches: int = 0
    backjumps: int = 0
    max_depth: int = 0

    def add(self, event: TraceEvent):
        kind = event.kind
        if kind is TraceKind.CALL:
            self.calls += 1
        elif kind is TraceKind.REDO:
            self.redos += 1
        elif kind is TraceKind.FAIL:
            self.fails += 1
        elif kind is TraceKind.CLAUSE_TRY:
            self.clause_tries += 1
        elif kind is TraceKind.THROW:
            self.throws += 1
        elif kind is TraceKind.CATCH:
            self.catches += 1
        elif kind is TraceKind.BACKJUMP:
            self.backjumps += 1
        if event.depth > self.max_depth:
            self.max_depth = event.depth

    def as_dict(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# --- Sinks ---

class TraceSink(Protocol):
    def record(self, event: TraceEvent) -> None: ...


class ListSink:
    """Keeps every event in memory."""

    def __init__(self):
        self.events: list[TraceEvent] = []

    def record(self, event: TraceEvent):
        self.events.append(event)

    def __len__(self):
        return len(self.events)


class StatsSink:
    """Counts events without storing them."""

    def __init__(self):
        self.stats = TraceStats()

    def record(self, event: TraceEvent):
        self.stats.add(event)


class FileSink:
    """
    Streams events to a trace file, header first.

    Usable as a context manager. A stream passed in stays open on close.
    """

    def __init__(self, target: str | Path | IO[str]):
        if isinstance(target, (str, Path)):
            self._stream = open(target, "w", encoding="utf-8", newline="\n")
            self._owns_stream = True
        else:
            self._stream = target
            self._owns_stream = False
        self._stream.write(constants.TRACE_HEADER + "\n")

    def record(self, event: TraceEvent):
        self._stream.write(format_event(event) + "\n")

    def close(self):
        if self._owns_stream:
            self._stream.close()
        else:
            self._stream.flush()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class TeeSink:
    """Forwards each event to several sinks."""

    def __init__(self, *sinks: TraceSink):
        self.sinks = sinks

    def record(self, event: TraceEvent):
        for sink in self.sinks:
            sink.record(event)


def record(sink: TraceSink, event: TraceEvent):
    """
    Appends one event to a sink.

    Raises:
        TraceWriteError: if the sink fails to store the event.
    """
    try:
        sink.record(event)
    except OSError as e:
        raise TraceWriteError(f"Cannot record trace event {event.step}: {e}") from e


# --- File format ---

def _field(value) -> str:
    return constants.TRACE_EMPTY_FIELD if value is None else str(value)


def format_event(event: TraceEvent) -> str:
    """One tab-separated line: step, kind, pred, node, clause, ball, depth."""
    ball = write_term(event.ball) if event.ball is not None else None
    return "\t".join((
        str(event.step),
        event.kind.value,
        _field(event.pred),
        _field(event.node),
        _field(event.clause_index),
        _field(ball),
        str(event.depth),
    ))


def parse_event(line: str, line_number: int = 0) -> TraceEvent:
    from .reader import parse_term  # reader is only needed when loading traces

    parts = line.rstrip("\n").split("\t")
    if len(parts) != 7:
        raise TraceFormatError(f"line {line_number}: expected 7 fields, found {len(parts)}")
    step, kind, pred, node, clause, ball, depth = parts
    empty = constants.TRACE_EMPTY_FIELD
    try:
        return TraceEvent(
            step=int(step),
            kind=TraceKind(kind),
            pred=None if pred == empty else PredicateIndicator.parse(pred),
            node=None if node == empty else int(node),
            clause_index=None if clause == empty else int(clause),
            ball=None if ball == empty else parse_term(ball),
            depth=int(depth),
        )
    except (ValueError, PrologSyntaxError) as e:
        raise TraceFormatError(f"line {line_number}: {e}") from e


def write_trace(events: Iterable[TraceEvent], path: str | Path):
    """Writes a complete trace file."""
    with FileSink(path) as sink:
        for event in events:
            sink.record(event)


def read_trace(source: str | Path | Iterable[str]) -> list[TraceEvent]:
    """
    Loads a trace file (or an iterable of its lines).

    Raises:
        TraceFormatError: on a missing or wrong header, or a malformed line.
    """
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
    else:
        lines = [line.rstrip("\n") for line in source]
    if not lines or lines[0] != constants.TRACE_HEADER:
        raise TraceFormatError(f"missing '{constants.TRACE_HEADER}' header")
    return [parse_event(line, number) for number, line in enumerate(lines[1:], start=2) if line]


# --- Analysis ---

def is_user_predicate(pred: PredicateIndicator | None) -> bool:
    if pred is None:
        return False
    if tuple(pred) in constants.RESERVED_INDICATORS:
        return False
    return not pred.name.startswith("$")


def project_user(trace: Iterable[TraceEvent]) -> list[TraceEvent]:
    """
    Keeps the port events of user predicates only.

    Built-ins (btid/2, catch/3, throw/1, '='/2 and the rest), control
    constructs, '$' predicates and the Throw/Catch/Backjump bookkeeping are
    removed, which makes native-backjump runs and transformed runs comparable.
    """
    return [e for e in trace if e.kind in PORT_KINDS and is_user_predicate(e.pred)]


def erase_alternatives(trace: Iterable[TraceEvent], indicators: Iterable[PredicateIndicator]) -> list[TraceEvent]:
    """Drops ClauseTry and Redo events of the given predicates."""
    hidden = {PredicateIndicator(*pi) for pi in indicators}
    return [
        e for e in trace
        if not (e.kind in (TraceKind.CLAUSE_TRY, TraceKind.REDO) and e.pred in hidden)
    ]


def clause_tries(trace: Iterable[TraceEvent]) -> list[TraceEvent]:
    return [e for e in trace if e.kind is TraceKind.CLAUSE_TRY]


def stats(trace: Iterable[TraceEvent]) -> TraceStats:
    result = TraceStats()
    for event in trace:
        result.add(event)
    return result


class Verdict(NamedTuple):
    """Outcome of compare; `divergence` holds the steps of the first differing events."""
    equal: bool
    divergence: tuple[int | None, int | None] | None = None


def _relabel(trace: Sequence[TraceEvent]) -> list[int | None]:
    labels: dict[int, int] = {}
    out = []
    for event in trace:
        if event.node is None:
            out.append(None)
        else:
            out.append(labels.setdefault(event.node, len(labels)))
    return out


def _same_event(a: TraceEvent, b: TraceEvent) -> bool:
    if (a.kind, a.pred, a.clause_index) != (b.kind, b.pred, b.clause_index):
        return False
    if a.ball is None or b.ball is None:
        return a.ball is b.ball
    return is_variant(a.ball, b.ball)


def compare(t1: Sequence[TraceEvent], t2: Sequence[TraceEvent]) -> Verdict:
    """
    Compares two (projected) traces event by event.

    Node numbers are compared up to relabeling by first occurrence, step
    numbers and depths are ignored.
    """
    labels1, labels2 = _relabel(t1), _relabel(t2)
    for i, (a, b) in enumerate(zip(t1, t2)):
        if labels1[i] != labels2[i] or not _same_event(a, b):
            return Verdict(False, (a.step, b.step))
    if len(t1) != len(t2):
        shorter = min(len(t1), len(t2))
        step1 = t1[shorter].step if shorter < len(t1) else None
        step2 = t2[shorter].step if shorter < len(t2) else None
        return Verdict(False, (step1, step2))
    return Verdict(True)


def check_well_nested(trace: Iterable[TraceEvent]):
    """
    Validates the port discipline of every user node.

    A node starts with Call, tries clauses in increasing order, may Exit,
    is re-entered by Redo once a clause was tried and ends with Fail. Nodes
    left open are allowed (truncated by a throw, backjump, cut or limit), but no
    event may follow a node's Fail and a Backjump may only target a live node.

    Raises:
        TraceFormatError: at the first violation.
    """
    state: dict[int, str] = {}
    last_clause: dict[int, int] = {}
    last_step = 0
    for event in trace:
        if event.step <= last_step:
            raise TraceFormatError(f"step {event.step}: steps must increase (previous {last_step})")
        last_step = event.step
        node = event.node
        if node is None:
            continue
        kind = event.kind
        current = state.get(node)
        if kind is TraceKind.BACKJUMP:
            if current in (None, "failed"):
                raise TraceFormatError(f"step {event.step}: backjump to node {node} which is not live")
            continue
        if kind is TraceKind.CALL:
            if current is not None:
                raise TraceFormatError(f"step {event.step}: node {node} called twice")
            state[node] = "called"
            last_clause[node] = 0
            continue
        if current is None:
            raise TraceFormatError(f"step {event.step}: {kind.value} for node {node} before its Call")
        if current == "failed":
            raise TraceFormatError(f"step {event.step}: {kind.value} for node {node} after its Fail")
        if kind is TraceKind.CLAUSE_TRY:
            if current == "exited":
                raise TraceFormatError(f"step {event.step}: ClauseTry for node {node} without Redo")
            if event.clause_index is None or event.clause_index <= last_clause[node]:
                raise TraceFormatError(f"step {event.step}: clause order broken for node {node}")
            last_clause[node] = event.clause_index
            state[node] = "trying"
        elif kind is TraceKind.EXIT:
            if current != "trying" and current != "exited":
                raise TraceFormatError(f"step {event.step}: Exit for node {node} without a clause")
            state[node] = "exited"
        elif kind is TraceKind.REDO:
            if current == "called":
                raise TraceFormatError(f"step {event.step}: Redo for node {node} before any clause try")
            state[node] = "called"
        elif kind is TraceKind.FAIL:
            state[node] = "failed"


# --- Answers ---

def _is_identifier(term: Term) -> bool:
    return (
        isinstance(term, Compound)
        and ((term.functor == constants.NODE_FUNCTOR and len(term.args) == 1)
             or (term.functor == constants.BTID_FUNCTOR and len(term.args) == 2))
        and isinstance(term.args[0], Int)
    )


def erase_identifiers(answers: Iterable[Mapping[str, Term]]) -> list[dict[str, Term]]:
    """
    Replaces backjump identifiers ('$node'(N) and '$bj'(N, T)) in answers by
    '$id'(K), K numbering identifiers by first occurrence across the sequence.
    """
    labels: dict[tuple[str, Term], int] = {}

    def erase(term: Term) -> Term:
        if _is_identifier(term):
            key = term.args[0]
            return Compound("$id", (Int(labels.setdefault((term.functor, key), len(labels))),))
        if isinstance(term, Compound):
            return Compound(term.functor, tuple(erase(a) for a in term.args))
        return term

    return [{name: erase(value) for name, value in answer.items()} for answer in answers]


def same_answers(first: Sequence[Mapping[str, Term]], second: Sequence[Mapping[str, Term]]) -> bool:
    """True when both answer sequences agree pairwise up to variable renaming."""
    if len(first) != len(second):
        return False
    for a, b in zip(first, second):
        if list(a) != list(b):
            return False
        names = list(a)
        if not names:
            continue
        left = Compound("answer", tuple(a[n] for n in names))
        right = Compound("answer", tuple(b[n] for n in names))
        if not is_variant(left, right):
            return False
    return True


__all__ = [
    "TraceKind", "TraceEvent", "TraceStats", "TraceSink", "ListSink", "StatsSink", "FileSink", "TeeSink",
    "record", "format_event", "parse_event", "write_trace", "read_trace", "project_user",
    "erase_alternatives", "clause_tries", "stats", "Verdict", "compare", "check_well_nested",
    "erase_identifiers", "same_answers", "is_user_predicate",
]
