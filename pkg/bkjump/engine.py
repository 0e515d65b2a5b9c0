# bkjump/engine.py
"""
LD-resolution engine: leftmost goal selection, textual clause order,
depth-first search over an explicit choice-point stack, ISO-style
catch/throw and, in native-backjump mode, the parent_choice/1 and
backjump/1 primitives.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

from . import constants
from .builtins import BUILTINS, instantiation_error, system_error, type_error
from .exceptions import (
    CyclicTermError, EngineError, InvalidArgumentError, MarkerLeakError,
    PrologThrow, UnknownPredicateError,
)
from .terms import Atom, Compound, Int, PredicateIndicator, Program, Term, Var, indicator_of, term_vars
from .trace import TraceEvent, TraceKind, TraceSink, record
from .unify import Bindings, TrailMark, copy_term, rename_clause, resolve, unify
from .writer import write_term

logger = logging.getLogger(__name__)

CATCH = PredicateIndicator("catch", 3)
THROW = PredicateIndicator("throw", 1)
CALL = PredicateIndicator("call", 1)
PARENT_CHOICE = PredicateIndicator("parent_choice", 1)
BACKJUMP = PredicateIndicator("backjump", 1)


class EngineMode(enum.Enum):
    PLAIN = "plain"
    NATIVE_BACKJUMP = "backjump"


class ExitStatus(enum.Enum):
    EXHAUSTED = "exhausted"
    ANSWER_LIMIT = "answer-limit"
    STEP_LIMIT = "step-limit"
    UNCAUGHT = "uncaught-exception"
    ERROR = "error"


@dataclass(frozen=True)
class Limits:
    """Resource limits of one run; max_answers None means all answers."""
    max_steps: int = constants.DEFAULT_MAX_STEPS
    max_answers: int | None = None

    def __post_init__(self):
        if self.max_steps < 0:
            raise InvalidArgumentError(f"max_steps must be >= 0, got {self.max_steps}")
        if self.max_answers is not None and self.max_answers < 1:
            raise InvalidArgumentError(f"max_answers must be >= 1, got {self.max_answers}")


class Answer(Mapping[str, Term]):
    """Query variable name -> fully dereferenced term, in query order."""

    __slots__ = ("_items",)

    def __init__(self, items: tuple[tuple[str, Term], ...]):
        self._items = items

    def __getitem__(self, name: str) -> Term:
        for key, value in self._items:
            if key == name:
                return value
        raise KeyError(name)

    def __iter__(self) -> Iterator[str]:
        return (key for key, _ in self._items)

    def __len__(self):
        return len(self._items)

    def format_lines(self) -> list[str]:
        return [f"{name} = {write_term(value, priority=constants.ARG_PRIORITY)}" for name, value in self._items]

    def __repr__(self):
        return "Answer(" + ", ".join(self.format_lines()) + ")"


@dataclass
class SolveResult:
    answers: list[Answer]
    status: ExitStatus
    ball: Term | None = None
    message: str | None = None
    steps: int = 0

    @property
    def succeeded(self) -> bool:
        return bool(self.answers)

    def describe(self) -> str:
        """Status line as printed by the command line driver."""
        if self.status is ExitStatus.UNCAUGHT:
            return f"{self.status.value}({write_term(self.ball)})"
        if self.status is ExitStatus.ERROR and self.message:
            return f"{self.status.value}: {self.message}"
        return self.status.value


# --- Continuations ---

@dataclass(frozen=True, slots=True)
class ExitMarker:
    """Reached when a call has succeeded; node is None for built-ins."""
    pred: PredicateIndicator
    node: int | None


@dataclass(frozen=True, slots=True)
class IteCommit:
    """Condition of an if-then-else succeeded: cut the stack back to height."""
    height: int


@dataclass(frozen=True, slots=True, eq=False)
class CatchFrame:
    catcher: Term
    recovery: Term
    trail_mark: TrailMark
    continuation: Frame | None
    choice_height: int
    ctx: int | None
    depth: int
    catches: int
    snapshot: dict | None


@dataclass(frozen=True, slots=True)
class CatchExit:
    """End of a catch/3 goal; while this is in the continuation the frame is armed."""
    frame: CatchFrame


Goal = Union[Term, ExitMarker, IteCommit, CatchExit]


@dataclass(frozen=True, slots=True)
class Frame:
    """
    One cell of a continuation (immutable linked list of pending goals).

    ctx is the node of the user call whose clause body the goal belongs
    to, depth the number of enclosing user calls, catches the number of
    enclosing catch frames.
    """
    goal: Goal
    ctx: int | None
    depth: int
    catches: int
    rest: Frame | None


# --- Choice points ---

@dataclass(slots=True, eq=False)
class ChoicePoint:
    """Clause alternatives of one user call; node is its backjump identifier."""
    node: int
    pred: PredicateIndicator
    goal: Term
    clauses: list
    next_index: int
    continuation: Frame | None
    trail_mark: TrailMark
    ctx: int | None
    depth: int
    catch_depth: int
    snapshot: dict | None


@dataclass(slots=True, eq=False)
class DisjunctionChoice:
    alternative: Frame
    trail_mark: TrailMark
    snapshot: dict | None


@dataclass(slots=True, eq=False)
class CatchChoice:
    """Sits under a catch/3 goal; backtracking through it closes the catch/3 box."""
    depth: int
    trail_mark: TrailMark
    snapshot: dict | None


_FAIL = object()


class _Exhausted(Exception):
    pass


class _StepLimit(Exception):
    pass


class _Uncaught(Exception):
    def __init__(self, ball: Term):
        self.ball = ball
        super().__init__(ball)


def node_term(node: int) -> Term:
    return Compound(constants.NODE_FUNCTOR, (Int(node),))


class Engine:
    """
    Solver for one program.

    An engine owns all mutable state of a run (bindings, stacks, node and
    identifier counters); separate engines share nothing and may run
    concurrently. Each call to `solve` starts from a clean state.

    With debug=True the variable store is snapshotted at every choice point
    and catch frame, and every undo is checked to restore it exactly.
    """

    def __init__(self, program: Program, mode: EngineMode = EngineMode.PLAIN, *,
                 occurs_check: bool = False, limits: Limits | None = None,
                 sink: TraceSink | None = None, debug: bool = False):
        self.program = program
        self.mode = EngineMode(mode)
        self.occurs_check = occurs_check
        self.limits = limits or Limits()
        self.sink = sink
        self.debug = debug
        self._reset()

    def _reset(self):
        self.bindings = Bindings(self.program.max_var_id() + 1)
        self.stack: list[Union[ChoicePoint, DisjunctionChoice, CatchChoice]] = []
        self.steps = 0
        self._events = 0
        self._nodes = 0
        self._btids = 0

    def next_btid(self) -> int:
        self._btids += 1
        return self._btids

    # --- events and bookkeeping ---

    def _emit(self, kind: TraceKind, pred: PredicateIndicator | None, depth: int,
              node: int | None = None, clause_index: int | None = None, ball: Term | None = None):
        if self.sink is None:
            return
        self._events += 1
        record(self.sink, TraceEvent(self._events, kind, pred, node, clause_index, ball, depth))

    def _count_step(self):
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise _StepLimit()

    def _snapshot(self) -> dict | None:
        return self.bindings.snapshot() if self.debug else None

    def _undo(self, mark: TrailMark, snapshot: dict | None):
        self.bindings.undo_to(mark)
        if snapshot is not None and self.bindings.store != snapshot:
            raise EngineError(f"Undo to trail mark {mark.position} did not restore the variable store")

    # --- running ---

    def solve(self, query: Term) -> SolveResult:
        """
        Runs query to completion or until a limit is hit.

        Never raises for problems of the run itself: unknown predicates,
        leaked markers, cyclic answers and sink failures become an error
        status, uncaught balls an uncaught-exception status.
        """
        self._reset()
        highest = max((v.id for v in term_vars(query)), default=-1)
        self.bindings.next_var = max(self.bindings.next_var, highest + 1)
        names: list[tuple[str, Var]] = []
        seen = set()
        for var in term_vars(query):
            if var.hint and not var.hint.startswith("_") and var.hint not in seen:
                seen.add(var.hint)
                names.append((var.hint, var))

        answers: list[Answer] = []
        status, ball, message = ExitStatus.EXHAUSTED, None, None
        frame: Frame | None | object = Frame(query, None, 0, 0, None)
        try:
            while True:
                if frame is None:
                    answers.append(Answer(tuple((name, resolve(var, self.bindings)) for name, var in names)))
                    if self.limits.max_answers is not None and len(answers) >= self.limits.max_answers:
                        status = ExitStatus.ANSWER_LIMIT
                        break
                    frame = self._backtrack()
                    continue
                if frame is _FAIL:
                    frame = self._backtrack()
                    continue
                try:
                    frame = self._step(frame)
                except PrologThrow as exc:
                    frame = self._throw(exc.ball, exc.culprit, frame)
        except _Exhausted:
            status = ExitStatus.EXHAUSTED
        except _StepLimit:
            status = ExitStatus.STEP_LIMIT
        except _Uncaught as exc:
            status, ball = ExitStatus.UNCAUGHT, exc.ball
        except (EngineError, CyclicTermError) as e:
            status, message = ExitStatus.ERROR, str(e)
            logger.debug("Run stopped with error: %s", e)
        return SolveResult(answers, status, ball, message, self.steps)

    def _step(self, frame: Frame):
        goal = frame.goal
        if isinstance(goal, ExitMarker):
            self._emit(TraceKind.EXIT, goal.pred, frame.depth, node=goal.node)
            return frame.rest
        if isinstance(goal, CatchExit):
            self._emit(TraceKind.EXIT, CATCH, frame.depth)
            return frame.rest
        if isinstance(goal, IteCommit):
            del self.stack[goal.height:]
            return frame.rest

        term = self.bindings.deref(goal)
        if isinstance(term, Var):
            raise PrologThrow(instantiation_error(CALL), CALL)
        if isinstance(term, Int):
            raise PrologThrow(type_error("callable", term, CALL), CALL)
        pred = indicator_of(term)
        args = term.args if isinstance(term, Compound) else ()

        if tuple(pred) in constants.CONTROL_CONSTRUCTS:
            return self._control(term, pred, args, frame)
        if tuple(pred) in constants.RESERVED_MARKERS:
            raise MarkerLeakError(str(pred))
        if tuple(pred) in constants.NATIVE_BACKJUMP_PREDICATES:
            if self.mode is not EngineMode.NATIVE_BACKJUMP:
                raise UnknownPredicateError(str(pred))
            return self._native(pred, args, frame)
        if pred == CATCH:
            return self._catch(args, frame)
        if pred == THROW:
            self._emit(TraceKind.CALL, pred, frame.depth)
            self._count_step()
            ball = self.bindings.deref(args[0])
            if isinstance(ball, Var):
                raise PrologThrow(instantiation_error(THROW), THROW)
            raise PrologThrow(ball, THROW)
        builtin = BUILTINS.get(tuple(pred))
        if builtin is not None:
            self._emit(TraceKind.CALL, pred, frame.depth)
            self._count_step()
            if builtin(self, args):
                self._emit(TraceKind.EXIT, pred, frame.depth)
                return frame.rest
            self._emit(TraceKind.FAIL, pred, frame.depth)
            return _FAIL
        if self.program.defines(pred):
            return self._call_user(term, pred, frame)
        raise UnknownPredicateError(str(pred))

    def _control(self, term: Compound, pred: PredicateIndicator, args, frame: Frame):
        ctx, depth, catches = frame.ctx, frame.depth, frame.catches
        if pred.name == constants.CONJUNCTION:
            second = Frame(args[1], ctx, depth, catches, frame.rest)
            return Frame(args[0], ctx, depth, catches, second)
        if pred.name == constants.DISJUNCTION:
            left = self.bindings.deref(args[0])
            if isinstance(left, Compound) and left.functor == constants.IF_THEN and len(left.args) == 2:
                return self._if_then_else(left.args[0], left.args[1], args[1], frame)
            alternative = Frame(args[1], ctx, depth, catches, frame.rest)
            self.stack.append(DisjunctionChoice(alternative, self.bindings.mark(), self._snapshot()))
            return Frame(args[0], ctx, depth, catches, frame.rest)
        # ( C -> T ) without an else branch
        return self._if_then_else(args[0], args[1], Atom(constants.FAIL), frame)

    def _if_then_else(self, cond: Term, then: Term, otherwise: Term, frame: Frame):
        ctx, depth, catches = frame.ctx, frame.depth, frame.catches
        height = len(self.stack)
        alternative = Frame(otherwise, ctx, depth, catches, frame.rest)
        self.stack.append(DisjunctionChoice(alternative, self.bindings.mark(), self._snapshot()))
        then_frame = Frame(then, ctx, depth, catches, frame.rest)
        commit = Frame(IteCommit(height), ctx, depth, catches, then_frame)
        return Frame(cond, ctx, depth, catches, commit)

    def _call_user(self, term: Term, pred: PredicateIndicator, frame: Frame):
        self._nodes += 1
        node = self._nodes
        self._emit(TraceKind.CALL, pred, frame.depth, node=node)
        self._count_step()
        choice = ChoicePoint(
            node=node, pred=pred, goal=term, clauses=self.program.procedure(pred), next_index=0,
            continuation=frame.rest, trail_mark=self.bindings.mark(), ctx=frame.ctx,
            depth=frame.depth, catch_depth=frame.catches, snapshot=self._snapshot(),
        )
        self.stack.append(choice)
        return self._try_clauses(choice)

    def _try_clauses(self, choice: ChoicePoint):
        """Tries the remaining clauses of choice (the top of the stack) in order."""
        bindings = self.bindings
        while choice.next_index < len(choice.clauses):
            index = choice.next_index
            choice.next_index += 1
            clause = choice.clauses[index]
            self._emit(TraceKind.CLAUSE_TRY, choice.pred, choice.depth, node=choice.node, clause_index=index + 1)
            variant = rename_clause(clause, bindings)
            if not unify(choice.goal, variant.head, bindings, self.occurs_check):
                continue
            exit_frame = Frame(ExitMarker(choice.pred, choice.node), choice.ctx, choice.depth,
                               choice.catch_depth, choice.continuation)
            if clause.body == Atom(constants.TRUE):
                return exit_frame
            return Frame(variant.body, choice.node, choice.depth + 1, choice.catch_depth, exit_frame)
        self.stack.pop()
        self._emit(TraceKind.FAIL, choice.pred, choice.depth, node=choice.node)
        return _FAIL

    def _backtrack(self) -> Frame:
        stack = self.stack
        while stack:
            top = stack[-1]
            self._undo(top.trail_mark, top.snapshot)
            if isinstance(top, ChoicePoint):
                if top.next_index < len(top.clauses):
                    self._emit(TraceKind.REDO, top.pred, top.depth, node=top.node)
                    self._count_step()
                    result = self._try_clauses(top)
                    if result is not _FAIL:
                        return result
                    continue
                stack.pop()
                self._emit(TraceKind.FAIL, top.pred, top.depth, node=top.node)
                continue
            stack.pop()
            if isinstance(top, DisjunctionChoice):
                return top.alternative
            self._emit(TraceKind.FAIL, CATCH, top.depth)
        raise _Exhausted()

    # --- exceptions ---

    def _catch(self, args, frame: Frame) -> Frame:
        goal, catcher, recovery = args
        self._emit(TraceKind.CALL, CATCH, frame.depth)
        self._count_step()
        mark = self.bindings.mark()
        snapshot = self._snapshot()
        self.stack.append(CatchChoice(frame.depth, mark, snapshot))
        catch_frame = CatchFrame(
            catcher=catcher, recovery=recovery, trail_mark=mark, continuation=frame.rest,
            choice_height=len(self.stack), ctx=frame.ctx, depth=frame.depth,
            catches=frame.catches, snapshot=snapshot,
        )
        exit_frame = Frame(CatchExit(catch_frame), frame.ctx, frame.depth, frame.catches, frame.rest)
        return Frame(goal, frame.ctx, frame.depth, frame.catches + 1, exit_frame)

    def _throw(self, ball: Term, culprit: PredicateIndicator | None, frame: Frame) -> Frame:
        """
        Unwinds to the innermost armed catch frame whose catcher unifies with
        a copy of the ball taken before any binding is undone.
        """
        ball = copy_term(ball, self.bindings)
        self._emit(TraceKind.THROW, culprit, frame.depth, ball=ball)
        cell = frame
        while cell is not None:
            goal = cell.goal
            if isinstance(goal, CatchExit):
                catch_frame = goal.frame
                self._undo(catch_frame.trail_mark, catch_frame.snapshot)
                if unify(ball, catch_frame.catcher, self.bindings, self.occurs_check):
                    del self.stack[catch_frame.choice_height:]
                    self._emit(TraceKind.CATCH, CATCH, catch_frame.depth, ball=ball)
                    exit_frame = Frame(ExitMarker(CATCH, None), catch_frame.ctx, catch_frame.depth,
                                       catch_frame.catches, catch_frame.continuation)
                    return Frame(catch_frame.recovery, catch_frame.ctx, catch_frame.depth,
                                 catch_frame.catches, exit_frame)
            cell = cell.rest
        self.stack.clear()
        raise _Uncaught(ball)

    # --- native backjumping ---

    def _native(self, pred: PredicateIndicator, args, frame: Frame):
        self._emit(TraceKind.CALL, pred, frame.depth)
        self._count_step()
        if pred == PARENT_CHOICE:
            if frame.ctx is None:
                raise PrologThrow(system_error("no_parent_choice", pred), pred)
            if unify(args[0], node_term(frame.ctx), self.bindings, self.occurs_check):
                self._emit(TraceKind.EXIT, pred, frame.depth)
                return frame.rest
            self._emit(TraceKind.FAIL, pred, frame.depth)
            return _FAIL

        target = self.bindings.deref(args[0])
        if isinstance(target, Var):
            raise PrologThrow(instantiation_error(pred), pred)
        node_id = self.bindings.deref(target.args[0]) if isinstance(target, Compound) else None
        if not (isinstance(target, Compound) and target.functor == constants.NODE_FUNCTOR
                and len(target.args) == 1 and isinstance(node_id, Int)):
            raise PrologThrow(type_error("backjump_target", copy_term(target, self.bindings), pred), pred)
        for position in range(len(self.stack) - 1, -1, -1):
            choice = self.stack[position]
            if isinstance(choice, ChoicePoint) and choice.node == node_id.value:
                break
        else:
            raise PrologThrow(system_error("stale_backjump_target", pred), pred)
        self._emit(TraceKind.BACKJUMP, choice.pred, choice.depth, node=choice.node)
        del self.stack[position + 1:]
        return _FAIL


def solve(program: Program, query: Term, mode: EngineMode = EngineMode.PLAIN, *,
          limits: Limits | None = None, sink: TraceSink | None = None,
          occurs_check: bool = False, debug: bool = False) -> SolveResult:
    """Runs query against program on a fresh engine."""
    engine = Engine(program, mode, occurs_check=occurs_check, limits=limits, sink=sink, debug=debug)
    return engine.solve(query)


__all__ = [
    "Engine", "EngineMode", "ExitStatus", "Limits", "Answer", "SolveResult", "ChoicePoint",
    "CatchFrame", "node_term", "solve",
]
