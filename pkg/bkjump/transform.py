# bkjump/transform.py
"""
Source-to-source transformations that emulate backjumping with catch/3
and throw/1 on an engine without native backjumping.

Annotations are ordinary goals with reserved names:
  '$my_id'(V)       in a clause of a target predicate, V names the
                    identifier of the call that selected this clause;
  '$catch_rest'(T)  top-level split point; the goals after it run inside
                    catch(..., T, fail). T = fresh asks for a btid/2 identifier.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

from . import constants
from .exceptions import InvalidArgumentError, TransformError
from .terms import (
    Atom, Clause, Compound, PredicateIndicator, Program, Term, Var, conjoin, conjuncts, iter_subterms,
    make_list, substitute, term_vars,
)
from .writer import format_program

logger = logging.getLogger(__name__)

FAIL = Atom(constants.FAIL)
TRUE = Atom(constants.TRUE)


class Approach(enum.Enum):
    A1 = "a1"
    A1A = "a1a"
    A2 = "a2"


@dataclass(frozen=True)
class TransformSpec:
    """Which transformation to apply and, for A1/A1a, to which predicates."""
    approach: Approach
    targets: frozenset[PredicateIndicator] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "approach", Approach(self.approach))
        targets = frozenset(
            PredicateIndicator.parse(t) if isinstance(t, str) else PredicateIndicator(*t) for t in self.targets
        )
        object.__setattr__(self, "targets", targets)
        if self.approach in (Approach.A1, Approach.A1A) and not self.targets:
            raise InvalidArgumentError(f"Approach {self.approach.value} needs at least one target predicate.")


class _VarSupply:
    """Fresh variables above every id used by the program."""

    def __init__(self, program: Program):
        self._next = program.max_var_id() + 1

    def new(self, hint: str) -> Var:
        var = Var(self._next, hint)
        self._next += 1
        return var

    def rename(self, clause: Clause) -> Clause:
        mapping = {v.id: self.new(v.hint) for v in term_vars(clause.as_term())}
        return Clause(substitute(clause.head, mapping), substitute(clause.body, mapping))


# --- Goal-level helpers ---

def _is_goal(term: Term, name: str, arity: int) -> bool:
    if arity == 0:
        return isinstance(term, Atom) and term.name == name
    return isinstance(term, Compound) and term.functor == name and len(term.args) == arity


def _map_goals(body: Term, fn: Callable[[Term], Term]) -> Term:
    """Rebuilds a body applying fn to every goal outside control constructs."""
    if isinstance(body, Compound) and len(body.args) == 2 and \
            body.functor in (constants.CONJUNCTION, constants.DISJUNCTION, constants.IF_THEN):
        return Compound(body.functor, (_map_goals(body.args[0], fn), _map_goals(body.args[1], fn)))
    if _is_goal(body, "catch", 3):
        goal, catcher, recovery = body.args
        return Compound("catch", (_map_goals(goal, fn), catcher, _map_goals(recovery, fn)))
    return fn(body)


def _iter_goals(body: Term) -> Iterator[Term]:
    found: list[Term] = []
    _map_goals(body, lambda g: found.append(g) or g)
    return iter(found)


def _simplify(body: Term) -> Term:
    """Drops `true` from conjunctions left behind by removed markers."""
    if isinstance(body, Compound) and body.functor == constants.CONJUNCTION and len(body.args) == 2:
        return conjoin(_simplify(g) for g in conjuncts(body))
    if isinstance(body, Compound) and len(body.args) == 2 and \
            body.functor in (constants.DISJUNCTION, constants.IF_THEN):
        return Compound(body.functor, (_simplify(body.args[0]), _simplify(body.args[1])))
    if _is_goal(body, "catch", 3):
        goal, catcher, recovery = body.args
        return Compound("catch", (_simplify(goal), catcher, _simplify(recovery)))
    return body


def _catch_fail(goal: Term, identifier: Term, recovery: Term = FAIL) -> Term:
    return Compound("catch", (goal, identifier, recovery))


def _btid(args: Iterable[Term], identifier: Term) -> Term:
    return Compound("btid", (make_list(args), identifier))


def check_not_transformed(program: Program):
    """
    Rejects programs that already carry transformation output.

    Raises:
        TransformError: when a btid/2 goal or a '$bj' term is present.
    """
    for number, clause in enumerate(program.clauses, start=1):
        for sub in iter_subterms(clause.as_term()):
            if (isinstance(sub, Compound) and sub.functor == constants.BTID_FUNCTOR) or \
                    (isinstance(sub, Atom) and sub.name == constants.BTID_FUNCTOR):
                raise TransformError(f"reserved '{constants.BTID_FUNCTOR}' functor detected; "
                                     "program looks already transformed", str(clause.indicator), number)
        for goal in _iter_goals(clause.body):
            if _is_goal(goal, "btid", 2):
                raise TransformError("btid/2 goal detected; program looks already transformed",
                                     str(clause.indicator), number)


def _clause_numbers(program: Program) -> dict[int, int]:
    """Program position -> 1-based clause number within its predicate."""
    numbers = {}
    for positions in program.index.values():
        for number, position in enumerate(positions, start=1):
            numbers[position] = number
    return numbers


def _take_my_id(clause: Clause, number: int) -> tuple[Term, Var | None]:
    """Removes the '$my_id'(V) marker from a body; returns (body, V)."""
    found: list[Term] = []

    def strip(goal: Term) -> Term:
        if _is_goal(goal, constants.MY_ID_MARKER, 1):
            found.append(goal.args[0])
            return TRUE
        return goal

    body = _map_goals(clause.body, strip)
    where = str(clause.indicator)
    if len(found) > 1:
        raise TransformError(f"'{constants.MY_ID_MARKER}'/1 appears {len(found)} times in one body", where, number)
    if not found:
        return clause.body, None
    var = found[0]
    if not isinstance(var, Var):
        raise TransformError(f"'{constants.MY_ID_MARKER}'/1 argument must be a variable", where, number)
    if any(v.id == var.id for v in term_vars(clause.head)):
        raise TransformError(f"'{constants.MY_ID_MARKER}'/1 variable must not occur in the head", where, number)
    return _simplify(body), var


def _backjump_to_throw(body: Term) -> Term:
    def rewrite(goal: Term) -> Term:
        if _is_goal(goal, "backjump", 1):
            return Compound("throw", goal.args)
        return goal
    return _map_goals(body, rewrite)


def _prepare_targets(program: Program, spec: TransformSpec):
    check_not_transformed(program)
    for target in sorted(spec.targets):
        if not program.defines(target):
            raise TransformError("target predicate is not defined", str(target))
    numbers = _clause_numbers(program)
    for position, clause in enumerate(program.clauses):
        if clause.indicator in spec.targets:
            continue
        for goal in _iter_goals(clause.body):
            if _is_goal(goal, constants.MY_ID_MARKER, 1):
                raise TransformError(f"'{constants.MY_ID_MARKER}'/1 outside a target predicate",
                                     str(clause.indicator), numbers[position])


def _warn_unmarked(program: Program, spec: TransformSpec):
    for target in sorted(spec.targets):
        marked = any(
            _is_goal(goal, constants.MY_ID_MARKER, 1)
            for clause in program.procedure(target) for goal in _iter_goals(clause.body)
        )
        if not marked:
            logger.warning("Target %s has no '%s' marker; its identifiers only act as catch barriers.",
                           target, constants.MY_ID_MARKER)


# --- Approach 1 ---

def transform_approach1(program: Program, spec: TransformSpec) -> Program:
    """
    Wraps every clause body of each target predicate:

        p(t) :- B.   becomes   p(t) :- btid([t], Id), catch(B', Id, fail).

    B' is B with its '$my_id'(V) marker removed and V replaced by Id.
    backjump/1 goals become throw/1 throughout the program.

    Raises:
        TransformError: on duplicate or misplaced markers, undefined targets
            or an already transformed program.
    """
    _prepare_targets(program, spec)
    _warn_unmarked(program, spec)
    supply = _VarSupply(program)
    numbers = _clause_numbers(program)
    clauses = []
    for position, clause in enumerate(program.clauses):
        body = _backjump_to_throw(clause.body)
        if clause.indicator in spec.targets:
            body, marker = _take_my_id(Clause(clause.head, body), numbers[position])
            identifier = supply.new("Id")
            if marker is not None:
                body = substitute(body, {marker.id: identifier})
            body = conjoin([_btid(clause.head_args, identifier), _catch_fail(body, identifier)])
        clauses.append(Clause(clause.head, body))
    return Program.from_clauses(clauses, program.directives)


# --- Approach 1a ---

def _fold_procedure(program: Program, target: PredicateIndicator, supply: _VarSupply,
                    numbers: dict[int, int]) -> Clause:
    positions = program.index[target]
    head_vars = [supply.new(f"X{i}") for i in range(1, target.arity + 1)]
    xs = make_list(head_vars)
    identifier = supply.new("Id")
    branches = []
    for position in positions:
        clause = supply.rename(program.clauses[position])
        body = _backjump_to_throw(clause.body)
        body, marker = _take_my_id(Clause(clause.head, body), numbers[position])
        if marker is not None:
            body = substitute(body, {marker.id: identifier})
        args = clause.head_args
        if all(isinstance(a, Var) for a in args) and len({a.id for a in args}) == len(args):
            # head of distinct variables: rename instead of unifying
            body = substitute(body, {a.id: v for a, v in zip(args, head_vars)})
            branches.append(body)
        else:
            unification = Compound("=", (xs, make_list(args)))
            branches.append(conjoin([unification, body]))

    chain = _catch_fail(branches[-1], identifier)
    for branch in reversed(branches[:-1]):
        attempt = Compound(constants.DISJUNCTION, (branch, Compound("throw", (identifier,))))
        chain = _catch_fail(attempt, identifier, chain)
    head = Compound(target.name, tuple(head_vars)) if target.arity else Atom(target.name)
    return Clause(head, conjoin([_btid(head_vars, identifier), chain]))


def transform_approach1a(program: Program, spec: TransformSpec) -> Program:
    """
    Replaces the n clauses of each target predicate by one clause

        p(X1..Xk) :- btid([X1..Xk], Id), C1.
        Cj = catch(((Xs = tj, Bj') ; throw(Id)), Id, Cj+1)     (j < n)
        Cn = catch((Xs = tn, Bn'), Id, fail)

    so a throw of Id from clause j moves on to clause j+1 in clause order.
    The folded clause takes the place of the predicate's first clause.
    """
    _prepare_targets(program, spec)
    _warn_unmarked(program, spec)
    supply = _VarSupply(program)
    numbers = _clause_numbers(program)
    first_positions = {program.index[target][0]: target for target in sorted(spec.targets)}
    clauses = []
    for position, clause in enumerate(program.clauses):
        if position in first_positions:
            clauses.append(_fold_procedure(program, first_positions[position], supply, numbers))
        elif clause.indicator not in spec.targets:
            clauses.append(Clause(clause.head, _backjump_to_throw(clause.body)))
    return Program.from_clauses(clauses, program.directives)


# --- Approach 2 ---

def transform_approach2(program: Program, spec: TransformSpec | None = None) -> Program:
    """
    Splits each clause at its '$catch_rest'(T) marker:

        H :- B0, '$catch_rest'(T), B1.   becomes   H :- B0, catch(B1, T, fail).

    With T = fresh, btid(HeadArgs, Id) is inserted before the catch and Id
    is used as the catcher.

    Raises:
        TransformError: marker nested under a control construct, more than
            one marker in a body, no marker in the program, or an already
            transformed program.
    """
    check_not_transformed(program)
    supply = _VarSupply(program)
    numbers = _clause_numbers(program)
    clauses = []
    markers = 0
    for position, clause in enumerate(program.clauses):
        where, number = str(clause.indicator), numbers[position]
        goals = conjuncts(clause.body)
        split = None
        for index, goal in enumerate(goals):
            if _is_goal(goal, constants.CATCH_REST_MARKER, 1):
                if split is not None:
                    raise TransformError(f"'{constants.CATCH_REST_MARKER}'/1 appears more than once", where, number)
                split = index
            elif any(_is_goal(g, constants.CATCH_REST_MARKER, 1) for g in _iter_goals(goal)):
                raise TransformError(f"'{constants.CATCH_REST_MARKER}'/1 must be a top-level conjunct, "
                                     "not nested under ';', '->' or catch/3", where, number)
        if split is None:
            clauses.append(clause)
            continue
        markers += 1
        identifier = goals[split].args[0]
        prefix, suffix = goals[:split], goals[split + 1:]
        if identifier == Atom(constants.FRESH_ID):
            identifier = supply.new("Id")
            prefix = prefix + [_btid(clause.head_args, identifier)]
        body = conjoin(prefix + [_catch_fail(conjoin(suffix), identifier)])
        clauses.append(Clause(clause.head, body))
    if not markers:
        raise TransformError(f"no '{constants.CATCH_REST_MARKER}'/1 marker in the program")
    return Program.from_clauses(clauses, program.directives)


# --- Native lowering and printing ---

def lower_native(program: Program) -> Program:
    """Rewrites '$my_id'(V) to parent_choice(V) for the native-backjump engine."""
    def rewrite(goal: Term) -> Term:
        if _is_goal(goal, constants.MY_ID_MARKER, 1):
            return Compound("parent_choice", goal.args)
        return goal

    clauses = [Clause(c.head, _map_goals(c.body, rewrite)) for c in program.clauses]
    return Program.from_clauses(clauses, program.directives)


def transform(program: Program, spec: TransformSpec) -> Program:
    if spec.approach is Approach.A1:
        return transform_approach1(program, spec)
    if spec.approach is Approach.A1A:
        return transform_approach1a(program, spec)
    return transform_approach2(program, spec)


def pretty_print(program: Program) -> str:
    return format_program(program)


__all__ = [
    "Approach", "TransformSpec", "check_not_transformed", "transform_approach1", "transform_approach1a",
    "transform_approach2", "lower_native", "transform", "pretty_print",
]
