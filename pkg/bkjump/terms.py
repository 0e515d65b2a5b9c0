# bkjump/terms.py
"""
Term representation: variables, atoms, integers, compounds, plus clauses
and programs. Lists are '.'/2 chains ending in '[]'; pairs are '-'/2.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple, Union

from . import constants
from .exceptions import InvalidArgumentError


@dataclass(frozen=True, slots=True)
class Var:
    """A logic variable. Equality is by id; the hint is only for printing."""
    id: int
    hint: str = field(default="_", compare=False)

    def __repr__(self):
        return f"Var({self.id}, {self.hint!r})"


@dataclass(frozen=True, slots=True)
class Atom:
    name: str

    def __repr__(self):
        return f"Atom({self.name!r})"


@dataclass(frozen=True, slots=True)
class Int:
    value: int

    def __repr__(self):
        return f"Int({self.value})"


@dataclass(frozen=True, slots=True)
class Compound:
    """A compound term. Arity is at least 1; arity-0 terms are atoms."""
    functor: str
    args: tuple[Term, ...]

    def __post_init__(self):
        if not self.args:
            raise InvalidArgumentError(f"Compound '{self.functor}' needs at least one argument; use Atom.")
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def __repr__(self):
        return f"Compound({self.functor!r}, {list(self.args)!r})"


Term = Union[Var, Atom, Int, Compound]

NIL = Atom(constants.NIL)
TRUE = Atom(constants.TRUE)
FAIL = Atom(constants.FAIL)


class PredicateIndicator(NamedTuple):
    """name/arity pair identifying a procedure."""
    name: str
    arity: int

    def __str__(self):
        from .writer import format_atom  # writer imports terms
        return f"{format_atom(self.name)}/{self.arity}"

    @classmethod
    def parse(cls, text: str) -> PredicateIndicator:
        """Parses 'name/arity' (the name may be quoted)."""
        name, sep, arity = text.strip().rpartition("/")
        if not sep or not name or not arity.isdigit():
            raise InvalidArgumentError(f"Invalid predicate indicator '{text}'; use name/arity.")
        if len(name) >= 2 and name[0] == name[-1] == "'":
            from .reader import parse_term  # reader imports terms
            atom = parse_term(name)
            if not isinstance(atom, Atom):
                raise InvalidArgumentError(f"Invalid predicate name in '{text}'.")
            name = atom.name
        return cls(name, int(arity))


def indicator_of(term: Term) -> PredicateIndicator | None:
    """Returns name/arity of a callable term, None for variables and integers."""
    if isinstance(term, Atom):
        return PredicateIndicator(term.name, 0)
    if isinstance(term, Compound):
        return PredicateIndicator(term.functor, len(term.args))
    return None


def is_btid_identifier(term: Term) -> bool:
    """True for a '$bj'(N, T) identifier as built by btid/2."""
    return (
        isinstance(term, Compound)
        and term.functor == constants.BTID_FUNCTOR
        and len(term.args) == 2
        and isinstance(term.args[0], Int)
    )


# --- Construction helpers ---

def make_list(items: Iterable[Term], tail: Term = NIL) -> Term:
    """Builds a '.'/2 chain from items ending in tail."""
    result = tail
    for item in reversed(list(items)):
        result = Compound(constants.LIST_FUNCTOR, (item, result))
    return result


def list_items(term: Term) -> tuple[list[Term], Term]:
    """Splits a (partial) list into its elements and its tail."""
    items = []
    while isinstance(term, Compound) and term.functor == constants.LIST_FUNCTOR and len(term.args) == 2:
        items.append(term.args[0])
        term = term.args[1]
    return items, term


def make_pair(left: Term, right: Term) -> Compound:
    return Compound(constants.PAIR_FUNCTOR, (left, right))


def conjuncts(body: Term) -> list[Term]:
    """Flattens the top-level ','/2 structure of a goal."""
    goals = []
    stack = [body]
    while stack:
        goal = stack.pop()
        if isinstance(goal, Compound) and goal.functor == constants.CONJUNCTION and len(goal.args) == 2:
            stack.append(goal.args[1])
            stack.append(goal.args[0])
        else:
            goals.append(goal)
    return goals


def conjoin(goals: Iterable[Term]) -> Term:
    """Joins goals with ','/2 (right nested); no goals gives true."""
    goals = [g for g in goals if g != TRUE]
    if not goals:
        return TRUE
    result = goals[-1]
    for goal in reversed(goals[:-1]):
        result = Compound(constants.CONJUNCTION, (goal, result))
    return result


def term_vars(term: Term) -> list[Var]:
    """Variables of a term in depth-first, left-to-right order of first occurrence."""
    seen: dict[int, Var] = {}
    stack = [term]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            seen.setdefault(t.id, t)
        elif isinstance(t, Compound):
            stack.extend(reversed(t.args))
    return list(seen.values())


def iter_subterms(term: Term) -> Iterator[Term]:
    stack = [term]
    while stack:
        t = stack.pop()
        yield t
        if isinstance(t, Compound):
            stack.extend(reversed(t.args))


def substitute(term: Term, mapping: Mapping[int, Term]) -> Term:
    """Replaces variables by id according to mapping."""
    if isinstance(term, Var):
        return mapping.get(term.id, term)
    if isinstance(term, Compound):
        return Compound(term.functor, tuple(substitute(a, mapping) for a in term.args))
    return term


def is_variant(t1: Term, t2: Term) -> bool:
    """True when t1 and t2 are equal up to a bijective renaming of variables."""
    forward: dict[int, int] = {}
    backward: dict[int, int] = {}
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        if isinstance(a, Var) or isinstance(b, Var):
            if not (isinstance(a, Var) and isinstance(b, Var)):
                return False
            if forward.setdefault(a.id, b.id) != b.id or backward.setdefault(b.id, a.id) != a.id:
                return False
        elif isinstance(a, Compound):
            if not isinstance(b, Compound) or a.functor != b.functor or len(a.args) != len(b.args):
                return False
            stack.extend(zip(a.args, b.args))
        elif a != b:
            return False
    return True


# --- Clauses and programs ---

@dataclass(frozen=True, slots=True)
class Clause:
    """A definite clause Head :- Body; facts have body true."""
    head: Term
    body: Term = TRUE

    def __post_init__(self):
        if not isinstance(self.head, (Atom, Compound)):
            raise InvalidArgumentError(f"Clause head must be an atom or compound, not {self.head!r}")
        if tuple(self.indicator) in constants.RESERVED_INDICATORS:
            raise InvalidArgumentError(f"Cannot define clauses for reserved predicate {self.indicator}")

    @property
    def indicator(self) -> PredicateIndicator:
        return indicator_of(self.head)

    @property
    def head_args(self) -> tuple[Term, ...]:
        return self.head.args if isinstance(self.head, Compound) else ()

    def as_term(self) -> Term:
        if self.body == TRUE:
            return self.head
        return Compound(':-', (self.head, self.body))


@dataclass(frozen=True)
class Program:
    """
    Ordered definite clauses grouped by predicate indicator.

    Immutable after construction; `index` maps each indicator to the
    positions of its clauses in source order.
    """
    clauses: tuple[Clause, ...] = ()
    directives: tuple[Term, ...] = ()
    index: Mapping[PredicateIndicator, tuple[int, ...]] = field(default_factory=dict, compare=False)

    @classmethod
    def from_clauses(cls, clauses: Iterable[Clause], directives: Iterable[Term] = ()) -> Program:
        clauses = tuple(clauses)
        index: dict[PredicateIndicator, list[int]] = {}
        for position, clause in enumerate(clauses):
            index.setdefault(clause.indicator, []).append(position)
        frozen_index = MappingProxyType({pi: tuple(positions) for pi, positions in index.items()})
        return cls(clauses, tuple(directives), frozen_index)

    def procedure(self, indicator: PredicateIndicator | tuple[str, int]) -> list[Clause]:
        """Clauses of a predicate in source order (empty if undefined)."""
        return [self.clauses[i] for i in self.index.get(PredicateIndicator(*indicator), ())]

    def defines(self, indicator: PredicateIndicator | tuple[str, int]) -> bool:
        return PredicateIndicator(*indicator) in self.index

    def predicates(self) -> list[PredicateIndicator]:
        """Defined predicates in order of first appearance."""
        return list(self.index)

    def max_var_id(self) -> int:
        highest = -1
        for clause in self.clauses:
            for var in term_vars(clause.as_term()):
                highest = max(highest, var.id)
        for directive in self.directives:
            for var in term_vars(directive):
                highest = max(highest, var.id)
        return highest

    def __len__(self):
        return len(self.clauses)

    def __repr__(self):
        return f"<Program clauses={len(self.clauses)} predicates={len(self.index)}>"
