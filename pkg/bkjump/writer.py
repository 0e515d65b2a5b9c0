# bkjump/writer.py
from __future__ import annotations

import re
from typing import TYPE_CHECKING, Mapping

from . import constants
from .exceptions import CyclicTermError
from .terms import Atom, Clause, Compound, Int, Program, Term, Var, conjuncts, term_vars

if TYPE_CHECKING:
    from .unify import Bindings

_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_ALPHA_OPERATORS = {name for name in constants.INFIX_OPERATORS if name.isalpha()}


def format_atom(name: str) -> str:
    """Returns the atom name, quoted when the reader would not read it back bare."""
    if _PLAIN_ATOM.match(name) or name == constants.NIL:
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'").replace("\n", "\\n").replace("\t", "\\t")
    return f"'{escaped}'"


def _var_name(var: Var, var_names: Mapping[int, str] | None) -> str:
    if var_names and var.id in var_names:
        return var_names[var.id]
    return f"_{var.id}"


class _Writer:
    def __init__(self, bindings: Bindings | None, var_names: Mapping[int, str] | None, max_depth: int):
        self.bindings = bindings
        self.var_names = var_names
        self.max_depth = max_depth

    def deref(self, term: Term, active: frozenset) -> tuple[Term, frozenset]:
        if self.bindings is None:
            return term, active
        store = self.bindings.store
        while isinstance(term, Var):
            bound = store.get(term.id)
            if bound is None:
                break
            if term.id in active:
                raise CyclicTermError(f"Cyclic term through variable _{term.id}")
            active = active | {term.id}
            term = bound
        return term, active

    def write(self, term: Term, max_prec: int, depth: int, active: frozenset) -> str:
        if depth > self.max_depth:
            raise CyclicTermError(f"Term nesting exceeds depth cap {self.max_depth}")
        term, active = self.deref(term, active)
        if isinstance(term, Var):
            return _var_name(term, self.var_names)
        if isinstance(term, Int):
            return str(term.value)
        if isinstance(term, Atom):
            return format_atom(term.name)
        return self.write_compound(term, max_prec, depth, active)

    def write_compound(self, term: Compound, max_prec: int, depth: int, active: frozenset) -> str:
        if term.functor == constants.LIST_FUNCTOR and len(term.args) == 2:
            return self.write_list(term, depth, active)
        op = constants.INFIX_OPERATORS.get(term.functor)
        if op and len(term.args) == 2:
            prec, kind = op
            left_max = prec if kind == 'yfx' else prec - 1
            right_max = prec if kind == 'xfy' else prec - 1
            left = self.write(term.args[0], left_max, depth + 1, active)
            right = self.write(term.args[1], right_max, depth + 1, active)
            text = self.join_infix(left, term.functor, right)
            return f"({text})" if prec > max_prec else text
        args = ",".join(self.write(a, constants.ARG_PRIORITY, depth + 1, active) for a in term.args)
        functor = "'[]'" if term.functor == constants.NIL else format_atom(term.functor)
        return f"{functor}({args})"

    def write_list(self, term: Compound, depth: int, active: frozenset) -> str:
        items = []
        tail: Term = term
        while isinstance(tail, Compound) and tail.functor == constants.LIST_FUNCTOR and len(tail.args) == 2:
            if len(items) > self.max_depth * 100:
                raise CyclicTermError("List spine does not terminate")
            items.append(self.write(tail.args[0], constants.ARG_PRIORITY, depth + 1, active))
            tail, active = self.deref(tail.args[1], active)
        text = "[" + ",".join(items)
        if not (isinstance(tail, Atom) and tail.name == constants.NIL):
            text += "|" + self.write(tail, constants.ARG_PRIORITY, depth + 1, active)
        return text + "]"

    @staticmethod
    def join_infix(left: str, name: str, right: str) -> str:
        if name == constants.CONJUNCTION:
            return f"{left},{right}"
        if name in _ALPHA_OPERATORS:
            return f"{left} {name} {right}"
        # keep symbol-char runs from merging into one token
        sep_left = " " if left and left[-1] in constants.SYMBOL_CHARS else ""
        sep_right = " " if right and (right[0] in constants.SYMBOL_CHARS or right[0] == "(") else ""
        return f"{left}{sep_left}{name}{sep_right}{right}"


def write_term(term: Term, bindings: Bindings | None = None, *,
               var_names: Mapping[int, str] | None = None,
               max_depth: int = constants.DEFAULT_DEPTH_CAP,
               priority: int = constants.MAX_PRIORITY) -> str:
    """
    Renders a term in the reader's concrete syntax.

    Bound variables are printed dereferenced through bindings; unbound ones
    as `_` followed by their id unless var_names supplies a name.

    Raises:
        CyclicTermError: when the term is cyclic or nested deeper than max_depth.
    """
    writer = _Writer(bindings, var_names, max_depth)
    try:
        return writer.write(term, priority, 0, frozenset())
    except RecursionError:
        raise CyclicTermError(f"Term too deep to write (cap {max_depth})") from None


def clause_var_names(clause: Clause) -> dict[int, str]:
    """Picks printable, distinct names for the variables of a clause."""
    names: dict[int, str] = {}
    used: set[str] = set()
    for var in term_vars(clause.as_term()):
        hint = var.hint if var.hint and var.hint != "_" else "_G"
        if not (hint[0].isupper() or hint[0] == "_"):
            hint = "V" + hint
        name = hint
        suffix = 1
        while name in used:
            name = f"{hint}{suffix}"
            suffix += 1
        used.add(name)
        names[var.id] = name
    return names


def format_clause(clause: Clause, indent: str = "    ") -> str:
    """Formats a clause with one top-level body goal per line."""
    names = clause_var_names(clause)
    head = write_term(clause.head, var_names=names, priority=constants.ARG_PRIORITY)
    if clause.body == Atom(constants.TRUE):
        return f"{head}."
    goals = [write_term(g, var_names=names, priority=constants.ARG_PRIORITY) for g in conjuncts(clause.body)]
    body = f",\n{indent}".join(goals)
    return f"{head} :-\n{indent}{body}."


def format_program(program: Program) -> str:
    """Source text for a program: directives first, then clauses grouped as in the source."""
    lines = []
    for directive in program.directives:
        names = {v.id: f"_G{i}" for i, v in enumerate(term_vars(directive))}
        lines.append(f":- {write_term(directive, var_names=names, priority=1199)}.")
    previous = None
    for clause in program.clauses:
        if previous is not None and clause.indicator != previous:
            lines.append("")
        lines.append(format_clause(clause))
        previous = clause.indicator
    return "\n".join(lines) + "\n"
