# bkjump/builtins.py
"""
Deterministic built-in predicates, integer arithmetic and the ISO error
terms they throw. Control (catch/3, throw/1, the backjump primitives) lives
in the engine.
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Callable

from . import constants
from .exceptions import PrologThrow
from .terms import Atom, Compound, Int, PredicateIndicator, Term, Var, make_list
from .unify import copy_term, unify

if TYPE_CHECKING:
    from .engine import Engine


# --- ISO error terms ---

def indicator_term(pred: PredicateIndicator) -> Term:
    return Compound("/", (Atom(pred.name), Int(pred.arity)))


def _error(formal: Term, pred: PredicateIndicator) -> Term:
    return Compound("error", (formal, indicator_term(pred)))


def instantiation_error(pred: PredicateIndicator) -> Term:
    return _error(Atom("instantiation_error"), pred)


def type_error(type_name: str, culprit: Term, pred: PredicateIndicator) -> Term:
    return _error(Compound("type_error", (Atom(type_name), culprit)), pred)


def evaluation_error(what: str, pred: PredicateIndicator) -> Term:
    return _error(Compound("evaluation_error", (Atom(what),)), pred)


def system_error(message: str, pred: PredicateIndicator) -> Term:
    return _error(Compound("system_error", (Atom(message),)), pred)


# --- Arithmetic ---

def _int_div(a: int, b: int) -> int:
    """Integer division truncating toward zero."""
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
}


def eval_arith(expr: Term, engine: Engine, pred: PredicateIndicator) -> int:
    """
    Evaluates an integer expression over +, -, *, // and unary minus.

    Raises:
        PrologThrow: instantiation, type or evaluation (zero divisor) errors.
    """
    expr = engine.bindings.deref(expr)
    if isinstance(expr, Int):
        return expr.value
    if isinstance(expr, Var):
        raise PrologThrow(instantiation_error(pred), pred)
    if isinstance(expr, Compound):
        if len(expr.args) == 2 and (expr.functor in _BINARY or expr.functor == "//"):
            left = eval_arith(expr.args[0], engine, pred)
            right = eval_arith(expr.args[1], engine, pred)
            if expr.functor == "//":
                if right == 0:
                    raise PrologThrow(evaluation_error("zero_divisor", pred), pred)
                return _int_div(left, right)
            return _BINARY[expr.functor](left, right)
        if len(expr.args) == 1 and expr.functor == "-":
            return -eval_arith(expr.args[0], engine, pred)
        culprit = Compound("/", (Atom(expr.functor), Int(len(expr.args))))
        raise PrologThrow(type_error("evaluable", culprit, pred), pred)
    culprit = Compound("/", (expr, Int(0)))
    raise PrologThrow(type_error("evaluable", culprit, pred), pred)


# --- Predicates ---
# Each takes (engine, args) and returns True on success, False on failure.

def _true(engine: Engine, args) -> bool:
    return True


def _fail(engine: Engine, args) -> bool:
    return False


def _unify(engine: Engine, args) -> bool:
    return unify(args[0], args[1], engine.bindings, engine.occurs_check)


def _var(engine: Engine, args) -> bool:
    return isinstance(engine.bindings.deref(args[0]), Var)


def _nonvar(engine: Engine, args) -> bool:
    return not isinstance(engine.bindings.deref(args[0]), Var)


def _is(engine: Engine, args) -> bool:
    value = eval_arith(args[1], engine, PredicateIndicator("is", 2))
    return unify(args[0], Int(value), engine.bindings, engine.occurs_check)


def _comparison(name: str, test: Callable[[int, int], bool]):
    pred = PredicateIndicator(name, 2)

    def compare(engine: Engine, args) -> bool:
        return test(eval_arith(args[0], engine, pred), eval_arith(args[1], engine, pred))

    return compare


def _btid(engine: Engine, args) -> bool:
    # The argument term is shared, not copied; the counter alone makes the identifier unique.
    identifier = Compound(constants.BTID_FUNCTOR, (Int(engine.next_btid()), args[0]))
    return unify(args[1], identifier, engine.bindings, engine.occurs_check)


def _sort_desc(engine: Engine, args) -> bool:
    pred = PredicateIndicator("sort_desc", 2)
    bindings = engine.bindings
    items = []
    term = bindings.deref(args[0])
    while isinstance(term, Compound) and term.functor == constants.LIST_FUNCTOR and len(term.args) == 2:
        items.append(bindings.deref(term.args[0]))
        term = bindings.deref(term.args[1])
    if isinstance(term, Var):
        raise PrologThrow(instantiation_error(pred), pred)
    if term != Atom(constants.NIL):
        raise PrologThrow(type_error("list", copy_term(args[0], bindings), pred), pred)
    values = []
    for item in items:
        if isinstance(item, Var):
            raise PrologThrow(instantiation_error(pred), pred)
        if not isinstance(item, Int):
            raise PrologThrow(type_error("integer", copy_term(item, bindings), pred), pred)
        values.append(item.value)
    ordered = make_list(Int(v) for v in sorted(values, reverse=True))
    return unify(args[1], ordered, bindings, engine.occurs_check)


BUILTINS: dict[tuple[str, int], Callable[[Engine, tuple], bool]] = {
    ("true", 0): _true,
    ("fail", 0): _fail,
    ("=", 2): _unify,
    ("var", 1): _var,
    ("nonvar", 1): _nonvar,
    ("is", 2): _is,
    (">", 2): _comparison(">", lambda a, b: a > b),
    ("<", 2): _comparison("<", lambda a, b: a < b),
    (">=", 2): _comparison(">=", lambda a, b: a >= b),
    ("=<", 2): _comparison("=<", lambda a, b: a <= b),
    ("btid", 2): _btid,
    ("sort_desc", 2): _sort_desc,
}

