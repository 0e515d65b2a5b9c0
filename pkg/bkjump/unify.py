# bkjump/unify.py
from __future__ import annotations

from dataclasses import dataclass

from . import constants
from .exceptions import CyclicTermError, StaleMarkError
from .terms import Clause, Compound, Term, Var, is_btid_identifier


@dataclass(frozen=True, slots=True)
class TrailMark:
    """Position in the trail of the Bindings that produced it."""
    position: int


class Bindings:
    """
    Mutable variable store with a trail.

    Unbound variables are simply absent from the store. Every binding is
    recorded on the trail so `undo_to` can restore any earlier state.
    Single-threaded; distinct instances share nothing.
    """

    def __init__(self, next_var: int = 0):
        self.store: dict[int, Term] = {}
        self.trail: list[int] = []
        self.next_var = next_var

    def fresh_var(self, hint: str = "_") -> Var:
        var = Var(self.next_var, hint)
        self.next_var += 1
        return var

    def deref(self, term: Term) -> Term:
        store = self.store
        while isinstance(term, Var):
            bound = store.get(term.id)
            if bound is None:
                return term
            term = bound
        return term

    def bind(self, var: Var, value: Term):
        if var.id in self.store:
            raise StaleMarkError(f"Variable _{var.id} is already bound")
        self.store[var.id] = value
        self.trail.append(var.id)

    def mark(self) -> TrailMark:
        return TrailMark(len(self.trail))

    def undo_to(self, mark: TrailMark):
        """Removes every binding made after mark."""
        trail = self.trail
        if mark.position > len(trail):
            raise StaleMarkError(f"Trail mark {mark.position} is past the trail end {len(trail)}")
        store = self.store
        while len(trail) > mark.position:
            del store[trail.pop()]

    def snapshot(self) -> dict[int, Term]:
        return dict(self.store)

    def __repr__(self):
        return f"<Bindings bound={len(self.store)} trail={len(self.trail)} next_var={self.next_var}>"


def occurs_in(var: Var, term: Term, bindings: Bindings) -> bool:
    stack = [term]
    while stack:
        t = bindings.deref(stack.pop())
        if isinstance(t, Var):
            if t.id == var.id:
                return True
        elif isinstance(t, Compound):
            stack.extend(t.args)
    return False


def unify(t1: Term, t2: Term, bindings: Bindings, occurs_check: bool = False) -> bool:
    """
    Unifies t1 and t2, extending bindings to an mgu.

    On failure the bindings are restored to their state before the call.

    Returns:
        True on success, False otherwise.
    """
    mark = bindings.mark()
    stack = [(t1, t2)]
    while stack:
        a, b = stack.pop()
        a = bindings.deref(a)
        b = bindings.deref(b)
        if a is b:
            continue
        if isinstance(a, Var):
            if isinstance(b, Var) and a.id == b.id:
                continue
            if occurs_check and occurs_in(a, b, bindings):
                bindings.undo_to(mark)
                return False
            bindings.bind(a, b)
        elif isinstance(b, Var):
            if occurs_check and occurs_in(b, a, bindings):
                bindings.undo_to(mark)
                return False
            bindings.bind(b, a)
        elif isinstance(a, Compound):
            if not isinstance(b, Compound) or a.functor != b.functor or len(a.args) != len(b.args):
                bindings.undo_to(mark)
                return False
            stack.extend(zip(reversed(a.args), reversed(b.args)))
        elif a != b:
            bindings.undo_to(mark)
            return False
    return True


def rename_term(term: Term, bindings: Bindings, mapping: dict[int, Var], *,
                keep_identifiers: bool = False) -> Term:
    """
    Copies term replacing each variable by a fresh one (shared through mapping).

    With keep_identifiers, btid/2 identifiers are returned as they are.
    """
    if isinstance(term, Var):
        fresh = mapping.get(term.id)
        if fresh is None:
            fresh = mapping[term.id] = bindings.fresh_var(term.hint)
        return fresh
    if isinstance(term, Compound):
        if keep_identifiers and is_btid_identifier(term):
            return term
        return Compound(term.functor, tuple(rename_term(a, bindings, mapping, keep_identifiers=keep_identifiers)
                                            for a in term.args))
    return term


def rename_clause(clause: Clause, bindings: Bindings) -> Clause:
    """Returns a fresh variant of clause; new variable ids come from bindings.next_var."""
    mapping: dict[int, Var] = {}
    head = rename_term(clause.head, bindings, mapping)
    body = rename_term(clause.body, bindings, mapping)
    return Clause(head, body)


def resolve(term: Term, bindings: Bindings, max_depth: int = constants.DEFAULT_DEPTH_CAP) -> Term:
    """
    Applies the bindings throughout term (full dereference).

    btid/2 identifiers are left as they are: their argument term is shared
    with the call that made them and is not part of their identity.

    Raises:
        CyclicTermError: if a binding cycle is met or nesting exceeds max_depth.
    """
    def walk(t: Term, depth: int, active: frozenset) -> Term:
        if depth > max_depth:
            raise CyclicTermError(f"Term nesting exceeds depth cap {max_depth}")
        while isinstance(t, Var):
            bound = bindings.store.get(t.id)
            if bound is None:
                return t
            if t.id in active:
                raise CyclicTermError(f"Cyclic term through variable _{t.id}")
            active = active | {t.id}
            t = bound
        if isinstance(t, Compound):
            if is_btid_identifier(t):
                return t
            if t.functor == constants.LIST_FUNCTOR and len(t.args) == 2:
                return _walk_list(t, depth, active)
            return Compound(t.functor, tuple(walk(a, depth + 1, active) for a in t.args))
        return t

    def _walk_list(t: Compound, depth: int, active: frozenset) -> Term:
        # Iterative along the spine so long lists do not deepen the recursion.
        heads = []
        while isinstance(t, Compound) and t.functor == constants.LIST_FUNCTOR and len(t.args) == 2:
            if len(heads) > max_depth * 100:
                raise CyclicTermError("List spine does not terminate")
            heads.append(walk(t.args[0], depth + 1, active))
            tail = t.args[1]
            while isinstance(tail, Var):
                bound = bindings.store.get(tail.id)
                if bound is None:
                    break
                if tail.id in active:
                    raise CyclicTermError(f"Cyclic term through variable _{tail.id}")
                active = active | {tail.id}
                tail = bound
            t = tail
        result = t if not isinstance(t, Compound) else walk(t, depth + 1, active)
        for head in reversed(heads):
            result = Compound(constants.LIST_FUNCTOR, (head, result))
        return result

    try:
        return walk(term, 0, frozenset())
    except RecursionError:
        raise CyclicTermError(f"Term too deep to dereference (cap {max_depth})") from None


def copy_term(term: Term, bindings: Bindings) -> Term:
    """Resolves term and renames its remaining variables apart (ball copy)."""
    return rename_term(resolve(term, bindings), bindings, {}, keep_identifiers=True)
