import numpy as np
import pytest

from bkjump.exceptions import PrologSyntaxError
from bkjump.reader import parse_program, parse_term, parse_term_with_names, tokenize
from bkjump.terms import Atom, Clause, Compound, Int, PredicateIndicator, Var, is_variant, make_list
from bkjump.writer import format_atom, format_program, write_term


def test_compound_with_list_and_quoted_atom():
    term = parse_term("f(X, [1,2|T], 'hello world')")
    assert isinstance(term, Compound) and term.functor == "f"
    x, lst, atom = term.args
    assert isinstance(x, Var) and x.hint == "X"
    tail = lst.args[1].args[1]
    assert isinstance(tail, Var) and tail.hint == "T"
    assert lst.args[0] == Int(1)
    assert atom == Atom("hello world")


def test_operator_priorities():
    term = parse_term("a :- b, c ; d -> e")
    expected = Compound(":-", (
        Atom("a"),
        Compound(";", (
            Compound(",", (Atom("b"), Atom("c"))),
            Compound("->", (Atom("d"), Atom("e"))),
        )),
    ))
    assert term == expected


def test_arithmetic_associativity():
    assert parse_term("1 - 2 - 3") == Compound("-", (Compound("-", (Int(1), Int(2))), Int(3)))
    term = parse_term("X is 1 + 2 * 3")
    assert term.functor == "is"
    assert term.args[1] == Compound("+", (Int(1), Compound("*", (Int(2), Int(3)))))


def test_negative_integer_literal():
    assert parse_term("f(-1)") == Compound("f", (Int(-1),))
    assert parse_term("3-1") == Compound("-", (Int(3), Int(1)))


def test_quoted_atoms_are_never_operators():
    term = parse_term("'$my_id'(I)")
    assert term.functor == "$my_id"
    assert parse_term("f('-')") == Compound("f", (Atom("-"),))


def test_trailing_end_is_accepted():
    assert parse_term("p(a).") == Compound("p", (Atom("a"),))


def test_named_variables_in_order():
    term, names = parse_term_with_names("p(X, _Y, _, X, Z)")
    assert list(names) == ["X", "_Y", "Z"]
    assert term.args[0] == names["X"] == term.args[3]
    assert term.args[2] != term.args[1]


def test_program_keeps_clause_order_and_directives():
    program = parse_program("""
        % comment
        p(1).
        q(X) :- p(X).
        :- q(1).
        p(2).   /* block
                   comment */
    """)
    assert [str(c.indicator) for c in program.clauses] == ["p/1", "q/1", "p/1"]
    assert program.index[PredicateIndicator("p", 1)] == (0, 2)
    assert program.directives == (Compound("q", (Int(1),)),)


def test_clauses_do_not_share_variables():
    program = parse_program("p(X) :- q(X).\nq(X).")
    first = program.clauses[0].head.args[0]
    second = program.clauses[1].head.args[0]
    assert first != second


def test_syntax_error_position():
    with pytest.raises(PrologSyntaxError) as excinfo:
        parse_program("p :- .")
    assert (excinfo.value.line, excinfo.value.column) == (1, 6)
    assert str(excinfo.value).startswith("line 1, column 6:")


def test_syntax_error_on_second_line():
    with pytest.raises(PrologSyntaxError) as excinfo:
        parse_program("p(a).\nq(b c).")
    assert excinfo.value.line == 2


def test_integer_body_goal_rejected():
    with pytest.raises(PrologSyntaxError):
        parse_program("p :- q, 1.")


def test_reserved_predicate_cannot_be_defined():
    with pytest.raises(PrologSyntaxError):
        parse_program("catch(a, b, c).")


def test_unterminated_quoted_atom():
    with pytest.raises(PrologSyntaxError):
        list(tokenize("p('abc)."))


def test_write_term_priorities():
    assert write_term(parse_term("(1, true)"), priority=999) == "(1,true)"
    assert write_term(make_list([Int(1), Int(2)], Var(7))) == "[1,2|_7]"
    assert write_term(parse_term("error(type_error(evaluable, foo/0), is/2)")) == \
        "error(type_error(evaluable,foo/0),is/2)"


def test_format_atom_quotes_when_needed():
    assert format_atom("abc") == "abc"
    assert format_atom("[]") == "[]"
    assert format_atom("hello world") == "'hello world'"
    assert format_atom("$bj") == "'$bj'"
    assert format_atom("it's") == "'it\\'s'"


def test_formatted_program_reads_back():
    source = """
        sat_cl([Pol-V|_], N, _, N) :- nonvar(V), V = (_, Pol).
        sat_cnf([], _).
        p(X) :- ( X > 1 -> true ; X = 0 ), catch(q(X), E, (E = f(_), fail)).
    """
    program = parse_program(source)
    again = parse_program(format_program(program))
    assert len(again) == len(program)
    for a, b in zip(program.clauses, again.clauses):
        assert is_variant(a.as_term(), b.as_term())


def test_clause_head_must_be_callable():
    with pytest.raises(PrologSyntaxError):
        parse_program("X :- true.")


def test_fact_has_true_body():
    program = parse_program("p.")
    assert program.clauses[0] == Clause(Atom("p"), Atom("true"))


# --- Round trip on random terms ---

ATOMS = ["a", "foo", "[]", "hello world", "$x", "-", ","]
FUNCTORS = ["f", "g", "Big", "two words"]
OPERATORS = [",", ";", "->", ":-", "=", "is", "<", ">=", "+", "-", "*", "/", "//"]


def random_term(rng, depth):
    kind = int(rng.integers(0, 6 if depth > 0 else 3))
    if kind == 0:
        return Var(int(rng.integers(4)))
    if kind == 1:
        return Int(int(rng.integers(100)))
    if kind == 2:
        return Atom(ATOMS[rng.integers(len(ATOMS))])
    if kind == 3:
        args = tuple(random_term(rng, depth - 1) for _ in range(int(rng.integers(1, 4))))
        return Compound(FUNCTORS[rng.integers(len(FUNCTORS))], args)
    if kind == 4:
        return Compound(OPERATORS[rng.integers(len(OPERATORS))], (random_term(rng, depth - 1),
                                                                   random_term(rng, depth - 1)))
    items = [random_term(rng, depth - 1) for _ in range(int(rng.integers(4)))]
    return make_list(items, Var(int(rng.integers(4))) if rng.integers(2) else Atom("[]"))


def test_written_terms_read_back():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        term = random_term(rng, 4)
        text = write_term(term)
        assert is_variant(parse_term(text), term), text
