import logging

import pytest

from bkjump.engine import Engine, EngineMode, ExitStatus, Limits
from bkjump.exceptions import InvalidArgumentError, TransformError
from bkjump.reader import parse_program
from bkjump.satlab import CORPUS, gen_cnf, to_query
from bkjump.terms import PredicateIndicator, is_variant
from bkjump.trace import (
    ListSink, clause_tries, compare, erase_alternatives, erase_identifiers, project_user, same_answers,
)
from bkjump.transform import (
    Approach, TransformSpec, check_not_transformed, lower_native, pretty_print, transform, transform_approach1,
    transform_approach1a, transform_approach2,
)

NATIVE = EngineMode.NATIVE_BACKJUMP

SMALL = """
p(1) :- '$my_id'(I), q(I).
p(X) :- r(X).
q(_).
q(I) :- backjump(I).
r(5).
"""


def spec(approach, *targets):
    return TransformSpec(approach, frozenset(targets))


def assert_variant_programs(actual, expected_source):
    expected = parse_program(expected_source)
    assert len(actual) == len(expected)
    for got, want in zip(actual.clauses, expected.clauses):
        assert is_variant(got.as_term(), want.as_term()), pretty_print(actual)


# --- Approach 1 ---

def test_approach1_wraps_target_bodies():
    program = transform_approach1(parse_program(SMALL), spec(Approach.A1, "p/1"))
    assert_variant_programs(program, """
        p(1) :- btid([1], Id), catch(q(Id), Id, fail).
        p(X) :- btid([X], Id), catch(r(X), Id, fail).
        q(_).
        q(I) :- throw(I).
        r(5).
    """)


def test_approach1_fact_gets_true_body():
    program = transform_approach1(parse_program("p(1).\np(2) :- '$my_id'(I), throw(I)."), spec(Approach.A1, "p/1"))
    assert_variant_programs(program, """
        p(1) :- btid([1], Id), catch(true, Id, fail).
        p(2) :- btid([2], Id), catch(throw(Id), Id, fail).
    """)


def test_approach1_output_reads_back():
    program = transform_approach1(parse_program(SMALL), spec(Approach.A1, "p/1"))
    again = parse_program(pretty_print(program))
    for a, b in zip(program.clauses, again.clauses):
        assert is_variant(a.as_term(), b.as_term())


def test_approach1_needs_targets():
    with pytest.raises(InvalidArgumentError):
        TransformSpec(Approach.A1)


def test_approach1_undefined_target():
    with pytest.raises(TransformError, match="not defined"):
        transform_approach1(parse_program(SMALL), spec(Approach.A1, "s/2"))


@pytest.mark.parametrize("source, message", [
    ("p(X) :- '$my_id'(I), '$my_id'(J), q(I, J).\nq(_, _).", "2 times"),
    ("p(X) :- '$my_id'(a).", "must be a variable"),
    ("p(I) :- '$my_id'(I).", "must not occur in the head"),
])
def test_approach1_marker_errors(source, message):
    with pytest.raises(TransformError, match=message):
        transform_approach1(parse_program(source), spec(Approach.A1, "p/1"))


def test_marker_outside_target():
    source = "p(X) :- q(X).\nq(X) :- '$my_id'(I), r(X, I).\nr(_, _)."
    with pytest.raises(TransformError) as excinfo:
        transform_approach1(parse_program(source), spec(Approach.A1, "p/1"))
    assert excinfo.value.indicator == "q/1"
    assert excinfo.value.clause_number == 1


def test_target_without_marker_warns(caplog):
    with caplog.at_level(logging.WARNING, logger="bkjump.transform"):
        transform_approach1(parse_program("r(5)."), spec(Approach.A1, "r/1"))
    assert "r/1" in caplog.text and "marker" in caplog.text


def test_already_transformed_program_is_rejected():
    once = transform_approach1(parse_program(SMALL), spec(Approach.A1, "p/1"))
    with pytest.raises(TransformError, match="already transformed"):
        check_not_transformed(once)
    with pytest.raises(TransformError):
        transform_approach1(once, spec(Approach.A1, "p/1"))


def test_reserved_identifier_functor_is_rejected():
    with pytest.raises(TransformError, match="already transformed"):
        check_not_transformed(parse_program("p('$bj'(1, []))."))


# --- Approach 1a ---

def test_approach1a_folds_clauses():
    program = transform_approach1a(parse_program(SMALL), spec(Approach.A1A, "p/1"))
    assert_variant_programs(program, """
        p(X) :- btid([X], Id),
            catch((([X] = [1], q(Id)) ; throw(Id)), Id, catch(r(X), Id, fail)).
        q(_).
        q(I) :- throw(I).
        r(5).
    """)


def test_approach1a_keeps_program_order():
    source = "a.\np(1).\nb.\np(2).\nc."
    program = transform_approach1a(parse_program(source), spec(Approach.A1A, "p/1"))
    assert [str(c.indicator) for c in program.clauses] == ["a/0", "p/1", "b/0", "c/0"]


def test_approach1a_single_clause_target():
    program = transform_approach1a(parse_program("p(X, Y) :- '$my_id'(I), q(X, Y, I).\nq(_, _, _)."),
                                   spec(Approach.A1A, "p/2"))
    assert_variant_programs(program, """
        p(X, Y) :- btid([X, Y], Id), catch(q(X, Y, Id), Id, fail).
        q(_, _, _).
    """)


# --- Approach 2 ---

def test_approach2_splits_at_marker():
    program = transform_approach2(parse_program("p(X) :- q(X, N), '$catch_rest'(N), r(X).\nq(1, 1).\nr(1)."))
    assert_variant_programs(program, """
        p(X) :- q(X, N), catch(r(X), N, fail).
        q(1, 1).
        r(1).
    """)


def test_approach2_fresh_identifier():
    program = transform_approach2(parse_program("p(X) :- q(X), '$catch_rest'(fresh), r(X), s.\nq(1).\nr(1).\ns."))
    assert_variant_programs(program, """
        p(X) :- q(X), btid([X], Id), catch((r(X), s), Id, fail).
        q(1).
        r(1).
        s.
    """)


def test_approach2_marker_at_end():
    program = transform_approach2(parse_program("p :- q, '$catch_rest'(t).\nq."))
    assert_variant_programs(program, "p :- q, catch(true, t, fail).\nq.")


@pytest.mark.parametrize("source, message", [
    ("p :- q.\nq.", "no '\\$catch_rest'/1 marker"),
    ("p :- ( q, '$catch_rest'(t) ; q ).\nq.", "top-level conjunct"),
    ("p :- '$catch_rest'(a), q, '$catch_rest'(b).\nq.", "more than once"),
])
def test_approach2_errors(source, message):
    with pytest.raises(TransformError, match=message):
        transform_approach2(parse_program(source))


def test_approach2_turns_marked_p2_into_p3():
    derived = transform_approach2(CORPUS["P2-marked"].program)
    reference = CORPUS["P3"].program
    assert len(derived) == len(reference)
    for a, b in zip(derived.clauses, reference.clauses):
        assert is_variant(a.as_term(), b.as_term()), pretty_print(derived)


# --- Native lowering and dispatch ---

def test_lower_native():
    program = lower_native(parse_program(SMALL))
    assert_variant_programs(program, """
        p(1) :- parent_choice(I), q(I).
        p(X) :- r(X).
        q(_).
        q(I) :- backjump(I).
        r(5).
    """)


def test_transform_dispatch():
    program = parse_program(SMALL)
    assert transform(program, spec(Approach.A1, "p/1")) == transform_approach1(program, spec(Approach.A1, "p/1"))
    assert TransformSpec("a1a", frozenset({"p/1"})).targets == frozenset({PredicateIndicator("p", 1)})


# --- Equivalence of native backjumping and its emulation ---

EQUIVALENCE_CASES = [
    ("pairs.pl", "pick_x(X, Y)", ("pick_x/2",), [["X = 1", "Y = 3"], ["X = 2", "Y = 3"]]),
    ("triples.pl", "pick_a(A, B, C, 6)", ("pick_a/4", "pick_b/5"), [["A = 1", "B = 2", "C = 3"]]),
    ("overshoot.pl", "step(0, 3, Path, none)", ("step/4",),
     [["Path = [1,1,1]"], ["Path = [1,2]"], ["Path = [2,1]"]]),
]


@pytest.mark.parametrize("name, query, targets, expected", EQUIVALENCE_CASES)
def test_approach1_matches_native_backjumping(run, lines, programs_dir, name, query, targets, expected):
    program = parse_program((programs_dir / name).read_text())
    native, native_events = run(lower_native(program), query, NATIVE)
    emulated, emulated_events = run(transform_approach1(program, spec(Approach.A1, *targets)), query)
    assert lines(native) == expected
    assert native.status is emulated.status is ExitStatus.EXHAUSTED
    assert same_answers(erase_identifiers(native.answers), erase_identifiers(emulated.answers))
    assert compare(project_user(native_events), project_user(emulated_events)).equal


@pytest.mark.parametrize("name, query, targets, expected", EQUIVALENCE_CASES)
def test_approach1a_matches_approach1(run, programs_dir, name, query, targets, expected):
    program = parse_program((programs_dir / name).read_text())
    indicators = [PredicateIndicator.parse(t) for t in targets]
    a1, a1_events = run(transform_approach1(program, spec(Approach.A1, *targets)), query)
    a1a, a1a_events = run(transform_approach1a(program, spec(Approach.A1A, *targets)), query)
    assert same_answers(erase_identifiers(a1.answers), erase_identifiers(a1a.answers))
    assert compare(
        erase_alternatives(project_user(a1_events), indicators),
        erase_alternatives(project_user(a1a_events), indicators),
    ).equal


def test_backjump_without_transformation_is_unknown_in_plain_mode(run, programs_dir):
    program = parse_program((programs_dir / "pairs.pl").read_text())
    result, _ = run(program, "pick_x(X, Y)")
    assert result.status is ExitStatus.ERROR


def _solve(program, mode, goal, max_answers=3):
    sink = ListSink()
    engine = Engine(program, mode, limits=Limits(max_steps=2_000_000, max_answers=max_answers), sink=sink,
                    debug=True)
    return engine.solve(goal), sink.events


def _random_instance(seed, smallest=4, sizes=5):
    num_vars = smallest + seed % sizes
    return gen_cnf(num_vars, 2 * num_vars + seed % 4, 2 + seed % 2, seed)


def _seeds(count, quick):
    return [seed if seed < quick else pytest.param(seed, marks=pytest.mark.slow) for seed in range(count)]


def assert_same_runs(first, second, hidden=()):
    (result1, events1), (result2, events2) = first, second
    assert result1.status is result2.status
    assert result1.status in (ExitStatus.EXHAUSTED, ExitStatus.ANSWER_LIMIT)
    assert same_answers(erase_identifiers(result1.answers), erase_identifiers(result2.answers))
    assert compare(erase_alternatives(project_user(events1), hidden),
                   erase_alternatives(project_user(events2), hidden)).equal


def assert_binary_emulation_matches_native(instance):
    solver = CORPUS["P1-binary"]
    goal, _ = to_query(instance, solver)
    runs = [_solve(*solver.prepare(mode), goal) for mode in (NATIVE, EngineMode.PLAIN)]
    assert_same_runs(*runs)
    return runs


@pytest.mark.parametrize("seed", _seeds(120, quick=10))
def test_binary_solver_emulation_matches_native(seed):
    assert_binary_emulation_matches_native(_random_instance(seed))


def test_binary_solver_emulation_scales_like_native():
    (native, native_events), (emulated, emulated_events) = assert_binary_emulation_matches_native(
        gen_cnf(7, 14, 3, 5))
    assert len(clause_tries(project_user(native_events))) == len(clause_tries(project_user(emulated_events)))
    assert emulated.answers


CORPUS_TARGETS = {"P1": "sat_cl/1"}


@pytest.mark.parametrize("name", list(CORPUS))
@pytest.mark.parametrize("seed", _seeds(100, quick=5))
def test_approach1a_matches_approach1_on_corpus(name, seed):
    solver = CORPUS[name]
    program = solver.program if name == "P1-binary" else solver.prepare()[0]
    target = CORPUS_TARGETS.get(name, "sat_cl/4")
    goal, _ = to_query(_random_instance(seed, smallest=3, sizes=4), solver)
    a1 = _solve(transform_approach1(program, spec(Approach.A1, target)), EngineMode.PLAIN, goal)
    a1a = _solve(transform_approach1a(program, spec(Approach.A1A, target)), EngineMode.PLAIN, goal)
    assert_same_runs(a1, a1a, hidden=[PredicateIndicator.parse(target)])
