import io

import pytest

from bkjump.engine import Engine, EngineMode, ExitStatus, Limits
from bkjump.exceptions import TraceFormatError, TraceWriteError
from bkjump.reader import parse_program, parse_term
from bkjump.satlab import corpus_program, gen_cnf, to_query
from bkjump.terms import Atom, Compound, Int, PredicateIndicator
from bkjump.trace import (
    FileSink, ListSink, StatsSink, TeeSink, TraceEvent, TraceKind, check_well_nested, clause_tries, compare,
    erase_alternatives, erase_identifiers, format_event, parse_event, project_user, read_trace, record,
    same_answers, stats, write_trace,
)

P = PredicateIndicator("p", 1)
FACTS = "p(1). p(2). p(3)."


def ev(step, kind, pred=P, node=1, clause=None, ball=None):
    return TraceEvent(step, kind, pred, node, clause, ball, 0)


def test_format_event_fields():
    event = TraceEvent(3, TraceKind.CLAUSE_TRY, P, 1, 2, None, 0)
    assert format_event(event) == "3\tClauseTry\tp/1\t1\t2\t-\t0"
    throw = TraceEvent(7, TraceKind.THROW, PredicateIndicator(">", 2), None, None, Compound("f", (Atom("a"),)), 2)
    assert format_event(throw) == "7\tThrow\t'>'/2\t-\t-\tf(a)\t2"


def test_parse_event_reads_formatted_line():
    line = "7\tThrow\t'>'/2\t-\t-\tf(a)\t2"
    event = parse_event(line)
    assert event.pred == PredicateIndicator(">", 2)
    assert event.ball == Compound("f", (Atom("a"),))
    assert event.node is None and event.depth == 2


def test_parse_event_rejects_bad_lines():
    with pytest.raises(TraceFormatError, match="line 4: expected 7 fields"):
        parse_event("1\tCall\tp/1", 4)
    with pytest.raises(TraceFormatError):
        parse_event("1\tJump\tp/1\t1\t-\t-\t0")
    with pytest.raises(TraceFormatError):
        parse_event("x\tCall\tp/1\t1\t-\t-\t0")


def test_trace_file_reads_back(run, tmp_path):
    _, events = run(FACTS + "\nq(X) :- catch(p(X), _, true), X > 2, throw(done).", "catch(q(X), B, true)")
    path = tmp_path / "run.trace"
    write_trace(events, path)
    assert path.read_text().splitlines()[0] == "ldtrace 1"
    loaded = read_trace(path)
    assert len(loaded) == len(events)
    assert compare(loaded, events).equal
    assert [e.step for e in loaded] == [e.step for e in events]


def test_read_trace_requires_header():
    with pytest.raises(TraceFormatError, match="header"):
        read_trace(["1\tCall\tp/1\t1\t-\t-\t0"])
    with pytest.raises(TraceFormatError):
        read_trace([])


def test_file_sink_leaves_stream_open():
    stream = io.StringIO()
    with FileSink(stream) as sink:
        sink.record(ev(1, TraceKind.CALL))
    assert stream.getvalue() == "ldtrace 1\n1\tCall\tp/1\t1\t-\t-\t0\n"
    assert not stream.closed


def test_engine_streams_to_file(tmp_path):
    path = tmp_path / "facts.trace"
    with FileSink(path) as sink:
        Engine(parse_program(FACTS), sink=sink).solve(parse_term("p(X)"))
    kinds = [e.kind for e in read_trace(path)]
    assert kinds.count(TraceKind.CLAUSE_TRY) == 3


def test_failing_sink_is_reported():
    class Broken:
        def record(self, event):
            raise OSError("disk full")

    with pytest.raises(TraceWriteError, match="disk full"):
        record(Broken(), ev(1, TraceKind.CALL))


def test_failing_sink_stops_the_run():
    class Broken:
        def record(self, event):
            raise OSError("disk full")

    result = Engine(parse_program(FACTS), sink=Broken()).solve(parse_term("p(X)"))
    assert result.status is ExitStatus.ERROR
    assert "disk full" in result.message


def test_tee_and_stats_sinks():
    events, counts = ListSink(), StatsSink()
    Engine(parse_program(FACTS), sink=TeeSink(events, counts)).solve(parse_term("p(X)"))
    assert len(events) == 10
    assert counts.stats == stats(events.events)
    assert counts.stats.as_dict() == {
        "calls": 1, "redos": 2, "fails": 1, "clause_tries": 3, "throws": 0, "catches": 0,
        "backjumps": 0, "max_depth": 0,
    }


def test_stats_count_backjumps(run):
    source = "p(1, I) :- parent_choice(I).\np(2, I) :- parent_choice(I)."
    _, events = run(source, "p(X, I), backjump(I)", EngineMode.NATIVE_BACKJUMP)
    assert stats(events).backjumps == 2
    assert len(clause_tries(events)) == 2


def test_project_user_keeps_user_ports(run):
    _, events = run(FACTS + "\nq(X) :- catch(p(X), _, true), X > 1.", "q(X)")
    projected = project_user(events)
    assert {str(e.pred) for e in projected} == {"q/1", "p/1"}
    assert all(e.kind not in (TraceKind.THROW, TraceKind.CATCH) for e in projected)


def test_erase_alternatives():
    trace = [
        ev(1, TraceKind.CALL), ev(2, TraceKind.CLAUSE_TRY, clause=1), ev(3, TraceKind.EXIT),
        ev(4, TraceKind.REDO), ev(5, TraceKind.CLAUSE_TRY, clause=2), ev(6, TraceKind.FAIL),
    ]
    kept = erase_alternatives(trace, [("p", 1)])
    assert [e.kind for e in kept] == [TraceKind.CALL, TraceKind.EXIT, TraceKind.FAIL]


def test_compare_relabels_nodes():
    first = [ev(1, TraceKind.CALL, node=4), ev(2, TraceKind.CLAUSE_TRY, node=4, clause=1)]
    second = [ev(10, TraceKind.CALL, node=9), ev(12, TraceKind.CLAUSE_TRY, node=9, clause=1)]
    assert compare(first, second).equal


def test_compare_reports_first_divergence():
    first = [ev(1, TraceKind.CALL), ev(2, TraceKind.CLAUSE_TRY, clause=1)]
    second = [ev(1, TraceKind.CALL), ev(2, TraceKind.CLAUSE_TRY, clause=2)]
    verdict = compare(first, second)
    assert not verdict.equal
    assert verdict.divergence == (2, 2)
    assert compare(first, first[:1]).divergence == (2, None)


def test_compare_distinguishes_node_structure():
    first = [ev(1, TraceKind.CALL, node=1), ev(2, TraceKind.CALL, node=2)]
    second = [ev(1, TraceKind.CALL, node=1), ev(2, TraceKind.CALL, node=1)]
    assert not compare(first, second).equal


@pytest.mark.parametrize("trace, message", [
    ([ev(2, TraceKind.CALL), ev(1, TraceKind.CLAUSE_TRY, clause=1)], "steps must increase"),
    ([ev(1, TraceKind.CALL), ev(2, TraceKind.CALL)], "called twice"),
    ([ev(1, TraceKind.EXIT)], "before its Call"),
    ([ev(1, TraceKind.CALL), ev(2, TraceKind.EXIT)], "without a clause"),
    ([ev(1, TraceKind.CALL), ev(2, TraceKind.REDO)], "before any clause try"),
    ([ev(1, TraceKind.CALL), ev(2, TraceKind.CLAUSE_TRY, clause=2), ev(3, TraceKind.CLAUSE_TRY, clause=1)],
     "clause order"),
    ([ev(1, TraceKind.CALL), ev(2, TraceKind.CLAUSE_TRY, clause=1), ev(3, TraceKind.EXIT),
      ev(4, TraceKind.CLAUSE_TRY, clause=2)], "without Redo"),
    ([ev(1, TraceKind.CALL), ev(2, TraceKind.FAIL), ev(3, TraceKind.REDO)], "after its Fail"),
    ([ev(1, TraceKind.BACKJUMP)], "not live"),
])
def test_check_well_nested_violations(trace, message):
    with pytest.raises(TraceFormatError, match=message):
        check_well_nested(trace)


def test_redo_after_body_failure_is_well_nested(run):
    _, events = run("p(X) :- q(X), X > 1.\np(5).\nq(1).", "p(X)")
    check_well_nested(events)


def test_erase_identifiers_and_same_answers():
    native = [{"I": Compound("$node", (Int(5),)), "X": Atom("a")}]
    emulated = [{"I": Compound("$bj", (Int(9), Atom("[]"))), "X": Atom("a")}]
    erased_native, erased_emulated = erase_identifiers(native), erase_identifiers(emulated)
    assert erased_native == erased_emulated == [{"I": Compound("$id", (Int(0),)), "X": Atom("a")}]
    assert same_answers(erased_native, erased_emulated)
    assert not same_answers(erased_native, [])
    assert not same_answers([{"X": Atom("a")}], [{"X": Atom("b")}])


@pytest.mark.parametrize("name, mode", [
    ("P3", EngineMode.PLAIN), ("P1-binary", EngineMode.PLAIN), ("P1-binary", EngineMode.NATIVE_BACKJUMP),
])
def test_trace_files_are_reproducible(tmp_path, name, mode):
    instance = gen_cnf(6, 14, 3, 11)
    program, mode = corpus_program(name).prepare(mode)
    goal, _ = to_query(instance, name)
    paths = [tmp_path / "first.trace", tmp_path / "second.trace"]
    for path in paths:
        with FileSink(path) as sink:
            Engine(program, mode, limits=Limits(max_answers=2), sink=sink).solve(goal)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert len(paths[0].read_bytes().splitlines()) > 10
