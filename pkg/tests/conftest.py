from pathlib import Path

import pytest

from bkjump.engine import Engine, EngineMode, Limits
from bkjump.reader import parse_program, parse_term_with_names
from bkjump.terms import Program
from bkjump.trace import ListSink, TraceKind

PROGRAMS_DIR = Path(__file__).parent / "programs"


@pytest.fixture
def programs_dir():
    return PROGRAMS_DIR


@pytest.fixture
def run():
    """
    Runs a query in debug mode (every undo is checked against a store
    snapshot) and returns (result, events).
    """
    def _run(source, query, mode=EngineMode.PLAIN, *, max_answers=None, max_steps=1_000_000,
             occurs_check=False):
        program = source if isinstance(source, Program) else parse_program(source)
        goal, _ = parse_term_with_names(query)
        sink = ListSink()
        engine = Engine(program, mode, occurs_check=occurs_check,
                        limits=Limits(max_steps=max_steps, max_answers=max_answers), sink=sink, debug=True)
        return engine.solve(goal), sink.events
    return _run


@pytest.fixture
def brief():
    """Short tuples for event assertions: (kind, 'name/arity'[, clause])."""
    def _brief(events, kinds=None):
        out = []
        for event in events:
            if kinds is not None and event.kind not in kinds:
                continue
            item = (event.kind.value, str(event.pred) if event.pred else None)
            if event.kind is TraceKind.CLAUSE_TRY:
                item += (event.clause_index,)
            out.append(item)
        return out
    return _brief


@pytest.fixture
def lines():
    """Answer blocks as lists of 'Var = Term' strings."""
    def _lines(result):
        return [answer.format_lines() for answer in result.answers]
    return _lines
