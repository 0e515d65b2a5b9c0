# bkjump/__init__.py
"""
BkJump: a small definite-clause engine with ISO catch/throw, native
backjumping, transformations that emulate backjumping with catch/throw,
traversal traces and a SAT workbench to compare them.
"""

from .engine import Answer, Engine, EngineMode, ExitStatus, Limits, SolveResult, solve
from .exceptions import (
    BkJumpError, InvalidArgumentError, PrologSyntaxError, TransformError, EngineError,
    UnknownPredicateError, MarkerLeakError, CyclicTermError, TraceFormatError,
    DimacsParseError, OracleRefusedError,
)
from .reader import parse_program, parse_term
from .terms import Atom, Clause, Compound, Int, PredicateIndicator, Program, Var
from .trace import TraceEvent, TraceKind, ListSink, StatsSink, FileSink
from .transform import Approach, TransformSpec, transform, lower_native, pretty_print
from .writer import write_term

__version__ = "0.1.0"

__all__ = [
    # Engine
    "Engine", "EngineMode", "ExitStatus", "Limits", "SolveResult", "Answer", "solve",
    # Terms and programs
    "Var", "Atom", "Int", "Compound", "Clause", "Program", "PredicateIndicator",
    "parse_program", "parse_term", "write_term",
    # Traces
    "TraceEvent", "TraceKind", "ListSink", "StatsSink", "FileSink",
    # Transformations
    "Approach", "TransformSpec", "transform", "lower_native", "pretty_print",
    # Exceptions
    "BkJumpError", "InvalidArgumentError", "PrologSyntaxError", "TransformError",
    "EngineError", "UnknownPredicateError", "MarkerLeakError", "CyclicTermError",
    "TraceFormatError", "DimacsParseError", "OracleRefusedError",
]


def load(path) -> Program:
    """
    Reads and parses a program file.

    Args:
        path: Path to a source file of clauses and directives
    """
    from .utils import read_source
    return parse_program(read_source(path))
