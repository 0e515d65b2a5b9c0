# bkjump/satlab.py
"""
SAT workbench around the solver programs in bkjump/corpus: CNF instances,
query construction, a brute-force oracle, a seeded generator, DIMACS
import/export, answer validation and a clause-try benchmark.
"""
from __future__ import annotations

import csv
import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import IO, Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from . import constants
from .engine import Engine, EngineMode, ExitStatus, Limits, SolveResult
from .exceptions import DimacsParseError, InvalidArgumentError, OracleRefusedError
from .reader import parse_program
from .terms import Atom, Compound, Int, PredicateIndicator, Program, Term, Var, make_list, make_pair
from .trace import StatsSink
from .transform import Approach, TransformSpec, lower_native, transform_approach1, transform_approach2

logger = logging.getLogger(__name__)

Literal = tuple[bool, int]


@dataclass(frozen=True)
class CnfInstance:
    """A CNF formula over variables 1..num_vars; literals are (polarity, index)."""
    num_vars: int
    clauses: tuple[tuple[Literal, ...], ...]
    name: str = ""

    def __post_init__(self):
        clauses = tuple(tuple((bool(pol), int(index)) for pol, index in clause) for clause in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.num_vars < 0:
            raise InvalidArgumentError(f"num_vars must be >= 0, got {self.num_vars}")
        for clause in clauses:
            for _, index in clause:
                if not 1 <= index <= self.num_vars:
                    raise InvalidArgumentError(f"Variable index {index} outside 1..{self.num_vars}")

    def is_satisfied_by(self, model: Sequence[bool]) -> bool:
        return all(any(model[index - 1] == pol for pol, index in clause) for clause in self.clauses)


# --- Corpus ---

class ValueForm:
    POLARITY = "polarity"  # X = true
    NUMBERED = "numbered"  # X = (N, true)
    BINARY = "binary"      # X = (K, Id, true)


@dataclass(frozen=True)
class CorpusProgram:
    """
    A solver program shipped with the package.

    `derived` marks programs written for this package rather than taken
    from the published listings (the binarized solver).
    """
    name: str
    asset: str
    query_arity: int
    value_form: str
    derived: bool = False
    description: str = ""

    def source(self) -> str:
        return resources.files("bkjump").joinpath("corpus", self.asset).read_text(encoding="utf-8")

    @cached_property
    def program(self) -> Program:
        return parse_program(self.source())

    def prepare(self, mode: EngineMode = EngineMode.PLAIN) -> tuple[Program, EngineMode]:
        """
        The program as it runs in the given mode.

        Annotated programs are lowered for the native engine or transformed
        for the plain one: '$my_id' programs with approach a1 on sat_cl/4,
        '$catch_rest' programs with approach a2.
        """
        mode = EngineMode(mode)
        if self.name == "P1-binary":
            if mode is EngineMode.NATIVE_BACKJUMP:
                return lower_native(self.program), mode
            spec = TransformSpec(Approach.A1, frozenset({PredicateIndicator("sat_cl", 4)}))
            return transform_approach1(self.program, spec), mode
        if self.name == "P2-marked":
            return transform_approach2(self.program), mode
        return self.program, mode


CORPUS: dict[str, CorpusProgram] = {p.name: p for p in (
    CorpusProgram("P1", "p1.pl", 1, ValueForm.POLARITY, description="naive solver"),
    CorpusProgram("P2", "p2.pl", 2, ValueForm.NUMBERED, description="numbered variables"),
    CorpusProgram("P3", "p3.pl", 2, ValueForm.NUMBERED, description="numbered variables with backjumping"),
    CorpusProgram("P2-marked", "p2_marked.pl", 2, ValueForm.NUMBERED,
                  description="P2 with the throwing clause and a split marker"),
    CorpusProgram("P2-ite", "p2_ite.pl", 2, ValueForm.NUMBERED, description="P2 using if-then-else"),
    CorpusProgram("P3-ite", "p3_ite.pl", 2, ValueForm.NUMBERED, description="P3 using if-then-else"),
    CorpusProgram("P1-binary", "p1_binary.pl", 2, ValueForm.BINARY, derived=True,
                  description="binarized P1 with backjump annotations"),
)}


def corpus_program(name: str | CorpusProgram) -> CorpusProgram:
    """Looks a corpus program up by name, case-insensitively."""
    if isinstance(name, CorpusProgram):
        return name
    for key, program in CORPUS.items():
        if key.lower() == name.strip().lower():
            return program
    raise InvalidArgumentError(f"Unknown corpus program '{name}'. Choose from: {', '.join(CORPUS)}")


# --- Queries and answers ---

def to_query(instance: CnfInstance, program: str | CorpusProgram) -> tuple[Term, list[Var]]:
    """
    Builds the solver goal for an instance.

    Returns:
        (goal, variables) where variables[i] is the logic variable X<i+1>
        standing for propositional variable i+1.
    """
    program = corpus_program(program)
    variables = [Var(i, f"X{i + 1}") for i in range(instance.num_vars)]
    formula = make_list(
        make_list(make_pair(Atom("true" if pol else "false"), variables[index - 1]) for pol, index in clause)
        for clause in instance.clauses
    )
    if program.query_arity == 1:
        return Compound("sat_cnf", (formula,)), variables
    return Compound("sat_cnf", (formula, Int(0))), variables


def _comma_items(term: Term) -> list[Term]:
    items = []
    while isinstance(term, Compound) and term.functor == constants.CONJUNCTION and len(term.args) == 2:
        items.append(term.args[0])
        term = term.args[1]
    items.append(term)
    return items


def _polarity(term: Term) -> bool | None:
    if term == Atom("true"):
        return True
    if term == Atom("false"):
        return False
    return None


def decode_model(instance: CnfInstance, values: Mapping[str, Term] | Sequence[Term]) -> list[bool | None]:
    """
    Reads the truth value of every variable from an answer.

    values is either an answer (mapping X1..Xn to terms) or the terms in
    variable order. Values may be a bare polarity or a ','-tuple ending
    in one; unbound variables give None.
    """
    if isinstance(values, Mapping):
        terms = [values.get(f"X{i}") for i in range(1, instance.num_vars + 1)]
    else:
        terms = list(values)
    model: list[bool | None] = []
    for term in terms:
        if term is None or isinstance(term, Var):
            model.append(None)
        else:
            model.append(_polarity(_comma_items(term)[-1]))
    return model


def validate_answer(instance: CnfInstance, values: Mapping[str, Term] | Sequence[Term],
                    program: str | CorpusProgram) -> list[str]:
    """
    Checks an answer of a solver run; returns the problems found (empty when valid).

    Every clause must contain a literal whose polarity equals its variable's
    value (Pol-Pol for the naive solver, lv-(n,lv) for numbered ones). For
    numbered values the numbers must be exactly 1..k without gaps or repeats.
    """
    program = corpus_program(program)
    if isinstance(values, Mapping):
        terms = [values.get(f"X{i}") for i in range(1, instance.num_vars + 1)]
    else:
        terms = list(values)
    problems = []
    numbers = []
    for index, term in enumerate(terms, start=1):
        if term is None or isinstance(term, Var):
            continue
        items = _comma_items(term)
        expected = {ValueForm.POLARITY: 1, ValueForm.NUMBERED: 2, ValueForm.BINARY: 3}[program.value_form]
        if len(items) != expected or _polarity(items[-1]) is None:
            problems.append(f"X{index} has malformed value {items}")
            continue
        if expected > 1:
            if not isinstance(items[0], Int):
                problems.append(f"X{index} has no assignment number")
            else:
                numbers.append(items[0].value)
    model = decode_model(instance, terms)
    for number, clause in enumerate(instance.clauses, start=1):
        if not any(model[index - 1] == pol for pol, index in clause):
            problems.append(f"clause {number} has no literal matching its variable's value")
    if program.value_form != ValueForm.POLARITY and sorted(numbers) != list(range(1, len(numbers) + 1)):
        problems.append(f"assignment numbers {sorted(numbers)} are not 1..{len(numbers)}")
    return problems


# --- Oracle and generator ---

class OracleResult(NamedTuple):
    satisfiable: bool
    model: tuple[bool, ...] | None = None


def brute_force(instance: CnfInstance) -> OracleResult:
    """
    Tries every assignment, variable 1 most significant, true before false.

    Raises:
        OracleRefusedError: above ORACLE_MAX_VARS variables.
    """
    if instance.num_vars > constants.ORACLE_MAX_VARS:
        raise OracleRefusedError(
            f"Brute force refused for {instance.num_vars} variables (limit {constants.ORACLE_MAX_VARS})"
        )
    for model in itertools.product((True, False), repeat=instance.num_vars):
        if instance.is_satisfied_by(model):
            return OracleResult(True, model)
    return OracleResult(False)


def gen_cnf(num_vars: int, num_clauses: int, clause_len: int, seed: int, name: str = "") -> CnfInstance:
    """Random CNF: clause_len distinct variables per clause, random polarities, deterministic in seed."""
    if not 1 <= clause_len <= num_vars:
        raise InvalidArgumentError(f"clause_len must be in 1..{num_vars}, got {clause_len}")
    if num_clauses < 0:
        raise InvalidArgumentError(f"num_clauses must be >= 0, got {num_clauses}")
    rng = np.random.default_rng(seed)
    clauses = []
    for _ in range(num_clauses):
        indices = rng.choice(num_vars, size=clause_len, replace=False) + 1
        polarities = rng.integers(0, 2, size=clause_len)
        clauses.append(tuple((bool(p), int(i)) for p, i in zip(polarities, indices)))
    return CnfInstance(num_vars, tuple(clauses), name or f"seed{seed}")


def generate_instances(count: int, num_vars: int, num_clauses: int, clause_len: int, seed: int) -> list[CnfInstance]:
    """count instances from consecutive seeds starting at seed."""
    return [gen_cnf(num_vars, num_clauses, clause_len, seed + i, f"s{seed + i}") for i in range(count)]


def enumerate_instances(num_vars: int, max_clauses: int, max_len: int) -> Iterator[CnfInstance]:
    """
    Every formula over variables 1..num_vars with at most max_clauses
    clauses of 1..max_len distinct variables, clauses taken as a multiset.
    """
    literals_by_len = []
    for length in range(1, min(max_len, num_vars) + 1):
        for indices in itertools.combinations(range(1, num_vars + 1), length):
            for pols in itertools.product((True, False), repeat=length):
                literals_by_len.append(tuple(zip(pols, indices)))
    count = 0
    for size in range(max_clauses + 1):
        for clauses in itertools.combinations_with_replacement(literals_by_len, size):
            count += 1
            yield CnfInstance(num_vars, clauses, f"e{count}")


# --- DIMACS ---

def dimacs_import(text: str) -> CnfInstance:
    """
    Parses DIMACS CNF text.

    Raises:
        DimacsParseError: on a malformed or missing header, a literal out of
            range, a clause count mismatch or a clause without its 0 terminator.
    """
    num_vars = num_clauses = None
    clauses: list[tuple[Literal, ...]] = []
    current: list[Literal] = []
    last_line = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        last_line = number
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if num_vars is not None:
                raise DimacsParseError("duplicate header", number)
            if len(parts) != 4 or parts[1] != "cnf" or not parts[2].isdigit() or not parts[3].isdigit():
                raise DimacsParseError(f"malformed header '{line}' (expected 'p cnf VARS CLAUSES')", number)
            num_vars, num_clauses = int(parts[2]), int(parts[3])
            continue
        if num_vars is None:
            raise DimacsParseError("clause before the 'p cnf' header", number)
        for token in line.split():
            try:
                literal = int(token)
            except ValueError:
                raise DimacsParseError(f"'{token}' is not an integer literal", number) from None
            if literal == 0:
                clauses.append(tuple(current))
                current = []
            elif abs(literal) > num_vars:
                raise DimacsParseError(f"literal {literal} outside 1..{num_vars}", number)
            else:
                current.append((literal > 0, abs(literal)))
    if num_vars is None:
        raise DimacsParseError("missing 'p cnf' header", last_line)
    if current:
        raise DimacsParseError("last clause is missing its 0 terminator", last_line)
    if len(clauses) != num_clauses:
        raise DimacsParseError(f"header announces {num_clauses} clauses, found {len(clauses)}", last_line)
    return CnfInstance(num_vars, tuple(clauses))


def dimacs_export(instance: CnfInstance) -> str:
    lines = [f"p cnf {instance.num_vars} {len(instance.clauses)}"]
    for clause in instance.clauses:
        lines.append(" ".join([str(i if pol else -i) for pol, i in clause] + ["0"]))
    return "\n".join(lines) + "\n"


# --- Running and benchmarking ---

@dataclass
class SatOutcome:
    verdict: str  # sat | unsat | limit | error
    result: SolveResult
    stats: object
    model: list[bool | None] | None = None


def solve_instance(instance: CnfInstance, program: str | CorpusProgram,
                   mode: EngineMode = EngineMode.PLAIN, *,
                   max_steps: int = constants.DEFAULT_MAX_STEPS, debug: bool = False) -> SatOutcome:
    """Runs one corpus program on one instance up to its first answer."""
    program = corpus_program(program)
    prepared, mode = program.prepare(mode)
    goal, _ = to_query(instance, program)
    sink = StatsSink()
    engine = Engine(prepared, mode, limits=Limits(max_steps=max_steps, max_answers=1), sink=sink, debug=debug)
    result = engine.solve(goal)
    if result.answers:
        return SatOutcome("sat", result, sink.stats, decode_model(instance, result.answers[0]))
    if result.status is ExitStatus.EXHAUSTED:
        return SatOutcome("unsat", result, sink.stats)
    if result.status is ExitStatus.STEP_LIMIT:
        return SatOutcome("limit", result, sink.stats)
    return SatOutcome("error", result, sink.stats)


@dataclass(frozen=True)
class BenchRow:
    instance: str
    program: str
    sat: str
    clause_tries: int
    backjumps: int
    steps: int
    micros: int

    def as_tuple(self) -> tuple:
        return (self.instance, self.program, self.sat, self.clause_tries, self.backjumps, self.steps, self.micros)


@dataclass
class BenchReport:
    rows: list[BenchRow] = field(default_factory=list)
    disagreements: list[tuple[str, str, str, str]] = field(default_factory=list)  # instance, program, got, oracle

    def rows_for(self, program: str) -> list[BenchRow]:
        return [r for r in self.rows if r.program == program]


def _bench_one(instance_id: str, instance: CnfInstance, programs: Sequence[CorpusProgram], mode: EngineMode,
               max_steps: int, timing: bool) -> list[BenchRow]:
    rows = []
    for program in programs:
        started = time.perf_counter()
        outcome = solve_instance(instance, program, mode, max_steps=max_steps)
        micros = int((time.perf_counter() - started) * 1_000_000) if timing else 0
        stats = outcome.stats
        if outcome.verdict in ("limit", "error"):
            logger.warning("Instance %s, program %s: run stopped with status %s",
                           instance_id, program.name, outcome.result.describe())
        rows.append(BenchRow(instance_id, program.name, outcome.verdict,
                             stats.clause_tries, stats.backjumps + stats.catches, outcome.result.steps, micros))
    return rows


def bench(instances: Iterable[CnfInstance], programs: Iterable[str | CorpusProgram] = ("P2", "P3"),
          mode: EngineMode = EngineMode.PLAIN, *, max_steps: int = constants.DEFAULT_MAX_STEPS,
          oracle: bool = True, timing: bool = True, jobs: int = 1) -> BenchReport:
    """
    Runs every program on every instance.

    Rows come out ordered by instance, then program, whatever `jobs` is.
    When `oracle` is set, verdicts on instances small enough for
    brute_force are cross-checked and mismatches collected in
    `disagreements`. Rows that hit the step limit are kept and flagged
    as `limit`; runs that ended in an engine error are flagged as `error`.
    Neither counts as a disagreement.
    """
    programs = [corpus_program(p) for p in programs]
    mode = EngineMode(mode)
    instances = list(instances)
    ids = [inst.name or str(number) for number, inst in enumerate(instances, start=1)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_bench_one, i, inst, programs, mode, max_steps, timing)
                       for i, inst in zip(ids, instances)]
            per_instance = [f.result() for f in futures]
    else:
        per_instance = [_bench_one(i, inst, programs, mode, max_steps, timing) for i, inst in zip(ids, instances)]

    report = BenchReport()
    for instance_id, instance, rows in zip(ids, instances, per_instance):
        report.rows.extend(rows)
        if not oracle or instance.num_vars > constants.ORACLE_MAX_VARS:
            continue
        expected = "sat" if brute_force(instance).satisfiable else "unsat"
        for row in rows:
            if row.sat in ("sat", "unsat") and row.sat != expected:
                logger.warning("Oracle disagreement on %s: %s says %s, brute force says %s",
                               instance_id, row.program, row.sat, expected)
                report.disagreements.append((instance_id, row.program, row.sat, expected))
    return report


def write_bench_csv(rows: Iterable[BenchRow], stream: IO[str]):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(constants.BENCH_CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_tuple())


__all__ = [
    "CnfInstance", "CorpusProgram", "CORPUS", "corpus_program", "to_query", "decode_model",
    "validate_answer", "OracleResult", "brute_force", "gen_cnf", "generate_instances",
    "enumerate_instances", "dimacs_import", "dimacs_export", "SatOutcome", "solve_instance",
    "BenchRow", "BenchReport", "bench", "write_bench_csv",
]
