# bkjump/cli.py
"""
Command-line driver.

    bkjump run PROGRAM -q QUERY [--mode plain|backjump] [--transform a1|a1a|a2 --target p/N ...]
    bkjump transform PROGRAM --transform a1|a1a|a2 [--target p/N ...]
    bkjump sat solve [FILE.cnf] [--program P3] [--vars N --clauses M --len K --seed S]
    bkjump sat bench [FILE.cnf ...] [--program P2 --program P3] [--count C] [--out rows.csv]

Answers, programs and CSV rows go to standard output; diagnostics go to
standard error through logging.
"""
from __future__ import annotations

import argparse
import logging
import sys
from contextlib import nullcontext
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__, constants
from .engine import Engine, EngineMode, ExitStatus, Limits
from .exceptions import BkJumpError, InvalidArgumentError
from .reader import parse_program, parse_term_with_names
from .satlab import (
    bench, brute_force, corpus_program, dimacs_import, gen_cnf, generate_instances,
    solve_instance, validate_answer, write_bench_csv,
)
from .terms import PredicateIndicator, Program
from .trace import FileSink
from .transform import Approach, TransformSpec, lower_native, pretty_print, transform
from .utils import calls_predicate, parse_indicators, read_source

logger = logging.getLogger(__name__)

TRANSFORM_NONE = "none"


@dataclass
class RunConfig:
    """Validated settings of one `run` invocation."""
    program_path: Path
    query: str
    mode: EngineMode = EngineMode.PLAIN
    transform: str = TRANSFORM_NONE
    targets: frozenset[PredicateIndicator] = field(default_factory=frozenset)
    limits: Limits = field(default_factory=Limits)
    trace_path: Path | None = None
    occurs_check: bool = False

    def validate(self, program: Program | None = None):
        """
        Raises:
            InvalidArgumentError: a1/a1a without targets, or a plain-mode run
                of a program that calls backjump/1 without a1/a1a.
        """
        if self.transform not in (TRANSFORM_NONE, *(a.value for a in Approach)):
            raise InvalidArgumentError(f"Unknown transformation '{self.transform}'")
        if self.transform in (Approach.A1.value, Approach.A1A.value) and not self.targets:
            raise InvalidArgumentError(f"--transform {self.transform} needs at least one --target name/arity")
        if not self.query.strip():
            raise InvalidArgumentError("Empty query")
        if (program is not None and self.mode is EngineMode.PLAIN
                and self.transform not in (Approach.A1.value, Approach.A1A.value)
                and calls_predicate(program, "backjump", 1)):
            raise InvalidArgumentError(
                "The program calls backjump/1; use --mode backjump or --transform a1/a1a with --mode plain"
            )

    def transform_spec(self) -> TransformSpec | None:
        if self.transform == TRANSFORM_NONE:
            return None
        return TransformSpec(Approach(self.transform), self.targets)


def _load_program(path) -> Program:
    program = parse_program(read_source(path))
    if program.directives:
        logger.warning("%s: %d directive(s) are not executed", path, len(program.directives))
    return program


# --- run ---

def cmd_run(config: RunConfig, out=None) -> int:
    out = out or sys.stdout
    program = _load_program(config.program_path)
    config.validate(program)
    spec = config.transform_spec()
    if spec is not None:
        program = transform(program, spec)
    elif config.mode is EngineMode.NATIVE_BACKJUMP:
        program = lower_native(program)
    query, _ = parse_term_with_names(config.query)

    sink_context = FileSink(config.trace_path) if config.trace_path else nullcontext()
    with sink_context as sink:
        engine = Engine(program, config.mode, occurs_check=config.occurs_check, limits=config.limits, sink=sink)
        result = engine.solve(query)

    for number, answer in enumerate(result.answers):
        if number:
            print(";", file=out)
        for line in answer.format_lines() or ["true"]:
            print(line, file=out)
    if not result.answers:
        print("false", file=out)
    print(f"status: {result.describe()}", file=out)

    if result.status in (ExitStatus.ERROR, ExitStatus.UNCAUGHT, ExitStatus.STEP_LIMIT):
        return constants.EXIT_ERROR
    return constants.EXIT_OK if result.answers else constants.EXIT_NO_ANSWERS


# --- transform ---

def cmd_transform(program_path, approach: str, targets: frozenset[PredicateIndicator], out=None) -> int:
    out = out or sys.stdout
    program = _load_program(program_path)
    spec = TransformSpec(approach, targets)
    out.write(pretty_print(transform(program, spec)))
    return constants.EXIT_OK


# --- sat ---

def _instance_from_args(args):
    if args.files:
        return dimacs_import(read_source(args.files[0]))
    return gen_cnf(args.vars, args.clauses, args.len, args.seed)


def cmd_sat_solve(args, out=None) -> int:
    out = out or sys.stdout
    instance = _instance_from_args(args)
    program = corpus_program((args.program or ["P3"])[0])
    outcome = solve_instance(instance, program, EngineMode(args.mode), max_steps=args.max_steps)

    if outcome.verdict == "sat":
        print("SAT", file=out)
        for index, value in enumerate(outcome.model, start=1):
            print(f"X{index} = {'any' if value is None else str(value).lower()}", file=out)
    elif outcome.verdict == "unsat":
        print("UNSAT", file=out)
    else:
        print(f"UNKNOWN ({outcome.result.describe()})", file=out)
        return constants.EXIT_ERROR

    exit_code = constants.EXIT_OK if outcome.verdict == "sat" else constants.EXIT_NO_ANSWERS
    if outcome.verdict == "sat":
        problems = validate_answer(instance, outcome.result.answers[0], program)
        for problem in problems:
            logger.error("Invalid answer from %s: %s", program.name, problem)
        if problems:
            exit_code = constants.EXIT_ORACLE_DISAGREEMENT
    if not args.no_oracle and instance.num_vars <= constants.ORACLE_MAX_VARS:
        expected = "sat" if brute_force(instance).satisfiable else "unsat"
        if expected != outcome.verdict:
            logger.error("Oracle disagreement: %s says %s, brute force says %s",
                         program.name, outcome.verdict, expected)
            exit_code = constants.EXIT_ORACLE_DISAGREEMENT
    return exit_code


def cmd_sat_bench(args, out=None) -> int:
    if args.files:
        instances = []
        for path in args.files:
            instance = dimacs_import(read_source(path))
            instances.append(replace(instance, name=Path(path).stem))
    else:
        instances = generate_instances(args.count, args.vars, args.clauses, args.len, args.seed)
    programs = args.program or ["P2", "P3"]
    report = bench(instances, programs, EngineMode(args.mode), max_steps=args.max_steps, oracle=not args.no_oracle)

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as stream:
            write_bench_csv(report.rows, stream)
    else:
        write_bench_csv(report.rows, out or sys.stdout)
    if report.disagreements:
        logger.error("%d oracle disagreement(s)", len(report.disagreements))
        return constants.EXIT_ORACLE_DISAGREEMENT
    return constants.EXIT_OK


# --- Argument parsing ---

def _add_engine_options(parser: argparse.ArgumentParser):
    parser.add_argument("--mode", choices=[m.value for m in EngineMode], default=EngineMode.PLAIN.value,
                        help="plain engine or native backjumping (default: plain)")
    parser.add_argument("--max-steps", type=int, default=constants.DEFAULT_MAX_STEPS,
                        help="stop after this many Call/Redo steps")


def _add_generator_options(parser: argparse.ArgumentParser):
    parser.add_argument("files", nargs="*", metavar="FILE", help="DIMACS CNF file(s)")
    parser.add_argument("--program", action="append", metavar="NAME",
                        help="corpus program (P1, P2, P3, P2-marked, P2-ite, P3-ite, P1-binary)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--vars", type=int, default=constants.BENCH_DEFAULT_VARS)
    parser.add_argument("--clauses", type=int, default=constants.BENCH_DEFAULT_CLAUSES)
    parser.add_argument("--len", type=int, default=constants.BENCH_DEFAULT_CLAUSE_LEN)
    parser.add_argument("--no-oracle", action="store_true", help="skip the brute-force cross-check")
    _add_engine_options(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bkjump", description="Backjumping laboratory for definite programs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run a query against a program")
    run.add_argument("program", type=Path)
    run.add_argument("--query", "-q", required=True)
    run.add_argument("--transform", choices=[TRANSFORM_NONE, *(a.value for a in Approach)], default=TRANSFORM_NONE)
    run.add_argument("--target", action="append", default=[], metavar="NAME/ARITY")
    run.add_argument("--trace", type=Path, metavar="PATH", help="write the event trace to PATH")
    run.add_argument("--max-answers", type=int, help="stop after this many answers")
    run.add_argument("--all", action="store_true", help="enumerate all answers")
    run.add_argument("--occurs-check", action="store_true")
    _add_engine_options(run)

    trans = commands.add_parser("transform", help="print a transformed program")
    trans.add_argument("program", type=Path)
    trans.add_argument("--transform", choices=[a.value for a in Approach], required=True)
    trans.add_argument("--target", action="append", default=[], metavar="NAME/ARITY")

    sat = commands.add_parser("sat", help="SAT workbench")
    sat_commands = sat.add_subparsers(dest="sat_command", required=True)
    solve_parser = sat_commands.add_parser("solve", help="solve one instance with a corpus program")
    _add_generator_options(solve_parser)
    bench_parser = sat_commands.add_parser("bench", help="compare corpus programs on many instances")
    _add_generator_options(bench_parser)
    bench_parser.add_argument("--count", type=int, default=10)
    bench_parser.add_argument("--out", type=Path, metavar="CSV")
    return parser


def _run_config(args) -> RunConfig:
    if args.all:
        max_answers = None
    elif args.max_answers is not None:
        max_answers = args.max_answers
    else:
        max_answers = 1
    return RunConfig(
        program_path=args.program,
        query=args.query,
        mode=EngineMode(args.mode),
        transform=args.transform,
        targets=parse_indicators(args.target),
        limits=Limits(max_steps=args.max_steps, max_answers=max_answers),
        trace_path=args.trace,
        occurs_check=args.occurs_check,
    )


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            config = _run_config(args)
            config.validate()
            return cmd_run(config)
        if args.command == "transform":
            return cmd_transform(args.program, args.transform, parse_indicators(args.target))
        if args.sat_command == "solve":
            return cmd_sat_solve(args)
        return cmd_sat_bench(args)
    except BkJumpError as e:
        logger.error("%s", e)
        return constants.EXIT_ERROR
    except OSError as e:
        logger.error("I/O error: %s", e)
        return constants.EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
