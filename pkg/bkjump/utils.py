# bkjump/utils.py
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Union

from .exceptions import InvalidArgumentError
from .terms import Compound, PredicateIndicator, Program, iter_subterms

PathLike = Union[str, Path]


def read_source(path: PathLike) -> str:
    """Reads a UTF-8 source file, reporting a missing or unreadable file as InvalidArgumentError."""
    file_path = Path(path)
    if not file_path.is_file():
        raise InvalidArgumentError(f"File not found: {file_path}")
    try:
        return file_path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise InvalidArgumentError(f"Could not read {file_path}: {e}") from e


def parse_indicators(texts: Iterable[str]) -> frozenset[PredicateIndicator]:
    """Parses 'name/arity' strings; comma-separated lists are accepted too."""
    result = set()
    for text in texts:
        for part in text.split(","):
            if part.strip():
                result.add(PredicateIndicator.parse(part))
    return frozenset(result)


def calls_predicate(program: Program, name: str, arity: int) -> bool:
    """True when some clause body mentions a name/arity goal (or term)."""
    for clause in program.clauses:
        for sub in iter_subterms(clause.body):
            if isinstance(sub, Compound) and sub.functor == name and len(sub.args) == arity:
                return True
    return False
