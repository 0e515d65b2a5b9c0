# bkjump/reader.py
"""
Reader for the small Prolog-like concrete syntax: clauses `Head.` and
`Head :- Body.`, directives `:- Goal.`, `%` and `/* */` comments, lists,
quoted atoms, integers and the fixed operator table in constants.
"""
from __future__ import annotations

import itertools
from typing import Iterator, NamedTuple

from . import constants
from .exceptions import InvalidArgumentError, PrologSyntaxError
from .terms import Atom, Clause, Compound, Int, Program, Term, Var, make_list

_PUNCT = "()[]|,"
_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", "0": "\0"}


class Token(NamedTuple):
    kind: str  # atom, qatom, var, int, punct, open_ct, end, eof
    text: str
    line: int
    column: int
    layout_before: bool


def _describe(token: Token) -> str:
    if token.kind == "eof":
        return "end of input"
    if token.kind == "end":
        return "end of clause '.'"
    return f"'{token.text}'"


def tokenize(text: str) -> Iterator[Token]:
    """Splits source text into tokens; raises PrologSyntaxError on bad characters."""
    pos, line, col = 0, 1, 1
    n = len(text)
    prev_kind = None

    def advance(count: int):
        nonlocal pos, line, col
        for _ in range(count):
            if text[pos] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            pos += 1

    while True:
        layout = False
        while pos < n:
            c = text[pos]
            if c.isspace():
                advance(1)
                layout = True
            elif c == "%":
                while pos < n and text[pos] != "\n":
                    advance(1)
                layout = True
            elif text.startswith("/*", pos):
                start_line, start_col = line, col
                end = text.find("*/", pos + 2)
                if end < 0:
                    raise PrologSyntaxError("unterminated block comment", start_line, start_col, "'*/'")
                advance(end + 2 - pos)
                layout = True
            else:
                break
        if pos >= n:
            yield Token("eof", "", line, col, layout)
            return

        c = text[pos]
        start_line, start_col, start = line, col, pos
        if c.isdigit():
            end = pos
            while end < n and text[end].isdigit():
                end += 1
            kind = "int"
        elif c == "_" or c.isupper():
            end = pos
            while end < n and (text[end].isalnum() or text[end] == "_"):
                end += 1
            kind = "var"
        elif c.isalpha():
            end = pos
            while end < n and (text[end].isalnum() or text[end] == "_"):
                end += 1
            kind = "atom"
        elif c == "'":
            chars = []
            end = pos + 1
            while True:
                if end >= n:
                    raise PrologSyntaxError("unterminated quoted atom", start_line, start_col, "closing quote")
                ch = text[end]
                if ch == "'":
                    if end + 1 < n and text[end + 1] == "'":
                        chars.append("'")
                        end += 2
                        continue
                    end += 1
                    break
                if ch == "\\" and end + 1 < n:
                    escaped = _ESCAPES.get(text[end + 1])
                    if escaped is None:
                        raise PrologSyntaxError(f"unknown escape '\\{text[end + 1]}'", start_line, start_col)
                    chars.append(escaped)
                    end += 2
                    continue
                chars.append(ch)
                end += 1
            advance(end - pos)
            prev_kind = "qatom"
            yield Token("qatom", "".join(chars), start_line, start_col, layout)
            continue
        elif c in _PUNCT:
            end = pos + 1
            if c == "(" and not layout and prev_kind in ("atom", "qatom"):
                kind = "open_ct"
            else:
                kind = "punct"
        elif c in constants.SOLO_CHARS:
            end = pos + 1
            kind = "atom"
        elif c == "." and (pos + 1 >= n or text[pos + 1].isspace() or text[pos + 1] == "%"):
            end = pos + 1
            kind = "end"
        elif c in constants.SYMBOL_CHARS:
            end = pos
            while end < n and text[end] in constants.SYMBOL_CHARS:
                if text[end] == "." and (end + 1 >= n or text[end + 1].isspace() or text[end + 1] == "%"):
                    break
                end += 1
            kind = "atom"
        else:
            raise PrologSyntaxError(f"unexpected character {c!r}", line, col)

        token_text = text[start:end]
        advance(end - pos)
        prev_kind = kind
        yield Token(kind, token_text, start_line, start_col, layout)


class Parser:
    """
    Operator-precedence parser over a token stream.

    Variable ids come from a shared counter so every clause read by one
    parser has its own disjoint set of variables.
    """

    def __init__(self, text: str, var_ids: Iterator[int] | None = None):
        self.tokens = list(tokenize(text))
        self.pos = 0
        self.var_ids = var_ids if var_ids is not None else itertools.count()
        self.varmap: dict[str, Var] = {}

    # --- token helpers ---

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.peek()
        if token.kind != "eof":
            self.pos += 1
        return token

    def error(self, message: str, token: Token | None = None, expected: str | None = None) -> PrologSyntaxError:
        token = token or self.peek()
        return PrologSyntaxError(message, token.line, token.column, expected)

    def expect_punct(self, text: str) -> Token:
        token = self.advance()
        if token.kind not in ("punct", "open_ct") or token.text != text:
            raise self.error(f"unexpected {_describe(token)}", token, f"'{text}'")
        return token

    def expect_end(self):
        token = self.advance()
        if token.kind != "end":
            raise self.error(f"unexpected {_describe(token)}", token, "operator or '.'")

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    def new_clause(self):
        self.varmap = {}

    def variable(self, name: str) -> Var:
        if name == "_":
            return Var(next(self.var_ids), "_")
        var = self.varmap.get(name)
        if var is None:
            var = self.varmap[name] = Var(next(self.var_ids), name)
        return var

    # --- grammar ---

    def parse(self, max_prec: int) -> tuple[Term, int]:
        left, left_prec = self.parse_primary(max_prec)
        return self.parse_infix(left, left_prec, max_prec)

    def parse_infix(self, left: Term, left_prec: int, max_prec: int) -> tuple[Term, int]:
        while True:
            token = self.peek()
            if token.kind == "atom" and token.text in constants.INFIX_OPERATORS:
                name = token.text
            elif token.kind == "punct" and token.text == ",":
                name = constants.CONJUNCTION
            else:
                break
            prec, kind = constants.INFIX_OPERATORS[name]
            if prec > max_prec:
                break
            left_max = prec if kind == "yfx" else prec - 1
            right_max = prec if kind == "xfy" else prec - 1
            if left_prec > left_max:
                break
            self.advance()
            right, _ = self.parse(right_max)
            left, left_prec = Compound(name, (left, right)), prec
        return left, left_prec

    def parse_primary(self, max_prec: int) -> tuple[Term, int]:
        token = self.advance()
        if token.kind == "int":
            return Int(int(token.text)), 0
        if token.kind == "var":
            return self.variable(token.text), 0
        if token.kind in ("punct", "open_ct") and token.text == "(":
            inner, _ = self.parse(constants.MAX_PRIORITY)
            self.expect_punct(")")
            return inner, 0
        if token.kind == "punct" and token.text == "[":
            return self.parse_list(), 0
        if token.kind in ("atom", "qatom"):
            nxt = self.peek()
            if nxt.kind == "open_ct":
                self.advance()
                args = self.parse_arguments()
                return Compound(token.text, tuple(args)), 0
            if token.kind == "atom" and token.text == "-" and nxt.kind == "int" and not nxt.layout_before:
                self.advance()
                return Int(-int(nxt.text)), 0
            return Atom(token.text), 0
        raise self.error(f"unexpected {_describe(token)}", token, "a term")

    def parse_arguments(self) -> list[Term]:
        args = [self.parse(constants.ARG_PRIORITY)[0]]
        while True:
            token = self.advance()
            if token.kind == "punct" and token.text == ",":
                args.append(self.parse(constants.ARG_PRIORITY)[0])
            elif token.kind == "punct" and token.text == ")":
                return args
            else:
                raise self.error(f"unexpected {_describe(token)}", token, "',' or ')'")

    def parse_list(self) -> Term:
        token = self.peek()
        if token.kind == "punct" and token.text == "]":
            self.advance()
            return Atom(constants.NIL)
        items = [self.parse(constants.ARG_PRIORITY)[0]]
        tail: Term = Atom(constants.NIL)
        while True:
            token = self.advance()
            if token.kind == "punct" and token.text == ",":
                items.append(self.parse(constants.ARG_PRIORITY)[0])
            elif token.kind == "punct" and token.text == "|":
                tail = self.parse(constants.ARG_PRIORITY)[0]
                self.expect_punct("]")
                break
            elif token.kind == "punct" and token.text == "]":
                break
            else:
                raise self.error(f"unexpected {_describe(token)}", token, "',', '|' or ']'")
        return make_list(items, tail)

    def parse_clause_or_directive(self) -> tuple[str, Term, Token]:
        """Reads one `Term.` or `:- Goal.`; returns (kind, term, first token)."""
        self.new_clause()
        first = self.peek()
        if first.kind == "atom" and first.text == constants.PREFIX_NECK:
            self.advance()
            goal, _ = self.parse(constants.MAX_PRIORITY - 1)
            self.expect_end()
            return "directive", goal, first
        term, _ = self.parse(constants.MAX_PRIORITY)
        self.expect_end()
        return "clause", term, first


def _check_body(body: Term, parser: Parser, token: Token):
    stack = [body]
    while stack:
        goal = stack.pop()
        if isinstance(goal, Int):
            raise parser.error(f"body goal {goal.value} is not callable", token, "a callable goal")
        if isinstance(goal, Compound) and (goal.functor, len(goal.args)) in constants.CONTROL_CONSTRUCTS:
            stack.extend(goal.args)


def _make_clause(term: Term, parser: Parser, token: Token) -> Clause:
    if isinstance(term, Compound) and term.functor == ":-" and len(term.args) == 2:
        head, body = term.args
    else:
        head, body = term, Atom(constants.TRUE)
    if not isinstance(head, (Atom, Compound)):
        raise parser.error("clause head must be an atom or compound term", token, "a callable head")
    _check_body(body, parser, token)
    try:
        return Clause(head, body)
    except InvalidArgumentError as e:
        raise parser.error(str(e), token) from None


def parse_program(text: str) -> Program:
    """
    Parses program text.

    Returns:
        A Program with clauses in textual order and directives kept apart.

    Raises:
        PrologSyntaxError: with line/column of the offending token.
    """
    parser = Parser(text)
    clauses: list[Clause] = []
    directives: list[Term] = []
    while not parser.at_eof():
        kind, term, first = parser.parse_clause_or_directive()
        if kind == "directive":
            directives.append(term)
        else:
            clauses.append(_make_clause(term, parser, first))
    return Program.from_clauses(clauses, directives)


def parse_term(text: str, var_ids: Iterator[int] | None = None) -> Term:
    """
    Parses a single term; a trailing end '.' is accepted.

    Raises:
        PrologSyntaxError: if the text is not exactly one term.
    """
    parser = Parser(text, var_ids)
    term, _ = parser.parse(constants.MAX_PRIORITY)
    if parser.peek().kind == "end":
        parser.advance()
    token = parser.peek()
    if token.kind != "eof":
        raise parser.error(f"unexpected {_describe(token)}", token, "end of term")
    return term


def parse_term_with_names(text: str) -> tuple[Term, dict[str, Var]]:
    """Like parse_term but also returns the named variables in order of appearance."""
    parser = Parser(text)
    term, _ = parser.parse(constants.MAX_PRIORITY)
    if parser.peek().kind == "end":
        parser.advance()
    token = parser.peek()
    if token.kind != "eof":
        raise parser.error(f"unexpected {_describe(token)}", token, "end of term")
    return term, dict(parser.varmap)
