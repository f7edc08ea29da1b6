"""Tokenizer and recursive-descent parser for the scalar expression language.

Grammar (precedence ``^`` > unary ``-`` > ``* /`` > ``+ -``; ``^`` is right
associative, everything else left associative)::

    expr    = term { ("+" | "-") term } ;
    term    = unary { ("*" | "/") unary } ;
    unary   = "-" unary | power ;
    power   = atom [ "^" unary ] ;
    atom    = number | imag | ident | func "(" expr ")" | "(" expr ")" ;
    number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
    imag    = number "i" ;
    ident   = "x" digits | "i" | "pi" | alias ;
    func    = "sin" | "cos" | "exp" | "log" | "sqrt" | "re" | "im" | "conj" ;
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from flagint.errors import FlagintError, InvalidInputError
from flagint.formlang.nodes import (
    CONSTANTS,
    FUNCTIONS,
    BinOp,
    Call,
    Const,
    Neg,
    Node,
    Num,
    Var,
)


class ParseError(FlagintError, ValueError):
    """Base class for parse failures; ``offset`` is a UTF-8 byte offset."""

    def __init__(self, message: str, text: str, pos: int) -> None:
        self.offset = len(text[:pos].encode("utf-8"))
        self.text = text
        super().__init__(f"{message} at offset {self.offset}")


class ExpressionSyntaxError(ParseError):
    def __init__(self, text: str, pos: int, expected: set[str], found: str) -> None:
        self.expected = frozenset(expected)
        self.found = found
        wanted = ", ".join(sorted(expected))
        super().__init__(f"syntax error: expected one of {{{wanted}}}, found {found}", text, pos)


class UnknownIdentifierError(ParseError):
    def __init__(self, text: str, pos: int, name: str) -> None:
        self.name = name
        super().__init__(f"unknown identifier {name!r}", text, pos)


class ArityError(ParseError):
    def __init__(self, text: str, pos: int, name: str, arity: int) -> None:
        self.name = name
        self.arity = arity
        super().__init__(f"variable {name!r} out of range for arity {arity}", text, pos)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "imag", "ident", "op", "(", ")", "eof"
    text: str
    pos: int


_NUMBER = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_VAR = re.compile(r"x(\d+)\Z")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        m = _NUMBER.match(text, pos)
        if m:
            end = m.end()
            if end < len(text) and text[end] == "i" and not _continues_ident(text, end + 1):
                tokens.append(Token("imag", m.group(), pos))
                pos = end + 1
            else:
                tokens.append(Token("num", m.group(), pos))
                pos = end
            continue
        m = _IDENT.match(text, pos)
        if m:
            tokens.append(Token("ident", m.group(), pos))
            pos = m.end()
            continue
        if ch in "+-*/^":
            tokens.append(Token("op", ch, pos))
        elif ch in "()":
            tokens.append(Token(ch, ch, pos))
        else:
            raise ExpressionSyntaxError(text, pos, {"expression"}, repr(ch))
        pos += 1
    tokens.append(Token("eof", "", len(text)))
    return tokens


def _continues_ident(text: str, pos: int) -> bool:
    return pos < len(text) and (text[pos].isalnum() or text[pos] == "_")


class _Parser:
    def __init__(self, text: str, arity: int, aliases: Mapping[str, int]) -> None:
        self.text = text
        self.arity = arity
        self.aliases = dict(aliases)
        self.tokens = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _fail(self, expected: set[str]):
        tok = self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ExpressionSyntaxError(self.text, tok.pos, expected, found)

    def _is_op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "eof":
            self._fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self) -> Node:
        node = self.term()
        while self._is_op("+", "-"):
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self._is_op("*", "/"):
            op = self.tok.text
            self.i += 1
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self._is_op("-"):
            self.i += 1
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self._is_op("^"):
            self.i += 1
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(complex(float(tok.text), 0.0))
        if tok.kind == "imag":
            self.i += 1
            return Num(complex(0.0, float(tok.text)))
        if tok.kind == "(":
            self.i += 1
            node = self.expr()
            if self.tok.kind != ")":
                self._fail({")", "+", "-", "*", "/", "^"})
            self.i += 1
            return node
        if tok.kind == "ident":
            return self._identifier(tok)
        self._fail({"number", "identifier", "(", "-"})

    def _identifier(self, tok: Token) -> Node:
        name = tok.text
        self.i += 1
        if name in FUNCTIONS:
            if self.tok.kind != "(":
                self._fail({"("})
            self.i += 1
            arg = self.expr()
            if self.tok.kind != ")":
                self._fail({")", "+", "-", "*", "/", "^"})
            self.i += 1
            return Call(name, arg)
        if name in CONSTANTS:
            return Const(name)
        if name in self.aliases:
            index = self.aliases[name]
        else:
            m = _VAR.match(name)
            if m is None:
                raise UnknownIdentifierError(self.text, tok.pos, name)
            index = int(m.group(1))
        if not 1 <= index <= self.arity:
            raise ArityError(self.text, tok.pos, name, self.arity)
        return Var(index)


def parse_node(text: str, arity: int, aliases: Mapping[str, int] | None = None) -> Node:
    if not isinstance(text, str):
        raise InvalidInputError(f"expression must be a string, got {type(text).__name__}")
    if arity < 0:
        raise InvalidInputError("arity must be non-negative")
    return _Parser(text, arity, aliases or {}).parse()
