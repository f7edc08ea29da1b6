"""Expression tree nodes and the canonical pretty-printer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt", "re", "im", "conj")
CONSTANTS = ("i", "pi")
BINARY_OPS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Num:
    """Numeric literal: a non-negative real or a non-negative imaginary number."""

    value: complex


@dataclass(frozen=True)
class Var:
    index: int  # 1-based chart coordinate x<index>


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]

_ADD, _MUL, _NEG, _POW, _ATOM = 1, 2, 3, 4, 5
_OP_PREC = {"+": _ADD, "-": _ADD, "*": _MUL, "/": _MUL, "^": _POW}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _OP_PREC[node.op]
    if isinstance(node, Neg):
        return _NEG
    return _ATOM


def _format_real(x: float) -> str:
    # integral values below 2^53 print without a fractional part; both forms parse identically
    if x.is_integer() and abs(x) < 2.0**53:
        return str(int(x))
    return repr(x)


def _format_number(value: complex) -> str:
    if value.imag == 0.0:
        return _format_real(float(value.real))
    if value.real == 0.0:
        return _format_real(float(value.imag)) + "i"
    raise ValueError(f"literal {value!r} is not representable as a single token")


def pretty(node: Node) -> str:
    """Render ``node`` with minimal parentheses; ``parse(pretty(n)) == n``."""
    if isinstance(node, Num):
        return _format_number(node.value)
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _NEG)
    if isinstance(node, BinOp):
        prec = _OP_PREC[node.op]
        if node.op == "^":
            left = _wrap(node.left, _ATOM)
            right = _wrap(node.right, _NEG)
            return f"{left}^{right}"
        left = _wrap(node.left, prec)
        right = _wrap(node.right, prec + 1)
        if prec == _ADD:
            return f"{left} {node.op} {right}"
        return f"{left}*{right}" if node.op == "*" else f"{left}/{right}"
    raise TypeError(f"not an expression node: {node!r}")


def _wrap(node: Node, min_prec: int) -> str:
    text = pretty(node)
    return text if _prec(node) >= min_prec else f"({text})"


def max_var_index(node: Node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Neg):
        return max_var_index(node.operand)
    if isinstance(node, BinOp):
        return max(max_var_index(node.left), max_var_index(node.right))
    if isinstance(node, Call):
        return max_var_index(node.arg)
    return 0


def substitute(node: Node, replacements: dict[int, Node]) -> Node:
    """Replace ``Var(k)`` by ``replacements[k]`` wherever ``k`` is a key."""
    if isinstance(node, Var):
        return replacements.get(node.index, node)
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, replacements))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, replacements), substitute(node.right, replacements))
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, replacements))
    return node
