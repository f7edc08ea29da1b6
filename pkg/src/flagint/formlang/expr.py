"""Parsed scalar expressions: evaluation and exact forward-mode partials."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from flagint.errors import DimensionError, FlagintError, InvalidInputError
from flagint.formlang import dual
from flagint.formlang.dual import Dual, DomainFault
from flagint.formlang.nodes import BinOp, Call, Const, Neg, Node, Num, Var, max_var_index, pretty, substitute
from flagint.formlang.parser import parse_node

# integer exponents up to this size use repeated squaring (exact for polynomials)
_MAX_INT_POWER = 1024

_CONST_VALUES = {"i": 1j, "pi": complex(math.pi)}

_FUNCS = {
    "sin": dual.sin,
    "cos": dual.cos,
    "exp": dual.exp,
    "log": dual.log,
    "sqrt": dual.sqrt,
    "re": dual.real,
    "im": dual.imag,
    "conj": dual.conj,
}


class EvaluationDomainError(FlagintError, ArithmeticError):
    """A singular operation (``log 0``, division by zero) inside an expression."""

    def __init__(self, subexpression: str, location: str | None = None) -> None:
        self.subexpression = subexpression
        self.location = location
        where = f" of {location}" if location else ""
        super().__init__(f"evaluation-domain error in subexpression {subexpression!r}{where}")


def _integer_exponent(value) -> int | None:
    if isinstance(value, Dual) or np.ndim(value) != 0:
        return None
    value = complex(value)
    if value.imag != 0.0 or not value.real.is_integer() or abs(value.real) > _MAX_INT_POWER:
        return None
    return int(value.real)


def _power(base, exponent):
    k = _integer_exponent(exponent)
    if k is not None:
        return dual.ipow(base, k)
    return dual.exp(exponent * dual.log(base))


def evaluate_node(node: Node, coords: Sequence):
    """Evaluate ``node`` with ``coords[k-1]`` bound to ``x<k>``.

    Coordinates may be complex scalars, complex arrays (vectorized
    evaluation) or :class:`Dual` values.  Singular operations raise
    :class:`EvaluationDomainError` naming the innermost failing subexpression.
    """
    try:
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            return coords[node.index - 1]
        if isinstance(node, Const):
            return _CONST_VALUES[node.name]
        if isinstance(node, Neg):
            return -evaluate_node(node.operand, coords)
        if isinstance(node, Call):
            return _FUNCS[node.func](evaluate_node(node.arg, coords))
        if isinstance(node, BinOp):
            left = evaluate_node(node.left, coords)
            right = evaluate_node(node.right, coords)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if node.op == "/":
                return left * dual.reciprocal(right)
            return _power(left, right)
    except DomainFault:
        raise EvaluationDomainError(pretty(node)) from None
    raise TypeError(f"not an expression node: {node!r}")


@dataclass(frozen=True)
class ScalarExpr:
    """An expression tree over the real chart coordinates ``x1..x<arity>``."""

    ast: Node
    arity: int

    def __post_init__(self) -> None:
        if max_var_index(self.ast) > self.arity:
            raise InvalidInputError("expression references a variable beyond its arity")

    def __str__(self) -> str:
        return pretty(self.ast)

    def __call__(self, *coords):
        """Vectorized evaluation; ``coords`` broadcast against each other."""
        if len(coords) != self.arity:
            raise DimensionError(f"expected {self.arity} coordinates, got {len(coords)}")
        value = evaluate_node(self.ast, coords)
        return value

    def substitute(self, replacements: Mapping[int, "ScalarExpr"], arity: int) -> "ScalarExpr":
        """Replace variables by expressions of a new arity (for restrictions)."""
        nodes = {k: e.ast for k, e in replacements.items()}
        return ScalarExpr(substitute(self.ast, nodes), arity)


def parse(text: str, arity: int, aliases: Mapping[str, int] | None = None) -> ScalarExpr:
    """Parse ``text`` into a :class:`ScalarExpr` of the given arity.

    ``aliases`` maps extra identifiers (``t``, ``t1``, ``t2``) to variable
    indices.
    """
    return ScalarExpr(parse_node(text, arity, aliases), arity)


def as_expr(value, arity: int, aliases: Mapping[str, int] | None = None) -> ScalarExpr:
    if isinstance(value, ScalarExpr):
        if value.arity != arity:
            raise DimensionError(f"expression arity {value.arity} != {arity}")
        return value
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        return parse(complex_literal(complex(value)), arity)
    return parse(value, arity, aliases)


def complex_literal(z: complex) -> str:
    """Expression text that evaluates exactly to ``z``."""
    re_part, im_part = float(z.real), float(z.imag)
    if not (math.isfinite(re_part) and math.isfinite(im_part)):
        raise InvalidInputError(f"non-finite literal {z!r}")
    real_text = repr(abs(re_part))
    if im_part == 0.0:
        return real_text if re_part >= 0 else f"-{real_text}"
    imag_text = repr(abs(im_part)) + "i"
    if re_part == 0.0:
        return imag_text if im_part > 0 else f"-{imag_text}"
    sign = "+" if im_part > 0 else "-"
    lead = real_text if re_part >= 0 else f"-{real_text}"
    return f"({lead} {sign} {imag_text})"


def _point(e: ScalarExpr, p) -> list[complex]:
    values = np.asarray(p, dtype=complex).reshape(-1)
    if values.size != e.arity:
        raise DimensionError(f"point has {values.size} coordinates, expression arity is {e.arity}")
    return [complex(v) for v in values]


def _check_index(e: ScalarExpr, k: int) -> int:
    if not 1 <= k <= e.arity:
        raise InvalidInputError(f"variable index {k} outside 1..{e.arity}")
    return k - 1


def evaluate(e: ScalarExpr, p) -> complex:
    """Value of ``e`` at the point ``p``."""
    return complex(evaluate_node(e.ast, _point(e, p)))


def partial(e: ScalarExpr, p, k: int) -> complex:
    """Exact first partial derivative with respect to ``x<k>`` (1-based)."""
    coords = _point(e, p)
    idx = _check_index(e, k)
    coords[idx] = dual.seeded(coords[idx], 0)
    _, d = dual.split(evaluate_node(e.ast, coords), 0)
    return complex(d)


def partial2(e: ScalarExpr, p, k: int, l: int) -> complex:
    """Exact second partial; symmetric because the index pair is canonicalized."""
    first, second = sorted((_check_index(e, k), _check_index(e, l)))
    coords: list = _point(e, p)
    coords[first] = dual.seeded(coords[first], 0)
    coords[second] = dual.seeded(coords[second], 1)
    _, outer = dual.split(evaluate_node(e.ast, coords), 1)
    _, inner = dual.split(outer, 0)
    return complex(inner)
