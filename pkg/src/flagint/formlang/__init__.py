"""Scalar expression language: parser, pretty-printer, evaluator, exact partials."""

from __future__ import annotations

from flagint.formlang.expr import (
    EvaluationDomainError,
    ScalarExpr,
    as_expr,
    complex_literal,
    evaluate,
    evaluate_node,
    parse,
    partial,
    partial2,
)
from flagint.formlang.nodes import pretty
from flagint.formlang.parser import (
    ArityError,
    ExpressionSyntaxError,
    ParseError,
    UnknownIdentifierError,
)

__all__ = [
    "ArityError",
    "EvaluationDomainError",
    "ExpressionSyntaxError",
    "ParseError",
    "ScalarExpr",
    "UnknownIdentifierError",
    "as_expr",
    "complex_literal",
    "evaluate",
    "evaluate_node",
    "parse",
    "partial",
    "partial2",
    "pretty",
]
