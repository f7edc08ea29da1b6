"""JSON schema for experiment configurations."""

from __future__ import annotations

import jsonschema

KINDS = (
    "integrate-path",
    "integrate-surface",
    "curvature-estimate",
    "check-flat",
    "check-bianchi",
    "cube-boundary",
    "monodromy",
    "word",
    "discrepancy-s1",
    "alpha-class",
    "converge",
)

_COMPLEX = {"type": ["string", "number"], "description": "number or expression text without variables"}
_EXPR = {"type": ["string", "number"]}
_GRID = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _EXPR}}
_MATRIX = {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _COMPLEX}}
_POINT = {"type": "array", "minItems": 1, "items": {"type": "number"}}
_POS_INT = {"type": "integer", "minimum": 1}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}
_LEVELS = {"type": "array", "minItems": 3, "items": _POS_INT}

_CONNECTION = {
    "oneOf": [
        {
            "type": "object",
            "required": ["components"],
            "properties": {"components": {"type": "array", "minItems": 1, "items": _GRID}},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["preset", "f"],
            "properties": {"preset": {"const": "cr"}, "f": {"type": "string"}},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["preset", "alpha"],
            "properties": {"preset": {"const": "alpha"}, "alpha": _COMPLEX},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["preset", "matrices"],
            "properties": {"preset": {"const": "constant"}, "matrices": {"type": "array", "minItems": 1, "items": _MATRIX}},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["preset", "seed", "m", "n"],
            "properties": {
                "preset": {"const": "random"},
                "seed": {"type": "integer"},
                "m": _POS_INT,
                "n": _POS_INT,
                "degree": {"type": "integer", "minimum": 0},
                "scale": {"type": "number", "minimum": 0},
            },
            "additionalProperties": False,
        },
    ]
}

_RANDOM_CONNECTIONS = {
    "type": "object",
    "required": ["count", "seed", "m", "n"],
    "properties": {
        "count": _POS_INT,
        "seed": {"type": "integer"},
        "m": _POS_INT,
        "n": _POS_INT,
        "degree": {"type": "integer", "minimum": 0},
        "scale": {"type": "number", "minimum": 0},
    },
    "additionalProperties": False,
}

_TWO_FORM = {
    "oneOf": [
        {
            "type": "object",
            "required": ["components"],
            "properties": {
                "components": {
                    "type": "object",
                    "propertyNames": {"pattern": "^[1-9][0-9]*,[1-9][0-9]*$"},
                    "additionalProperties": _GRID,
                }
            },
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["curvature_of"],
            "properties": {"curvature_of": {"const": "connection"}},
            "additionalProperties": False,
        },
    ]
}

_PATH = {
    "oneOf": [
        {
            "type": "object",
            "required": ["coords"],
            "properties": {"coords": {"type": "array", "minItems": 1, "items": _EXPR}},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["segment"],
            "properties": {"segment": {"type": "array", "minItems": 2, "maxItems": 2, "items": _POINT}},
            "additionalProperties": False,
        },
    ]
}

_HOMOTOPY = {
    "type": "object",
    "required": ["coords"],
    "properties": {"coords": {"type": "array", "minItems": 1, "items": _EXPR}},
    "additionalProperties": False,
}

_GAUGE = {
    "oneOf": [
        {
            "type": "object",
            "required": ["entries"],
            "properties": {"entries": _GRID},
            "additionalProperties": False,
        },
        {
            "type": "object",
            "required": ["random"],
            "properties": {
                "random": {
                    "type": "object",
                    "required": ["seed"],
                    "properties": {
                        "seed": {"type": "integer"},
                        "degree": {"type": "integer", "minimum": 0},
                        "scale": {"type": "number", "minimum": 0},
                    },
                    "additionalProperties": False,
                }
            },
            "additionalProperties": False,
        },
    ]
}

_FLAG = {
    "type": "object",
    "required": ["two_form"],
    "properties": {"two_form": _TWO_FORM, "connection": _CONNECTION},
    "additionalProperties": False,
}

_GRID_SPEC = {
    "type": "object",
    "properties": {"lo": {"type": "number"}, "hi": {"type": "number"}, "count": {"type": "integer", "minimum": 2}},
    "additionalProperties": False,
}

_TOLERANCE_CHECK = {
    "type": "object",
    "properties": {
        "value": _MATRIX,
        "log_value": _MATRIX,
        "identity": {"type": "boolean"},
        "curvature": {"type": "boolean"},
        "stokes": {"type": "boolean"},
        "reference_N": _POS_INT,
        "tol": {"type": "number", "minimum": 0},
        "images": {"type": "object", "additionalProperties": _MATRIX},
        "max": {"type": "number", "minimum": 0},
        "abs_of": _COMPLEX,
    },
    "additionalProperties": False,
}

# fields shared by the top level and by entries of "cases"
_FIELDS = {
    "name": {"type": "string"},
    "description": {"type": "string"},
    "connection": _CONNECTION,
    "random_connections": _RANDOM_CONNECTIONS,
    "flag": _FLAG,
    "path": _PATH,
    "compare_path": _PATH,
    "homotopy": _HOMOTOPY,
    "gauge": _GAUGE,
    "quadrature": {"enum": ["midpoint", "left"]},
    "N": _POS_INT,
    "Nsub": _POS_INT,
    "levels": _LEVELS,
    "split_at": _POS_INT,
    "point": _POINT,
    "center": _POINT,
    "base": _POINT,
    "axes": {"type": "array", "minItems": 2, "maxItems": 3, "items": {"type": "integer", "minimum": 0}, "uniqueItems": True},
    "eps": {"oneOf": [_POS_NUM, {"type": "array", "minItems": 1, "items": _POS_NUM}]},
    "grid": _GRID_SPEC,
    "points": {
        "type": "object",
        "properties": {"count": _POS_INT, "seed": {"type": "integer"}, "lo": {"type": "number"}, "hi": {"type": "number"}},
        "additionalProperties": False,
    },
    "loops": {"type": "object", "minProperties": 1, "additionalProperties": _PATH},
    "flat_tol": {"type": "number", "minimum": 0},
    "tol": {"type": "number", "minimum": 0},
    "expect": _TOLERANCE_CHECK,
    "expect_distance": _TOLERANCE_CHECK,
    "expect_flat": {"type": "boolean"},
    "min_residual": {"type": "number", "minimum": 0},
    "min_order": {"type": "number"},
    "min_slope": {"type": "number"},
    "covariance_tol": {"type": "number", "minimum": 0},
    "split_tol": {"type": "number", "minimum": 0},
    "generators": {"type": "object", "minProperties": 1, "additionalProperties": _MATRIX},
    "random_unimodular": {
        "type": "object",
        "required": ["count", "seed"],
        "properties": {"count": _POS_INT, "seed": {"type": "integer"}},
        "additionalProperties": False,
    },
    "words": {"type": "array", "minItems": 1, "items": {"type": "string"}},
    "conjugate_pairs": {
        "type": "array",
        "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "string"}},
    },
    "check_direct": {"type": "boolean"},
    "omega": _EXPR,
    "gauge_function": _EXPR,
    "value": _COMPLEX,
    "random_pairs": {
        "type": "object",
        "required": ["count", "seed"],
        "properties": {"count": _POS_INT, "seed": {"type": "integer"}, "modes": _POS_INT},
        "additionalProperties": False,
    },
    "alpha": _COMPLEX,
    "expect_representative": _COMPLEX,
    "expect_monodromy": _COMPLEX,
    "pairs": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["a", "b", "same"],
            "properties": {"a": _COMPLEX, "b": _COMPLEX, "same": {"type": "boolean"}},
            "additionalProperties": False,
        },
    },
    "of": {"type": "object"},
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "flagint experiment configuration",
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "cases": {"type": "array", "minItems": 1, "items": {"type": "object", "properties": _FIELDS, "additionalProperties": False}},
        **_FIELDS,
    },
    "additionalProperties": False,
}


def _any_required(*groups: list[str]) -> dict:
    return {"anyOf": [{"required": list(g)} for g in groups]}


# requirements checked on every effective case (top level merged with a case entry)
KIND_REQUIREMENTS: dict[str, dict] = {
    "integrate-path": {"allOf": [{"required": ["connection", "path"]}, _any_required(["N"], ["levels"])]},
    "integrate-surface": {"allOf": [{"required": ["flag", "homotopy"]}, _any_required(["N"], ["levels"])]},
    "curvature-estimate": {"required": ["connection", "point", "axes", "eps"]},
    "check-flat": {"required": ["connection"]},
    "check-bianchi": {"allOf": [_any_required(["connection"], ["random_connections"]), {"required": ["points"]}]},
    "cube-boundary": {
        "allOf": [{"required": ["center", "axes", "eps", "Nsub"]}, _any_required(["flag"], ["random_connections"])],
    },
    "monodromy": {"required": ["connection", "base", "loops", "N"]},
    "word": {"allOf": [{"required": ["words"]}, _any_required(["generators"], ["random_unimodular"])]},
    "discrepancy-s1": _any_required(["omega"], ["random_pairs"]),
    "alpha-class": _any_required(["alpha"], ["pairs"]),
    "converge": {"required": ["of", "levels"]},
}


def validator() -> jsonschema.protocols.Validator:
    return jsonschema.Draft202012Validator(CONFIG_SCHEMA)


def check_schema() -> None:
    jsonschema.Draft202012Validator.check_schema(CONFIG_SCHEMA)
