"""Load, validate and turn JSON configurations into library objects."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import jsonschema
import numpy as np

from flagint.errors import ConfigError, DimensionError
from flagint.forms import (
    ConnectionForm,
    FormFlag,
    GaugeFunction,
    TwoForm,
    curvature,
    preset_alpha_connection,
    preset_constant,
    preset_cr_connection,
    random_gauge_function,
    random_polynomial_connection,
)
from flagint.formlang import evaluate, parse
from flagint.lattice import HomotopySpec, PathSpec

from .schema import KIND_REQUIREMENTS, validator

Config = Mapping[str, Any]


def load(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}") from exc
    return data


def _schema_message(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{where}: {err.message}"


def effective_cases(cfg: Config) -> list[dict]:
    """Top-level fields merged under each entry of ``cases`` (or the config itself)."""
    base = {k: v for k, v in cfg.items() if k != "cases"}
    if "cases" not in cfg:
        return [base]
    return [{**base, **case} for case in cfg["cases"]]


def validate(cfg: Any) -> list[dict]:
    """Check the schema and per-kind requirements; return the effective cases."""
    v = validator()
    errors = sorted(v.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError(_schema_message(errors[0]))
    cases = effective_cases(cfg)
    need = jsonschema.Draft202012Validator(KIND_REQUIREMENTS[cfg["kind"]])
    for k, case in enumerate(cases):
        errs = list(need.iter_errors(case))
        if errs:
            missing = _schema_message(errs[0])
            prefix = f"case {k}: " if "cases" in cfg else ""
            raise ConfigError(f"{prefix}{cfg['kind']} config incomplete ({missing})")
    if cfg["kind"] == "converge":
        inner = dict(cfg["of"])
        if inner.get("kind") not in ("integrate-path", "integrate-surface"):
            raise ConfigError("converge wraps an integrate-path or integrate-surface config")
        inner.pop("levels", None)
        inner.pop("N", None)
        inner["levels"] = cfg["levels"]
        validate(inner)
    return cases


# ------------------------------------------------------------------ values


def complex_value(x) -> complex:
    """A JSON number, or expression text with no variables."""
    if isinstance(x, bool):
        raise ConfigError("expected a number or expression, got a boolean")
    if isinstance(x, (int, float)):
        return complex(x)
    return complex(evaluate(parse(str(x), 0), ()))


def matrix_value(rows) -> np.ndarray:
    if any(len(row) != len(rows) for row in rows):
        raise ConfigError(f"matrix must be square, got row lengths {[len(r) for r in rows]}")
    return np.array([[complex_value(x) for x in row] for row in rows], dtype=complex)


def expr_text(x) -> str:
    return repr(x) if isinstance(x, (int, float)) else str(x)


def _grid(rows) -> list[list[str]]:
    return [[expr_text(x) for x in row] for row in rows]


# ------------------------------------------------------------------ objects


def connection(spec: Config) -> ConnectionForm:
    if "components" in spec:
        return ConnectionForm.from_expressions([_grid(g) for g in spec["components"]])
    preset = spec["preset"]
    if preset == "cr":
        return preset_cr_connection(spec["f"])
    if preset == "alpha":
        return preset_alpha_connection(complex_value(spec["alpha"]))
    if preset == "constant":
        return preset_constant([matrix_value(M) for M in spec["matrices"]])
    return random_polynomial_connection(
        spec["seed"], spec["m"], spec["n"], spec.get("degree", 2), spec.get("scale", 1.0)
    )


def random_connections(spec: Config) -> list[ConnectionForm]:
    return [
        random_polynomial_connection(
            spec["seed"] + k, spec["m"], spec["n"], spec.get("degree", 2), spec.get("scale", 1.0)
        )
        for k in range(spec["count"])
    ]


def two_form(spec: Config, A: ConnectionForm | None) -> TwoForm:
    if "curvature_of" in spec:
        if A is None:
            raise ConfigError("two_form.curvature_of needs a connection")
        return curvature(A)
    if A is None:
        raise ConfigError("a flag needs a connection")
    comps = {}
    for key, grid in spec["components"].items():
        i, j = (int(s) - 1 for s in key.split(","))
        if i >= j:
            raise ConfigError(f"two_form component {key!r} must have i < j")
        comps[(i, j)] = _grid(grid)
    return TwoForm.from_expressions(A.m, A.n, comps)


def flag(cfg: Config, A: ConnectionForm | None = None) -> FormFlag:
    spec = cfg["flag"]
    if A is None:
        if "connection" in spec:
            A = connection(spec["connection"])
        elif "connection" in cfg:
            A = connection(cfg["connection"])
    omega = two_form(spec["two_form"], A)
    return FormFlag(2, omega, A)


def path(spec: Config) -> PathSpec:
    if "segment" in spec:
        p, q = spec["segment"]
        if len(p) != len(q):
            raise DimensionError("segment endpoints have different dimensions")
        return PathSpec.segment(p, q)
    return PathSpec.from_strings([expr_text(c) for c in spec["coords"]])


def homotopy(spec: Config) -> HomotopySpec:
    return HomotopySpec.from_strings([expr_text(c) for c in spec["coords"]])


def gauge(spec: Config, A: ConnectionForm) -> GaugeFunction:
    if "entries" in spec:
        g = GaugeFunction.from_expressions(_grid(spec["entries"]), A.m)
        if g.n != A.n:
            raise DimensionError(f"gauge function is {g.n}x{g.n}, connection algebra is {A.n}x{A.n}")
        return g
    r = spec["random"]
    return random_gauge_function(r["seed"], A.m, A.n, r.get("degree", 1), r.get("scale", 0.5))
