"""``flagint`` command line: run, validate, schema.

The first output line is always ``STATUS: <ok|tolerance-fail|config-error|domain-error>``
and the exit code is 0, 2, 3 or 4 respectively.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence, TextIO

import jsonschema

from flagint.errors import (
    ConfigError,
    InvalidInputError,
    NotIntegrableError,
    OutOfDomainError,
    SingularMatrixError,
)
from flagint.formlang import EvaluationDomainError, ParseError

from . import config as build
from .runner import Row, execute, thread_count
from .schema import CONFIG_SCHEMA

EXIT_OK = 0
EXIT_TOLERANCE = 2
EXIT_CONFIG = 3
EXIT_DOMAIN = 4

# checked in order: domain failures first so that numeric faults are never reported as config errors
DOMAIN_ERRORS = (EvaluationDomainError, OutOfDomainError, SingularMatrixError, NotIntegrableError)
CONFIG_ERRORS = (ConfigError, ParseError, InvalidInputError, jsonschema.ValidationError)

CSV_COLUMNS = ("level", "N", "residual", "estimated_order", "wall_ms")


def _cell(x: float) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return ""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def write_csv(rows: Sequence[Row], stream: TextIO, timing: bool) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([r.level, _cell(r.N), repr(float(r.residual)), _cell(r.estimated_order), _cell(r.wall_ms) if timing else ""])


def _emit(status: str, lines: Sequence[str], out: TextIO, quiet: bool) -> None:
    out.write(f"STATUS: {status}\n")
    if not quiet:
        for line in lines:
            out.write(line + "\n")


def run(config_path: str, csv_path: str | None = None, quiet: bool = False, timing: bool = False, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    try:
        cfg = build.load(config_path)
        cases = build.validate(cfg)
        result = execute(cfg, cases, thread_count())
    except DOMAIN_ERRORS as exc:
        _emit("domain-error", [f"error: {type(exc).__name__}: {exc}"], out, quiet)
        return EXIT_DOMAIN
    except CONFIG_ERRORS as exc:
        _emit("config-error", [f"error: {type(exc).__name__}: {exc}"], out, quiet)
        return EXIT_CONFIG

    if csv_path is not None:
        buf = io.StringIO()
        write_csv(result.rows, buf, timing)
        try:
            Path(csv_path).write_text(buf.getvalue(), encoding="utf-8")
        except OSError as exc:
            _emit("config-error", [f"error: cannot write CSV {csv_path}: {exc.strerror or exc}"], out, quiet)
            return EXIT_CONFIG
    status = "ok" if result.ok else "tolerance-fail"
    _emit(status, result.report_lines(), out, quiet)
    return EXIT_OK if result.ok else EXIT_TOLERANCE


def validate(config_path: str, out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    try:
        cfg = build.load(config_path)
        cases = build.validate(cfg)
    except CONFIG_ERRORS as exc:
        _emit("config-error", [f"error: {type(exc).__name__}: {exc}"], out, False)
        return EXIT_CONFIG
    _emit("ok", [f"kind: {cfg['kind']}", f"cases: {len(cases)}"], out, False)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors keep the STATUS contract instead of argparse's exit code 2
    def error(self, message: str):
        sys.stdout.write("STATUS: config-error\n")
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flagint", description="Multiplicative integrals of connections and 2-flags.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--csv", metavar="PATH", help="write convergence rows to PATH")
    p_run.add_argument("--quiet", action="store_true", help="print only the STATUS line")
    p_run.add_argument("--timing", action="store_true", help="fill the wall_ms CSV column")
    p_val = sub.add_parser("validate", help="check a config without running it")
    p_val.add_argument("config")
    sub.add_parser("schema", help="print the config JSON schema")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return run(args.config, args.csv, args.quiet, args.timing)
    if args.command == "validate":
        return validate(args.config)
    sys.stdout.write(json.dumps(CONFIG_SCHEMA, indent=2) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
