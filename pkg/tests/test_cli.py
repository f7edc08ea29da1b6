from __future__ import annotations

import json
import subprocess
import sys

import jsonschema
import pytest

from flagint.cli import main
from flagint.cli.config import effective_cases, validate
from flagint.cli.schema import CONFIG_SCHEMA, check_schema
from flagint.errors import ConfigError

from conftest import CONFIGS

SHIPPED = sorted(CONFIGS.glob("*/*.json"))
VALID = [p for p in SHIPPED if not p.name.startswith("invalid")]


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg, encoding="utf-8")
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out.splitlines()


def test_schema_is_valid_and_printed(capsys):
    check_schema()
    code, lines = run(capsys, "schema")
    assert code == 0
    assert json.loads("\n".join(lines)) == CONFIG_SCHEMA


@pytest.mark.parametrize("path", VALID, ids=lambda p: p.name)
def test_shipped_configs_validate(capsys, path):
    code, lines = run(capsys, "validate", str(path))
    assert (code, lines[0]) == (0, "STATUS: ok")


def test_cr_example_is_flat(capsys):
    code, lines = run(capsys, "run", str(CONFIGS / "examples" / "cr_flat_square.json"))
    assert code == 0 and lines[0] == "STATUS: ok"
    assert any(line.startswith("max residual:") and float(line.split()[-1]) <= 1e-10 for line in lines)


def test_word_example_reports_equal_traces(capsys):
    code, lines = run(capsys, "run", str(CONFIGS / "examples" / "word_commutators.json"))
    assert code == 0
    traces = [line.rsplit("trace=", 1)[1] for line in lines if "trace=" in line]
    assert traces == ["3", "3"]


def test_missing_connection_is_config_error(capsys):
    code, lines = run(capsys, "run", str(CONFIGS / "examples" / "invalid_missing_connection.json"))
    assert code == 3 and lines[0] == "STATUS: config-error"
    assert "connection" in lines[1]


PATH_BASE = {"kind": "integrate-path", "path": {"segment": [[0, 0], [1, 0]]}, "N": 4}
CONST = {"preset": "constant", "matrices": [[[0, 1], [0, 0]], [[0, 0], [1, 0]]]}


@pytest.mark.parametrize(
    "cfg, code, status",
    [
        ({**PATH_BASE, "connection": CONST}, 0, "ok"),
        ({**PATH_BASE, "connection": CONST, "expect": {"identity": True}}, 2, "tolerance-fail"),
        ({**PATH_BASE, "connection": CONST, "N": 0}, 3, "config-error"),
        ({**PATH_BASE, "connection": CONST, "bogus": 1}, 3, "config-error"),
        ({**PATH_BASE, "connection": {"components": [[["x1 +", "0"], ["0", "0"]]] * 2}}, 3, "config-error"),
        ({**PATH_BASE, "connection": {"components": [[["1", "0"]]] * 2}}, 3, "config-error"),
        ({**PATH_BASE, "connection": CONST, "path": {"segment": [[0, 0, 0], [1, 0, 0]]}}, 3, "config-error"),
        (
            {"kind": "integrate-path", "connection": {"components": [[["1/x1"]]]}, "path": {"segment": [[-1], [1]]}, "N": 1},
            4,
            "domain-error",
        ),
        (
            {"kind": "curvature-estimate", "connection": CONST, "point": [0, 0], "axes": [0, 1], "eps": 3.0},
            4,
            "domain-error",
        ),
        (
            {
                "kind": "monodromy",
                "connection": {"preset": "random", "seed": 1, "m": 2, "n": 2},
                "base": [1, 0],
                "loops": {"g": {"coords": ["cos(2*pi*t)", "sin(2*pi*t)"]}},
                "N": 64,
            },
            4,
            "domain-error",
        ),
        (
            {"kind": "check-flat", "connection": {"preset": "cr", "f": "conj(x1 + i*x2)"}},
            2,
            "tolerance-fail",
        ),
        ({"kind": "converge", "of": {"kind": "word"}, "levels": [1, 2, 3]}, 3, "config-error"),
    ],
)
def test_exit_codes(capsys, tmp_path, cfg, code, status):
    got, lines = run(capsys, "run", write(tmp_path, cfg))
    assert (got, lines[0]) == (code, f"STATUS: {status}")


def test_unreadable_and_malformed_configs(capsys, tmp_path):
    assert run(capsys, "run", str(tmp_path / "missing.json"))[0] == 3
    code, lines = run(capsys, "run", write(tmp_path, "{not json"))
    assert code == 3 and "not valid JSON" in lines[1]


def test_usage_errors_keep_status_contract(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == 3
    assert capsys.readouterr().out.splitlines()[0] == "STATUS: config-error"


def test_quiet_prints_only_status(capsys):
    code, lines = run(capsys, "run", str(CONFIGS / "examples" / "cr_flat_square.json"), "--quiet")
    assert code == 0 and lines == ["STATUS: ok"]


def test_cases_merge_over_defaults():
    cfg = {"kind": "check-flat", "tol": 1e-3, "connection": CONST, "cases": [{}, {"tol": 5.0}]}
    cases = effective_cases(cfg)
    assert [c["tol"] for c in cases] == [1e-3, 5.0]
    assert all("cases" not in c for c in cases)


def test_validation_reports_case_index():
    with pytest.raises(ConfigError, match="case 1"):
        validate({"kind": "check-flat", "cases": [{"connection": CONST}, {}]})


def test_schema_rejects_unknown_kind():
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"kind": "nope"}, CONFIG_SCHEMA)


CSV_CONFIG = CONFIGS / "acceptance" / "03_cr_flatness.json"
CONVERGE = CONFIGS / "examples" / "converge_path.json"


def test_csv_is_deterministic_across_runs_and_threads(capsys, tmp_path, monkeypatch):
    outputs = []
    for threads in ("1", "4", "4"):
        monkeypatch.setenv("FLAGINT_THREADS", threads)
        csv_path = tmp_path / f"out{len(outputs)}.csv"
        assert run(capsys, "run", str(CONFIGS / "acceptance" / "05_cube_boundary_decay.json"), "--csv", str(csv_path))[0] == 0
        outputs.append(csv_path.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    header, *rows = outputs[0].decode().splitlines()
    assert header == "level,N,residual,estimated_order,wall_ms"
    assert rows[0].split(",")[0] == "0/0" and all(r.endswith(",") for r in rows)


def test_multi_case_report_order_independent_of_threads(capsys, monkeypatch):
    reports = []
    for threads in ("1", "3"):
        monkeypatch.setenv("FLAGINT_THREADS", threads)
        reports.append(run(capsys, "run", str(CSV_CONFIG)))
    assert reports[0] == reports[1]


def test_timing_fills_wall_ms(capsys, tmp_path):
    csv_path = tmp_path / "t.csv"
    run(capsys, "run", str(CONVERGE), "--csv", str(csv_path), "--timing")
    rows = csv_path.read_text().splitlines()[1:]
    assert len(rows) == 5 and all(float(r.split(",")[-1]) >= 0 for r in rows)
    # the finest level is the reference, its residual is exactly zero
    assert rows[-1].split(",")[2] == "0.0"


def test_bad_thread_setting_is_config_error(capsys, monkeypatch):
    monkeypatch.setenv("FLAGINT_THREADS", "zero")
    assert run(capsys, "run", str(CSV_CONFIG))[0] == 3


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "flagint", "validate", str(CSV_CONFIG)], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0 and proc.stdout.startswith("STATUS: ok")
