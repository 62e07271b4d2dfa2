"""Command-line front end: exit codes, report schemas, determinism."""

import json

import jsonschema
import pytest

from finslerkit.cli import REPORT_SCHEMAS, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def test_validate_pass_and_fail(capsys):
    code, out = run_cli(capsys, "validate", "--metric", "linear",
                        "--model", "flat-product")
    assert code == 0
    report = json.loads(out)
    jsonschema.validate(report, REPORT_SCHEMAS["validate"])
    assert report["passed"] is True

    code, out = run_cli(capsys, "validate", "--metric", "quartic-test")
    assert code == 1
    report = json.loads(out)
    assert report["passed"] is False
    worst = report["result"]["reports"][0]["worst_direction"]
    assert len(worst) == 2


def test_validate_cross02_polar(capsys):
    code, out = run_cli(capsys, "validate", "--metric", "cross02",
                        "--model", "polar-plane")
    assert code == 0


def test_unknown_model_is_config_error(capsys):
    assert main(["validate", "--metric", "linear", "--model", "nope"]) == 2


def test_unknown_quantity_is_config_error(capsys):
    assert main(["curvature", "--metric", "cross02", "--model", "flat-product",
                 "--quantity", "bogus"]) == 2


def test_curvature_zero_spray_rows(capsys):
    code, out = run_cli(capsys, "curvature", "--metric", "cross02",
                        "--model", "flat-product", "--quantity", "G",
                        "--points", "2", "--directions", "2")
    assert code == 0
    report = json.loads(out)
    jsonschema.validate(report, REPORT_SCHEMAS["curvature"])
    assert all(r["value"] == 0.0 for r in report["result"]["rows"])


def test_curvature_csv_columns(capsys):
    code, out = run_cli(capsys, "curvature", "--metric", "cross02",
                        "--model", "polar-plane", "--quantity", "landsberg",
                        "--points", "1", "--directions", "2", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "x,y,quantity,value,method,error_estimate"
    assert len(lines) == 3
    values = [float(ln.split(",")[3]) for ln in lines[1:]]
    assert max(values) > 1e-6


def test_classify_report(capsys):
    code, out = run_cli(capsys, "classify", "--metric", "cross02",
                        "--model", "flat-product")
    assert code == 0
    report = json.loads(out)
    jsonschema.validate(report, REPORT_SCHEMAS["classify"])
    assert report["result"]["flags"] == {
        "riemannian": False, "berwald": True, "landsberg": True, "s_vanishing": True,
    }


def test_verify_targets_pass(capsys):
    for target, extra in [
        ("example33", []),
        ("example34", []),
        ("theorem41", ["--model", "polar-plane", "--metric", "cross02"]),
        ("lemma51", ["--metric", "cross02", "--xi", "block-rotation:30deg"]),
        ("prop32", ["--model", "flat-product"]),
    ]:
        code, out = run_cli(capsys, "verify", target, *extra)
        assert code == 0, f"{target} exited {code}"
        report = json.loads(out)
        jsonschema.validate(report, REPORT_SCHEMAS["verify"])
        assert report["passed"] is True


def test_verify_lemma81_linear_is_config_error(capsys):
    assert main(["verify", "lemma81", "--metric", "linear"]) == 2


def test_reports_are_deterministic(tmp_path, capsys):
    args = ["classify", "--metric", "cross02", "--model", "polar-plane"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(
        'metric = "cross02"\nmodel = "flat-product"\n\n[run]\ndirections = 8\n'
    )
    code, out = run_cli(capsys, "validate", "--config", str(cfg))
    assert code == 0
    report = json.loads(out)
    assert report["config"]["run"]["directions"] == 8
    assert report["config"]["model"] == "flat-product"

    code, out = run_cli(capsys, "validate", "--config", str(cfg),
                        "--model", "polar-plane")
    assert code == 0
    report = json.loads(out)
    assert report["config"]["model"] == "polar-plane"


def test_custom_polynomial_model_config(tmp_path, capsys):
    cfg = tmp_path / "custom.toml"
    cfg.write_text(
        """
metric = "cross02"

[model]
name = "custom"
dimension = 2
split = [1, 1]

[[model.a_field.terms]]
entry = [1, 1]
coeff = 1.0
powers = [0, 0]

[[model.a_field.terms]]
entry = [2, 2]
coeff = 1.0
powers = [0, 0]

[[model.b_field.terms]]
entry = [2, 2]
coeff = 1.0
powers = [0, 0]
"""
    )
    code, out = run_cli(capsys, "validate", "--config", str(cfg))
    assert code == 0
    assert json.loads(out)["passed"] is True


def test_malformed_config_is_config_error(tmp_path):
    cfg = tmp_path / "broken.toml"
    cfg.write_text("metric = [unclosed\n")
    assert main(["validate", "--config", str(cfg)]) == 2
