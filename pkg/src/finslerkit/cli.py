"""Command-line front end: validate, curvature, classify, verify.

Configuration is file-first (TOML via --config) with flag overrides; every
report embeds the effective configuration for provenance and is emitted as
JSON (sorted keys, shortest round-trip floats) or CSV.  Exit codes: 0 pass,
1 verification failure, 2 configuration error, 3 evaluation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from finslerkit import verify as vf
from finslerkit.config import ConfigError, load_config, resolve_metric, resolve_model
from finslerkit.curvature import (
    QUANTITY_NAMES,
    DegenerateHessianError,
    StrongConvexityError,
    batch_rows,
)
from finslerkit.jets import DomainError, EvaluationError
from finslerkit.landsberg import IsometryError, LinearMap, block_rotation
from finslerkit.manifolds import AlignmentError, ModelError
from finslerkit.metrics import Alpha1Alpha2Spec, validate_norm
from finslerkit.sampling import SamplePlan

__all__ = ["main", "build_parser", "VERIFY_TARGETS", "REPORT_SCHEMAS"]

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_EVAL = 3

VERIFY_TARGETS = (
    "theorem41",
    "theorem42",
    "example33",
    "example34",
    "lemma31",
    "lemma51",
    "lemma81",
    "prop32",
)

_EVAL_ERRORS = (
    StrongConvexityError,
    DegenerateHessianError,
    DomainError,
    EvaluationError,
    IsometryError,
    ModelError,
    AlignmentError,
    np.linalg.LinAlgError,
)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML configuration file")
    common.add_argument("--model", help="model registry name")
    common.add_argument("--metric", help="metric registry name or generator expression")
    common.add_argument("--points", type=int, help="number of base points")
    common.add_argument("--directions", type=int, help="directions per point")
    common.add_argument("--nodes", type=int, help="quadrature node count")
    common.add_argument("--tol", type=float, help="tolerance override")
    common.add_argument("--radius", type=float, help="base radius for plane checks")
    common.add_argument("--format", choices=("json", "csv"), dest="fmt",
                        help="output format (default json)")
    common.add_argument("--out", help="output path (default stdout)")

    parser = argparse.ArgumentParser(
        prog="finslerkit",
        description="Numerical curvature toolkit for split-quadratic Finsler metrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common],
                   help="Minkowski-axiom scan of a metric")
    pcur = sub.add_parser("curvature", parents=[common],
                          help="evaluate curvature quantities over a sample plan")
    pcur.add_argument("--quantity", default="g",
                      help=f"comma list from {','.join(QUANTITY_NAMES)}")
    sub.add_parser("classify", parents=[common],
                   help="residual-based property classification")
    pver = sub.add_parser("verify", parents=[common],
                          help="run a named verification suite")
    pver.add_argument("which", choices=VERIFY_TARGETS)
    pver.add_argument("--xi", help="isometry selector, e.g. block-rotation:30deg")
    return parser


def _effective_config(args) -> dict:
    cfg = {}
    if args.config:
        cfg = load_config(args.config)
    run = dict(cfg.get("run", {}))
    for key in ("points", "directions", "nodes", "tol", "radius"):
        val = getattr(args, key, None)
        if val is not None:
            run[key] = val
    fmt = args.fmt or run.get("format") or "json"
    if fmt not in ("json", "csv"):
        raise ConfigError(f"unknown output format {fmt!r}")
    run["format"] = fmt
    if args.out:
        run["out"] = args.out
    model_sel = args.model or cfg.get("model")
    metric_sel = args.metric or cfg.get("metric")
    out = {"run": run}
    if model_sel is not None:
        out["model"] = model_sel
    if metric_sel is not None:
        out["metric"] = metric_sel
    return out


def _config_provenance(cfg: dict) -> dict:
    # the output destination is not part of the scientific configuration
    prov = {"run": {k: cfg["run"][k] for k in sorted(cfg["run"]) if k != "out"}}
    for key in ("model", "metric"):
        if key in cfg:
            sel = cfg[key]
            prov[key] = sel if isinstance(sel, str) else dict(sel)
    return prov


def _parse_xi(text: str, split) -> LinearMap:
    if text is None:
        return block_rotation(split[0], split[1], angle1=0.5)
    parts = text.split(":")
    if parts[0] == "block-rotation":
        angles = []
        for p in parts[1:]:
            if not p.endswith("deg"):
                raise ConfigError(f"bad angle {p!r} in --xi (expected e.g. 30deg)")
            angles.append(math.radians(float(p[:-3])))
        a1 = angles[0] if angles else 0.5
        a2 = angles[1] if len(angles) > 1 else 0.0
        return block_rotation(split[0], split[1], angle1=a1, angle2=a2)
    if parts[0] == "middle-flip":
        n = split[0] + split[1]
        signs = np.ones(n)
        signs[1:-1] = -1.0
        return LinearMap.from_matrix(np.diag(signs))
    raise ConfigError(f"unknown isometry selector {text!r}")


# ---------------------------------------------------------------------------
# Commands


def _cmd_validate(cfg: dict) -> tuple[dict, bool]:
    if "metric" not in cfg:
        raise ConfigError("validate needs --metric (or a [metric] table)")
    model = resolve_model(cfg["model"]) if "model" in cfg else None
    spec = resolve_metric(cfg["metric"], model)
    run = cfg["run"]
    num_dirs = int(run.get("directions", 64))
    tol = float(run.get("tol", 1e-6))
    if model is not None:
        points = model.default_points(int(run.get("points", 3)))
    else:
        points = [[0.0] * spec.dimension]
    reports = []
    ok = True
    for p in points:
        rep = validate_norm(spec, list(p), num_dirs, tol)
        d = rep.to_dict()
        d["point"] = [float(v) for v in p]
        reports.append(d)
        ok = ok and rep.passed
    return {"reports": reports, "passed": ok}, ok


def _cmd_curvature(cfg: dict, quantity: str) -> tuple[dict, bool]:
    if "metric" not in cfg or "model" not in cfg:
        raise ConfigError("curvature needs --metric and --model")
    model = resolve_model(cfg["model"])
    spec = resolve_metric(cfg["metric"], model)
    run = cfg["run"]
    quantities = [q.strip() for q in quantity.split(",") if q.strip()]
    for q in quantities:
        if q not in QUANTITY_NAMES:
            raise ConfigError(f"unknown quantity {q!r}; expected one of {QUANTITY_NAMES}")
    plan = SamplePlan(
        points=model.default_points(int(run.get("points", 3))),
        directions_per_point=int(run.get("directions", 4)),
    )
    rows = batch_rows(spec, model, plan, quantities, nodes=run.get("nodes"))
    return {"rows": rows, "passed": True}, True


def _cmd_classify(cfg: dict) -> tuple[dict, bool]:
    if "metric" not in cfg or "model" not in cfg:
        raise ConfigError("classify needs --metric and --model")
    model = resolve_model(cfg["model"])
    spec = resolve_metric(cfg["metric"], model)
    run = cfg["run"]
    plan = SamplePlan(
        points=model.default_points(max(5, int(run.get("points", 5)))),
        directions_per_point=max(16, int(run.get("directions", 16))),
    )
    report = vf.classify(spec, model, plan)
    return report.to_dict() | {"passed": True}, True


def _cmd_verify(cfg: dict, which: str, xi_text: str | None) -> tuple[dict, bool]:
    run = cfg["run"]
    tol = run.get("tol")
    radius = float(run.get("radius", 1.0))

    if which == "theorem41":
        model = resolve_model(cfg.get("model", "polar-plane"))
        gen_sel = cfg.get("metric", "cross02")
        p = model.default_points(1)[0]
        dirs = [(0.6, 0.8), (0.8, 0.6), (0.28, 0.96)]
        rep = vf.s_curvature_dual_check(gen_sel, model, p, dirs,
                                        tol_rel=float(tol or 1e-4))
        return rep.to_dict(), rep.passed
    if which == "theorem42":
        model = resolve_model(cfg.get("model", "hopf-sphere"))
        points = model.default_points(max(3, int(run.get("points", 3))))
        rep = vf.s_vanishing_equivalence(
            model, points, gen=cfg.get("metric", "cross02"),
            num_directions=max(16, int(run.get("directions", 16))),
        )
        return rep.to_dict(), rep.passed
    if which == "example33":
        rep = vf.polar_chart_pattern(base_radius=radius, tol=float(tol or 1e-8))
        return rep.to_dict(), rep.passed
    if which == "example34":
        rep = vf.hopf_chart_pattern(tol=float(tol or 1e-8))
        return rep.to_dict(), rep.passed
    if which == "lemma31":
        model = resolve_model(cfg.get("model", "hopf-sphere"))
        out = vf.chart_identities_suite(model, tol=float(tol or 1e-8))
        return out, out["passed"]
    if which == "lemma51":
        model = resolve_model(cfg.get("model", "flat-product")) if "model" in cfg \
            else resolve_model({"name": "custom", "dimension": 3, "split": [2, 1],
                                "a_field": {"terms": [
                                    {"entry": [1, 1], "coeff": 1.0, "powers": [0, 0, 0]},
                                    {"entry": [2, 2], "coeff": 1.0, "powers": [0, 0, 0]},
                                    {"entry": [3, 3], "coeff": 1.0, "powers": [0, 0, 0]}]},
                                "b_field": {"terms": [
                                    {"entry": [3, 3], "coeff": 1.0, "powers": [0, 0, 0]}]}})
        spec = resolve_metric(cfg.get("metric", "cross02"), model)
        norm = spec.frozen_at([0.0] * model.dimension)
        split = spec.split if isinstance(spec, Alpha1Alpha2Spec) else (model.dimension - 1, 1)
        maps = [_parse_xi(xi_text, split)] if xi_text else None
        rep = vf.isometry_invariance_suite(norm, maps=maps,
                                           kernel_tol=float(tol or 1e-9))
        return rep.to_dict(), rep.passed
    if which == "lemma81":
        try:
            rep = vf.non_landsberg_certificate(cfg.get("metric", "cross02"),
                                               base_radius=radius)
        except vf.LinearGeneratorError as err:
            raise ConfigError(str(err)) from err
        return rep.to_dict(), rep.passed
    if which == "prop32":
        model = resolve_model(cfg.get("model", "flat-product"))
        out = vf.product_criterion_suite(model, gen=cfg.get("metric", "cross02"))
        return out, out["passed"]
    raise ConfigError(f"unknown verification target {which!r}")


# ---------------------------------------------------------------------------
# Emission


def _json_default(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not JSON serializable: {type(v).__name__}")


def _flatten(d, prefix=""):
    rows = []
    if isinstance(d, dict):
        for k in sorted(d):
            rows.extend(_flatten(d[k], f"{prefix}{k}."))
    elif isinstance(d, (list, tuple)):
        for i, v in enumerate(d):
            rows.extend(_flatten(v, f"{prefix}{i}."))
    else:
        rows.append((prefix[:-1], d))
    return rows


def _emit(report: dict, fmt: str, out_path: str | None) -> None:
    if fmt == "json":
        text = json.dumps(report, sort_keys=True, indent=2,
                          separators=(",", ": "), default=_json_default) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        rows = report.get("result", {}).get("rows")
        if isinstance(rows, list) and rows and isinstance(rows[0], dict) \
                and "quantity" in rows[0]:
            writer.writerow(["x", "y", "quantity", "value", "method", "error_estimate"])
            for r in rows:
                writer.writerow([
                    " ".join(repr(float(v)) for v in r["x"]),
                    " ".join(repr(float(v)) for v in r["y"]),
                    r["quantity"],
                    repr(float(r["value"])),
                    r["method"],
                    repr(float(r["error_estimate"])),
                ])
        else:
            writer.writerow(["key", "value"])
            for key, val in _flatten(report):
                if isinstance(val, float):
                    val = repr(val)
                writer.writerow([key, val])
        text = buf.getvalue()
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# Minimal schemas for machine-readable report round-trips.
_SCHEMA_COMMON = {
    "type": "object",
    "required": ["command", "config", "result", "passed"],
    "properties": {
        "command": {"type": "string"},
        "config": {"type": "object"},
        "result": {"type": "object"},
        "passed": {"type": "boolean"},
    },
}

REPORT_SCHEMAS = {
    "validate": _SCHEMA_COMMON,
    "curvature": _SCHEMA_COMMON,
    "classify": _SCHEMA_COMMON,
    "verify": _SCHEMA_COMMON,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _effective_config(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "validate":
            result, passed = _cmd_validate(cfg)
        elif args.command == "curvature":
            result, passed = _cmd_curvature(cfg, args.quantity)
        elif args.command == "classify":
            result, passed = _cmd_classify(cfg)
        else:
            result, passed = _cmd_verify(cfg, args.which, getattr(args, "xi", None))
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except _EVAL_ERRORS as err:
        print(f"evaluation error: {err}", file=sys.stderr)
        return EXIT_EVAL

    report = {
        "command": args.command if args.command != "verify" else f"verify:{args.which}",
        "config": _config_provenance(cfg),
        "result": result,
        "passed": bool(passed),
    }
    _emit(report, cfg["run"]["format"], cfg["run"].get("out"))
    return EXIT_PASS if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
