"""Configuration parsing: models and metric specs from key-value tables.

Configurations are TOML text (nested tables).  Models resolve against the
built-in registry or from polynomial coefficient tables; metrics resolve
against the generator registry, an expression string, or the special
validator-stress norms.
"""

from __future__ import annotations

import math

import numpy as np

try:  # Python 3.11+
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as _toml

from finslerkit.manifolds import (
    ManifoldModel,
    flat_product,
    hopf_sphere,
    polar_plane,
)
from finslerkit.metrics import (
    Alpha1Alpha2Spec,
    MetricSpec,
    RawNormSpec,
    RiemannianSpec,
    constant_field,
    generator,
    metric_from_model,
)

__all__ = [
    "ConfigError",
    "loads_toml",
    "load_config",
    "dumps_toml",
    "resolve_model",
    "resolve_metric",
    "metric_to_config",
    "METRIC_REGISTRY_NAMES",
]


class ConfigError(ValueError):
    """Malformed or unresolvable configuration."""


METRIC_REGISTRY_NAMES = ("linear", "cross02", "euclidean", "quartic-test")


def loads_toml(text: str) -> dict:
    try:
        return _toml.loads(text)
    except _toml.TOMLDecodeError as err:
        raise ConfigError(f"config parse error: {err}") from err


def load_config(path) -> dict:
    with open(path, "rb") as fh:
        try:
            return _toml.load(fh)
        except _toml.TOMLDecodeError as err:
            raise ConfigError(f"{path}: config parse error: {err}") from err


def _toml_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isfinite(f) and f == int(f) and abs(f) < 1e15:
            return f"{int(f)}.0"
        return repr(f)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize value of type {type(v).__name__}")


def dumps_toml(data: dict, prefix: str = "") -> str:
    """Serialize nested dicts of scalars/lists to TOML text."""
    lines = []
    scalars = {k: v for k, v in data.items() if not isinstance(v, dict)
               and not (isinstance(v, list) and v and isinstance(v[0], dict))}
    tables = {k: v for k, v in data.items() if isinstance(v, dict)}
    arrays = {k: v for k, v in data.items()
              if isinstance(v, list) and v and isinstance(v[0], dict)}
    for k, v in scalars.items():
        lines.append(f"{k} = {_toml_scalar(v)}")
    for k, v in tables.items():
        full = f"{prefix}{k}"
        lines.append(f"\n[{full}]")
        lines.append(dumps_toml(v, prefix=full + "."))
    for k, items in arrays.items():
        full = f"{prefix}{k}"
        for item in items:
            lines.append(f"\n[[{full}]]")
            lines.append(dumps_toml(item, prefix=full + "."))
    return "\n".join(lines).strip() + "\n"


# ---------------------------------------------------------------------------
# Polynomial matrix fields


def _polynomial_matrix_field(terms, dimension: int):
    """Matrix field from a term table: entry (1-based), coeff, powers."""
    parsed = []
    for t in terms:
        try:
            i, j = (int(v) - 1 for v in t["entry"])
            coeff = float(t["coeff"])
            powers = [int(p) for p in t["powers"]]
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"bad polynomial term {t!r}: {err}") from err
        if not (0 <= i < dimension and 0 <= j < dimension):
            raise ConfigError(f"term entry {t['entry']} outside a {dimension}x{dimension} matrix")
        if len(powers) != dimension:
            raise ConfigError(f"term powers {powers} must have length {dimension}")
        parsed.append((i, j, coeff, powers))

    def fld(x):
        out = np.zeros((dimension, dimension), dtype=object)
        for i, j, coeff, powers in parsed:
            mono = coeff
            for k, p in enumerate(powers):
                for _ in range(p):
                    mono = mono * x[k]
            out[i, j] = out[i, j] + mono
            if i != j:
                out[j, i] = out[j, i] + mono
        return out

    return fld


def resolve_model(selection) -> ManifoldModel:
    """Model from a registry name or a custom table with polynomial fields."""
    if isinstance(selection, ManifoldModel):
        return selection
    if isinstance(selection, str):
        builders = {
            "flat-product": flat_product,
            "polar-plane": polar_plane,
            "hopf-sphere": hopf_sphere,
        }
        if selection not in builders:
            raise ConfigError(
                f"unknown model {selection!r}; expected one of {sorted(builders)}"
            )
        return builders[selection]()
    if not isinstance(selection, dict):
        raise ConfigError(f"cannot resolve model from {type(selection).__name__}")
    name = selection.get("name", "custom")
    if name != "custom" and "a_field" not in selection:
        return resolve_model(name)
    try:
        dimension = int(selection["dimension"])
        split = tuple(int(v) for v in selection["split"])
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"custom model needs dimension and split: {err}") from err
    a_terms = selection.get("a_field", {}).get("terms")
    b_terms = selection.get("b_field", {}).get("terms")
    if not a_terms or not b_terms:
        raise ConfigError("custom model needs a_field.terms and b_field.terms")
    return ManifoldModel(
        name, dimension, split,
        _polynomial_matrix_field(a_terms, dimension),
        _polynomial_matrix_field(b_terms, dimension),
    )


def _quartic_test_norm() -> RawNormSpec:
    def norm(x, y):
        return (y[0] ** 4 + y[1] ** 4) ** 0.25

    return RawNormSpec(norm, 2, name="quartic-test")


def resolve_metric(selection, model: ManifoldModel | None = None) -> MetricSpec:
    """Metric spec from a registry name, expression or config table."""
    if isinstance(selection, MetricSpec):
        return selection
    if isinstance(selection, dict):
        return _metric_from_table(selection, model)
    if not isinstance(selection, str):
        raise ConfigError(f"cannot resolve metric from {type(selection).__name__}")
    if selection == "quartic-test":
        return _quartic_test_norm()
    if selection in ("euclidean", "riemannian"):
        if model is None:
            raise ConfigError("a riemannian metric selection needs a model")
        return RiemannianSpec(model.a_field, model.dimension, name=selection)
    try:
        gen = generator(selection)
    except Exception as err:
        raise ConfigError(f"cannot parse metric {selection!r}: {err}") from err
    if model is None:
        raise ConfigError(f"metric {selection!r} needs a model (or inline fields)")
    return metric_from_model(gen, model, name=selection)


def _metric_from_table(table: dict, model: ManifoldModel | None) -> MetricSpec:
    kind = table.get("kind", "alpha1alpha2")
    if kind == "raw" and table.get("name") == "quartic-test":
        return _quartic_test_norm()
    if kind in ("euclidean", "riemannian"):
        return resolve_metric("euclidean", model)
    if kind != "alpha1alpha2":
        raise ConfigError(f"unsupported metric kind {kind!r} in config")
    gen_sel = table.get("generator", "linear")
    if model is not None and "dimension" not in table:
        return metric_from_model(generator(gen_sel), model, name=str(gen_sel))
    try:
        dimension = int(table["dimension"])
        split = tuple(int(v) for v in table["split"])
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"inline metric needs dimension and split: {err}") from err
    a_terms = table.get("a_field", {}).get("terms")
    b_terms = table.get("b_field", {}).get("terms")
    if a_terms and b_terms:
        a_field = _polynomial_matrix_field(a_terms, dimension)
        b_field = _polynomial_matrix_field(b_terms, dimension)
    else:
        a_field = constant_field(np.eye(dimension))
        b_field = constant_field(np.diag([0.0] * split[0] + [1.0] * split[1]))
    return Alpha1Alpha2Spec(a_field, b_field, generator(gen_sel), dimension, split,
                            name=str(gen_sel))


def metric_to_config(spec: MetricSpec) -> dict:
    """Config table for a spec (constant-field specs serialize fully)."""
    if isinstance(spec, RawNormSpec):
        return {"kind": "raw", "name": spec.name}
    if isinstance(spec, RiemannianSpec):
        return {"kind": "riemannian", "name": spec.name}
    if isinstance(spec, Alpha1Alpha2Spec):
        gen = spec.generator
        sel = gen.name if gen.name in ("linear", "cross02") else getattr(
            gen.func, "expression", gen.name
        )
        out = {
            "kind": "alpha1alpha2",
            "generator": sel,
            "dimension": spec.dimension,
            "split": list(spec.split),
        }
        return out
    raise ConfigError(f"cannot serialize metric kind {spec.kind!r}")
