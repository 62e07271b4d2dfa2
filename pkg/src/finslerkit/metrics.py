"""Metric-family specifications with norm evaluation and axiom validation.

Four families are supported: Riemannian quadratic norms, Randers norms,
profile ``alpha * phi(beta/alpha)`` norms, and split-quadratic norms
``F = sqrt(L(alpha1^2, alpha2^2))`` driven by a 1-homogeneous generator
``L(s, t)`` over an orthogonal splitting of the tangent space.  A raw-norm
wrapper exists for stress-testing the validator with non-convex examples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from finslerkit import jets
from finslerkit.expressions import parse_expression
from finslerkit.jets import DomainError, Jet, algebra, sqrt
from finslerkit.sampling import sphere_sequence

__all__ = [
    "Generator",
    "GeneratorDerivatives",
    "InvalidGeneratorError",
    "MetricSpec",
    "RiemannianSpec",
    "RandersSpec",
    "AlphaBetaSpec",
    "Alpha1Alpha2Spec",
    "RawNormSpec",
    "ValidationReport",
    "norm_value",
    "validate_norm",
    "constant_field",
    "quad_form",
    "generator",
    "GENERATOR_NAMES",
    "euclidean_spec",
]


class InvalidGeneratorError(ValueError):
    """The generator produced a non-positive squared norm at a valid input."""


# ---------------------------------------------------------------------------
# Generators


@dataclass
class GeneratorDerivatives:
    """Value and partials of L(s, t) up to third order at one (s, t)."""

    L: float
    L1: float
    L2: float
    L11: float
    L12: float
    L22: float
    L111: float
    L112: float
    L122: float
    L222: float


_PARTIAL_KEYS = [
    ("L", (0, 0)),
    ("L1", (1, 0)),
    ("L2", (0, 1)),
    ("L11", (2, 0)),
    ("L12", (1, 1)),
    ("L22", (0, 2)),
    ("L111", (3, 0)),
    ("L112", (2, 1)),
    ("L122", (1, 2)),
    ("L222", (0, 3)),
]

_PROBE_POINTS = [(1.0, 1.0), (0.36, 0.64), (2.0, 0.5), (1.5, 3.0)]


class Generator:
    """Generator L(s, t) for split-quadratic norms, with exact partials.

    The value closure must run on floats, numpy arrays and jets (use the
    dispatch helpers from :mod:`finslerkit.jets` for sqrt/exp/log).  Partials
    come from jet differentiation of the closure unless an explicit closure
    table is supplied, in which case both routes are cross-checked on
    construction.
    """

    def __init__(self, func, name: str = "custom", partial_closures: dict | None = None):
        self.func = func
        self.name = name
        self.partial_closures = partial_closures
        if partial_closures is not None:
            missing = [k for k, _ in _PARTIAL_KEYS if k != "L" and k not in partial_closures]
            if missing:
                raise ValueError(f"partial closure table lacks {missing}")
            self._cross_check_closures()

    def __call__(self, s, t):
        return self.func(s, t)

    def _jet_partials(self, s: float, t: float) -> GeneratorDerivatives:
        alg = algebra((2,), (3,))
        js, jt = alg.variable(0, float(s)), alg.variable(1, float(t))
        val = self.func(js, jt)
        if not isinstance(val, Jet):
            val = alg.constant(float(val))
        return GeneratorDerivatives(**{k: val.partial(e) for k, e in _PARTIAL_KEYS})

    def partials(self, s: float, t: float) -> GeneratorDerivatives:
        if self.partial_closures is None:
            return self._jet_partials(s, t)
        vals = {"L": float(self.func(s, t))}
        for k, _ in _PARTIAL_KEYS[1:]:
            vals[k] = float(self.partial_closures[k](s, t))
        return GeneratorDerivatives(**vals)

    def partial_table(self, s: float, t: float, max_order: int) -> dict:
        """All partials up to total order ``max_order`` at a float (s, t)."""
        alg = algebra((2,), (max_order,))
        js, jt = alg.variable(0, float(s)), alg.variable(1, float(t))
        val = self.func(js, jt)
        if not isinstance(val, Jet):
            val = alg.constant(float(val))
        return {
            (i, j): val.partial((i, j))
            for i in range(max_order + 1)
            for j in range(max_order + 1 - i)
        }

    def partial_value(self, i: int, j: int, s, t):
        """One partial of L evaluated jet-generically at (s, t).

        For jet arguments this composes the partial's own Taylor expansion at
        the argument values with the nilpotent parts, so downstream fields
        built from L1, L2 stay exactly differentiable.
        """
        if not isinstance(s, Jet) and not isinstance(t, Jet):
            sf, tf = float(s), float(t)
            if self.partial_closures is not None and 0 < i + j <= 3:
                key = "L" + "1" * i + "2" * j
                return float(self.partial_closures[key](sf, tf))
            if i + j == 0:
                return float(self.func(sf, tf))
            return self.partial_table(sf, tf, i + j)[(i, j)]
        alg = s.alg if isinstance(s, Jet) else t.alg
        sj = s if isinstance(s, Jet) else alg.constant(float(s))
        tj = t if isinstance(t, Jet) else alg.constant(float(t))
        depth = alg.max_total
        table = self.partial_table(sj.value, tj.value, i + j + depth)
        ds = sj - sj.value
        dt = tj - tj.value
        ds_pow = [alg.constant(1.0)]
        dt_pow = [alg.constant(1.0)]
        for _ in range(depth):
            ds_pow.append(ds_pow[-1] * ds)
            dt_pow.append(dt_pow[-1] * dt)
        acc = alg.constant(0.0)
        for p in range(depth + 1):
            for q in range(depth + 1 - p):
                coeff = table[(i + p, j + q)] / (
                    math.factorial(p) * math.factorial(q)
                )
                if coeff != 0.0:
                    acc = acc + coeff * (ds_pow[p] * dt_pow[q])
        return acc

    def _cross_check_closures(self, rel_tol: float = 1e-9) -> None:
        for s, t in _PROBE_POINTS:
            by_jet = self._jet_partials(s, t)
            by_closure = self.partials(s, t)
            for k, _ in _PARTIAL_KEYS:
                a, b = getattr(by_jet, k), getattr(by_closure, k)
                if abs(a - b) > rel_tol * max(abs(a), abs(b), 1.0):
                    raise ValueError(
                        f"generator partial {k} disagrees between jet and closure "
                        f"at (s,t)=({s},{t}): {a} vs {b}"
                    )

    def euler_residual(self, s: float, t: float) -> float:
        """|s L1 + t L2 - L| / |L|: zero iff L is 1-homogeneous at (s, t)."""
        d = self.partials(s, t)
        return abs(s * d.L1 + t * d.L2 - d.L) / max(abs(d.L), 1e-300)


def _linear(s, t):
    return s + t


def _cross(coeff: float):
    def func(s, t, _c=coeff):
        return s + t + _c * s * t / (s + t)

    return func


GENERATOR_NAMES = ("linear", "cross02")


def generator(selection) -> Generator:
    """Resolve a registry name, expression string or callable into a Generator."""
    if isinstance(selection, Generator):
        return selection
    if callable(selection):
        return Generator(selection)
    if selection == "linear":
        return Generator(_linear, name="linear")
    if selection == "cross02":
        return Generator(_cross(0.2), name="cross02")
    return Generator(parse_expression(selection), name=selection)


# ---------------------------------------------------------------------------
# Coefficient fields


def constant_field(matrix):
    """Field returning a fixed matrix regardless of x."""
    mat = np.asarray(matrix, dtype=float)

    def fld(x, _m=mat):
        return _m

    fld.constant_matrix = mat
    return fld


def quad_form(mat, y):
    """Sum_ij mat[i][j] y_i y_j for float, array or jet entries."""
    n = len(y)
    total = 0.0
    for i in range(n):
        total = total + mat[i][i] * y[i] * y[i]
        for j in range(i + 1, n):
            total = total + 2.0 * mat[i][j] * y[i] * y[j]
    return total


def _as_floats(v):
    return [float(c) for c in v]


# ---------------------------------------------------------------------------
# Metric specifications


class MetricSpec:
    """Base class: a Finsler norm family over a chart.

    Subclasses implement :meth:`squared_norm`, which must accept chart and
    fiber coordinates as sequences of floats, numpy arrays or jets.
    """

    kind = "abstract"

    def __init__(self, dimension: int, name: str = ""):
        self.dimension = int(dimension)
        self.name = name or self.kind

    def squared_norm(self, x, y):
        raise NotImplementedError

    def norm(self, x, y):
        return sqrt(self.squared_norm(x, y))

    def frozen_at(self, x) -> "MetricSpec":
        """Minkowski norm at a point: the same family with constant fields."""
        raise NotImplementedError


class RiemannianSpec(MetricSpec):
    kind = "riemannian"

    def __init__(self, a_field, dimension: int, name: str = ""):
        super().__init__(dimension, name)
        self.a_field = a_field

    def squared_norm(self, x, y):
        return quad_form(self.a_field(x), y)

    def frozen_at(self, x):
        return RiemannianSpec(
            constant_field(self.a_field(_as_floats(x))), self.dimension, self.name
        )


class RandersSpec(MetricSpec):
    """F = sqrt(a_ij y^i y^j) + beta_i y^i with |beta|_a < 1."""

    kind = "randers"

    def __init__(self, a_field, beta_field, dimension: int, name: str = ""):
        super().__init__(dimension, name)
        self.a_field = a_field
        self.beta_field = beta_field

    def norm(self, x, y):
        a = self.a_field(x)
        beta = self.beta_field(x)
        lin = 0.0
        for i in range(self.dimension):
            lin = lin + beta[i] * y[i]
        return sqrt(quad_form(a, y)) + lin

    def squared_norm(self, x, y):
        f = self.norm(x, y)
        return f * f

    def frozen_at(self, x):
        xf = _as_floats(x)
        beta = np.asarray(self.beta_field(xf), dtype=float)

        def beta_field(_x, _b=beta):
            return _b

        return RandersSpec(
            constant_field(self.a_field(xf)), beta_field, self.dimension, self.name
        )


class AlphaBetaSpec(MetricSpec):
    """F = alpha * profile(beta / alpha) for a smooth positive profile."""

    kind = "alphabeta"

    def __init__(self, a_field, beta_field, profile, dimension: int, name: str = ""):
        super().__init__(dimension, name)
        self.a_field = a_field
        self.beta_field = beta_field
        self.profile = profile

    def norm(self, x, y):
        a = self.a_field(x)
        beta = self.beta_field(x)
        alpha = sqrt(quad_form(a, y))
        lin = 0.0
        for i in range(self.dimension):
            lin = lin + beta[i] * y[i]
        return alpha * self.profile(lin / alpha)

    def squared_norm(self, x, y):
        f = self.norm(x, y)
        return f * f

    def frozen_at(self, x):
        xf = _as_floats(x)
        beta = np.asarray(self.beta_field(xf), dtype=float)

        def beta_field(_x, _b=beta):
            return _b

        return AlphaBetaSpec(
            constant_field(self.a_field(xf)), beta_field, self.profile,
            self.dimension, self.name,
        )


class Alpha1Alpha2Spec(MetricSpec):
    """F = sqrt(L(alpha1^2, alpha2^2)) over an orthogonal split of dimensions (n1, n2).

    ``a_field`` is the full quadratic-form field of alpha; ``b_field`` the
    alpha-lowered orthogonal projector onto the second subbundle, so that
    alpha2^2 = b_ij y^i y^j and alpha1^2 = (a_ij - b_ij) y^i y^j exactly.
    """

    kind = "alpha1alpha2"

    def __init__(self, a_field, b_field, gen, dimension: int, split, name: str = "",
                 model=None):
        super().__init__(dimension, name)
        self.a_field = a_field
        self.b_field = b_field
        self.generator = generator(gen)
        self.split = (int(split[0]), int(split[1]))
        if self.split[0] + self.split[1] != self.dimension:
            raise ValueError("split must sum to the dimension")
        self.model = model
        if not name:
            self.name = f"{self.generator.name}"

    def split_squares(self, x, y):
        """(alpha1^2, alpha2^2) at (x, y)."""
        full = quad_form(self.a_field(x), y)
        t = quad_form(self.b_field(x), y)
        return full - t, t

    def squared_norm(self, x, y):
        s, t = self.split_squares(x, y)
        return self.generator(s, t)

    def frozen_at(self, x):
        xf = _as_floats(x)
        return Alpha1Alpha2Spec(
            constant_field(self.a_field(xf)),
            constant_field(self.b_field(xf)),
            self.generator,
            self.dimension,
            self.split,
            self.name,
        )


class RawNormSpec(MetricSpec):
    """Arbitrary norm closure, used to stress-test the validator."""

    kind = "raw"

    def __init__(self, norm_func, dimension: int, name: str = "raw"):
        super().__init__(dimension, name)
        self._norm = norm_func

    def norm(self, x, y):
        return self._norm(x, y)

    def squared_norm(self, x, y):
        f = self._norm(x, y)
        return f * f

    def frozen_at(self, x):
        return self


def euclidean_spec(dimension: int) -> RiemannianSpec:
    return RiemannianSpec(constant_field(np.eye(dimension)), dimension, name="euclidean")


def metric_from_model(gen, model, name: str = "") -> Alpha1Alpha2Spec:
    """Bind a generator to a geometry model's fields and splitting."""
    return Alpha1Alpha2Spec(
        model.a_field, model.b_field, gen, model.dimension, model.split,
        name=name, model=model,
    )


# ---------------------------------------------------------------------------
# Norm evaluation and validation


def norm_value(spec: MetricSpec, x, y) -> float:
    """F(x, y) with slit-space and positivity checks."""
    yf = _as_floats(y)
    if all(v == 0.0 for v in yf):
        raise DomainError("norm requested at the zero fiber")
    xf = _as_floats(x)
    f2 = float(spec.squared_norm(xf, yf))
    if not np.isfinite(f2) or f2 <= 0.0:
        raise InvalidGeneratorError(
            f"squared norm {f2} is not positive at x={xf}, y={yf}"
        )
    return float(np.sqrt(f2))


@dataclass
class ValidationReport:
    """Axiom scan for one spec at one base point."""

    positivity_ok: bool
    homogeneity_ok: bool
    convexity_ok: bool
    min_hessian_eigenvalue: float
    euler_residual_max: float
    worst_direction: np.ndarray
    homogeneity_residual_max: float = 0.0

    @property
    def passed(self) -> bool:
        return self.positivity_ok and self.homogeneity_ok and self.convexity_ok

    def to_dict(self) -> dict:
        return {
            "positivity_ok": self.positivity_ok,
            "homogeneity_ok": self.homogeneity_ok,
            "convexity_ok": self.convexity_ok,
            "min_hessian_eigenvalue": self.min_hessian_eigenvalue,
            "euler_residual_max": self.euler_residual_max,
            "homogeneity_residual_max": self.homogeneity_residual_max,
            "worst_direction": [float(v) for v in self.worst_direction],
            "passed": self.passed,
        }


def hessian_matrix(spec: MetricSpec, x, y) -> np.ndarray:
    """Half the y-Hessian of the squared norm, assembled from one jet pass."""
    n = spec.dimension
    alg = algebra((n,), (2,))
    ys = alg.variables(_as_floats(y))
    val = spec.squared_norm(_as_floats(x), ys)
    if not isinstance(val, Jet):
        val = alg.constant(float(val))
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            g[i, j] = g[j, i] = 0.5 * val.partial(e)
    return g


def validate_norm(spec: MetricSpec, x, num_directions: int = 64,
                  tol: float = 1e-6) -> ValidationReport:
    """Scan Minkowski-norm axioms over a deterministic direction set.

    Checks positivity, 1-homogeneity at scale factors 0.5, 2 and 7, and
    strong convexity via the smallest eigenvalue of the half Hessian of the
    squared norm.  Split-quadratic specs additionally report the worst Euler
    residual of the generator.
    """
    if num_directions < 8:
        raise ValueError("num_directions must be at least 8")
    n = spec.dimension
    xf = _as_floats(x)
    dirs = sphere_sequence(n, num_directions)

    positivity_ok = True
    homo_max = 0.0
    min_eig = np.inf
    worst = dirs[0]
    euler_max = 0.0

    for d in dirs:
        y = list(d)
        f = float(spec.norm(xf, y))
        if not np.isfinite(f) or f <= 0.0:
            positivity_ok = False
            worst = d
            continue
        for lam in (0.5, 2.0, 7.0):
            fl = float(spec.norm(xf, [lam * v for v in y]))
            homo_max = max(homo_max, abs(fl - lam * f) / (lam * f))
        try:
            eigs = np.linalg.eigvalsh(hessian_matrix(spec, xf, y))
        except (jets.EvaluationError, FloatingPointError):
            positivity_ok = False
            worst = d
            continue
        if eigs[0] < min_eig:
            min_eig = eigs[0]
            worst = d
        if isinstance(spec, Alpha1Alpha2Spec):
            s, t = spec.split_squares(xf, y)
            euler_max = max(euler_max, spec.generator.euler_residual(float(s), float(t)))

    return ValidationReport(
        positivity_ok=positivity_ok,
        homogeneity_ok=homo_max <= 1e-9,
        convexity_ok=bool(np.isfinite(min_eig) and min_eig > tol),
        min_hessian_eigenvalue=float(min_eig),
        euler_residual_max=float(euler_max),
        worst_direction=np.asarray(worst, dtype=float),
        homogeneity_residual_max=float(homo_max),
    )
