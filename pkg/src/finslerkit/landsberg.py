"""The spray-type linear operator of a Minkowski norm and its isometry action.

For a fixed Minkowski norm, a vector-valued fiber field ``f = (f_1, ..., f_n)``
of positively 2-homogeneous components is mapped to
``O^i(f) = g^{il} (y^k d_{y^l} f_k - f_l) / 4``; the associated residual
tensor contracts its third fiber derivatives with the metric.  The field
built from the x-derivatives of the squared norm of a metric at a point
makes ``O^i`` the geodesic spray coefficients, and the residual vanishing is
the Landsberg condition there.  Linear norm isometries act on fields by
``(xi f)(y) = (xi^i_1 f_i(xi y), ..., xi^i_n f_i(xi y))`` and preserve the
residual kernel; both facts are verified numerically here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from finslerkit.jets import Jet, algebra
from finslerkit.linalg import jet_matrix_inverse
from finslerkit.metrics import Alpha1Alpha2Spec, MetricSpec
from finslerkit.sampling import sphere_sequence

__all__ = [
    "FiberField",
    "LinearMap",
    "ResidualTable",
    "IsometryError",
    "spray_operator",
    "landsberg_residual",
    "spray_source_field",
    "isometry_action",
    "reflection_part",
    "invariance_check",
    "InvarianceReport",
    "block_rotation",
    "verify_isometry",
]


class IsometryError(ValueError):
    """A map claimed to be a norm isometry fails the sampled check."""


class FiberField:
    """Vector-valued fiber field with positively 2-homogeneous components.

    Components are closures ``f_l(y)`` evaluating on floats and jets; the
    homogeneity certificate is sampled at construction.
    """

    def __init__(self, components, dimension: int, name: str = "field",
                 check_homogeneity: bool = True):
        self.components = list(components)
        self.dimension = int(dimension)
        self.name = name
        if len(self.components) != self.dimension:
            raise ValueError("need one component per fiber coordinate")
        if check_homogeneity:
            worst = self.homogeneity_residual()
            if worst > 1e-9:
                raise ValueError(
                    f"components are not 2-homogeneous (residual {worst:.2e})"
                )

    def __call__(self, y) -> np.ndarray:
        return np.array([float(c(y)) for c in self.components])

    def component_jets(self, alg, yjets) -> list:
        out = []
        for c in self.components:
            v = c(yjets)
            out.append(v if isinstance(v, Jet) else alg.constant(float(v)))
        return out

    def homogeneity_residual(self, num_samples: int = 16) -> float:
        worst = 0.0
        for y in sphere_sequence(self.dimension, num_samples):
            base = self(list(y))
            for lam in (0.5, 2.0):
                scaled = self(list(lam * y))
                worst = max(
                    worst,
                    float(np.max(np.abs(scaled - lam * lam * base)))
                    / max(1.0, float(np.max(np.abs(base)))),
                )
        return worst

    @classmethod
    def zero(cls, dimension: int) -> "FiberField":
        return cls([lambda y: 0.0] * dimension, dimension, name="zero",
                   check_homogeneity=False)

    def combine(self, other: "FiberField", c1: float, c2: float) -> "FiberField":
        comps = [
            (lambda y, f=f, g=g: c1 * f(y) + c2 * g(y))
            for f, g in zip(self.components, other.components)
        ]
        return FiberField(comps, self.dimension,
                          name=f"{c1}*{self.name}+{c2}*{other.name}",
                          check_homogeneity=False)


@dataclass
class LinearMap:
    """Invertible linear fiber map with its inverse."""

    xi: np.ndarray
    eta: np.ndarray

    @classmethod
    def from_matrix(cls, xi) -> "LinearMap":
        xi = np.asarray(xi, dtype=float)
        eta = np.linalg.inv(xi)
        if np.max(np.abs(xi @ eta - np.eye(xi.shape[0]))) > 1e-12:
            raise ValueError("matrix is too ill-conditioned to invert reliably")
        return cls(xi=xi, eta=eta)

    def apply(self, y):
        n = self.xi.shape[0]
        return [
            sum(self.xi[i, j] * y[j] for j in range(n))
            for i in range(n)
        ]


def block_rotation(n1: int, n2: int, angle1: float = 0.0, angle2: float = 0.0) -> LinearMap:
    """Rotation acting inside each block: an isometry of every split norm."""
    n = n1 + n2
    xi = np.eye(n)
    if n1 >= 2 and angle1:
        c, s = math.cos(angle1), math.sin(angle1)
        xi[0, 0], xi[0, 1], xi[1, 0], xi[1, 1] = c, -s, s, c
    if n2 >= 2 and angle2:
        c, s = math.cos(angle2), math.sin(angle2)
        i, j = n1, n1 + 1
        xi[i, i], xi[i, j], xi[j, i], xi[j, j] = c, -s, s, c
    return LinearMap.from_matrix(xi)


@dataclass
class ResidualTable:
    """Metric contraction of third fiber derivatives of the operator value."""

    values: np.ndarray
    max_abs: float


def _norm_jet_data(norm: MetricSpec, yf, y_cap: int):
    n = norm.dimension
    alg = algebra((n,), (y_cap,))
    yjets = alg.variables(yf)
    f2 = norm.squared_norm([0.0] * n, yjets)
    if not isinstance(f2, Jet):
        f2 = alg.constant(float(f2))
    gjets = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            gjets[i, j] = gjets[j, i] = 0.5 * f2.formal_partial(i).formal_partial(j)
    return alg, yjets, gjets


def _operator_jets(norm: MetricSpec, f: FiberField, yf, y_cap: int):
    """Jets of O^i(f) around y, valid to degree y_cap - 2."""
    n = norm.dimension
    alg, yjets, gjets = _norm_jet_data(norm, yf, y_cap)
    ginv = jet_matrix_inverse(gjets, alg)
    fjets = f.component_jets(alg, yjets)
    brackets = []
    for l in range(n):
        acc = None
        for k in range(n):
            term = yjets[k] * fjets[k].formal_partial(l)
            acc = term if acc is None else acc + term
        brackets.append(acc - fjets[l])
    out = []
    for i in range(n):
        acc = None
        for l in range(n):
            term = ginv[i, l] * brackets[l]
            acc = term if acc is None else acc + term
        out.append(0.25 * acc)
    g0 = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            g0[i, j] = gjets[i, j].value
    return alg, out, g0


def spray_operator(norm: MetricSpec, f: FiberField, y) -> np.ndarray:
    """O^i(f)(y) = g^{il}(y) (y^k d_{y^l} f_k - f_l) / 4, exact jets."""
    yf = [float(v) for v in y]
    if all(v == 0.0 for v in yf):
        raise ValueError("operator requested at the zero fiber")
    try:
        _, jets_out, _ = _operator_jets(norm, f, yf, 2)
    except Exception as err:
        raise type(err)(f"operator evaluation failed for field {f.name!r}: {err}") from err
    return np.array([j.value for j in jets_out])


def landsberg_residual(norm: MetricSpec, f: FiberField, y) -> ResidualTable:
    """Third fiber derivatives of the operator value, metric-contracted.

    The field solves the point's Landsberg equation at y iff this table
    vanishes for every index triple.
    """
    n = norm.dimension
    yf = [float(v) for v in y]
    if all(v == 0.0 for v in yf):
        raise ValueError("residual requested at the zero fiber")
    alg, ojets, g0 = _operator_jets(norm, f, yf, 5)
    gy = g0 @ np.asarray(yf)
    vals = np.zeros((n, n, n))
    for p in range(n):
        for q in range(p, n):
            for r in range(q, n):
                e = [0] * n
                e[p] += 1
                e[q] += 1
                e[r] += 1
                acc = 0.0
                for i in range(n):
                    acc += gy[i] * ojets[i].partial(e)
                for t in {(p, q, r), (p, r, q), (q, p, r), (q, r, p), (r, p, q), (r, q, p)}:
                    vals[t] = acc
    return ResidualTable(values=vals, max_abs=float(np.max(np.abs(vals))))


def spray_source_field(spec: Alpha1Alpha2Spec, model, p) -> FiberField:
    """The field of x-derivatives of the squared norm at p, assembled in
    closed form from the first derivatives of the split data.

    Component l is ``L1(s, t) (d_l a)_ij y^i y^j + L2(s, t) (d_l b)_ij y^i y^j``
    with ``a`` the first-block quadratic form; its operator values are the
    geodesic spray coefficients at p, and for a Landsberg metric it solves
    the point's Landsberg equation.
    """
    from finslerkit.curvature import bind_metric
    from finslerkit.linalg import field_derivatives

    spec = bind_metric(spec, model)
    n = spec.dimension
    pf = [float(v) for v in p]
    afull0, dafull = field_derivatives(spec.a_field, pf, n)
    b0, db = field_derivatives(spec.b_field, pf, n)
    da = dafull - db  # first-block quadratic form rates
    a1mat = afull0 - b0
    gen = spec.generator

    def component(l):
        def f_l(y, _da=da[l], _db=db[l]):
            s = _qform(a1mat, y)
            t = _qform(b0, y)
            qa = _qform(_da, y)
            qb = _qform(_db, y)
            return gen.partial_value(1, 0, s, t) * qa + gen.partial_value(0, 1, s, t) * qb

        return f_l

    comps = [component(l) for l in range(n)]
    return FiberField(comps, n, name="spray-source")


def _qform(mat, y):
    n = len(y)
    total = 0.0
    for i in range(n):
        total = total + mat[i][i] * y[i] * y[i]
        for j in range(i + 1, n):
            total = total + 2.0 * mat[i][j] * y[i] * y[j]
    return total


def isometry_action(mapping: LinearMap, f: FiberField) -> FiberField:
    """(xi f)(y): pull components back through xi and mix them by xi's columns."""
    xi = mapping.xi
    n = f.dimension

    def component(l):
        def fl(y, _l=l):
            yy = mapping.apply(y)
            acc = None
            for i in range(n):
                term = xi[i, _l] * f.components[i](yy)
                acc = term if acc is None else acc + term
            return acc

        return fl

    return FiberField([component(l) for l in range(n)], n,
                      name=f"xi*{f.name}", check_homogeneity=False)


def reflection_part(f: FiberField, mapping: LinearMap, sign: float = 1.0) -> FiberField:
    """Parity combinator (f + sign * xi f) / 2 for a reflection map xi."""
    return f.combine(isometry_action(mapping, f), 0.5, 0.5 * sign)


def verify_isometry(norm: MetricSpec, mapping: LinearMap, num_samples: int = 200,
                    tol: float = 1e-10):
    """Check F(xi y) = F(y) over a deterministic sphere sample."""
    n = norm.dimension
    worst = 0.0
    worst_y = None
    for y in sphere_sequence(n, num_samples):
        fy = float(norm.norm([0.0] * n, list(y)))
        fxy = float(norm.norm([0.0] * n, mapping.apply(list(y))))
        rel = abs(fxy - fy) / max(abs(fy), 1.0)
        if rel > worst:
            worst, worst_y = rel, y
    if worst > tol:
        raise IsometryError(
            f"map is not a norm isometry: residual {worst:.3e} at y={worst_y}"
        )
    return worst


@dataclass
class InvarianceReport:
    """Solution-space invariance data for one candidate field and isometry."""

    residual_f: float
    residual_xi_f: float
    kernel_identity_max: float
    condition_factor: float
    isometry_residual: float


def invariance_check(norm: MetricSpec, mapping: LinearMap, f: FiberField,
                     samples, tol: float = 1e-8) -> InvarianceReport:
    """Verify that the isometry action preserves residual smallness.

    Also evaluates the kernel identity ``O^i(xi f)(y) = eta^i_k O^k(f)(xi y)``
    at every sample; this holds for arbitrary fields once ``xi`` is an
    isometry and is the mechanism behind solution-space invariance.
    """
    iso_res = verify_isometry(norm, mapping)
    xif = isometry_action(mapping, f)
    res_f = 0.0
    res_xif = 0.0
    kernel_max = 0.0
    for y in samples:
        yl = [float(v) for v in y]
        res_f = max(res_f, landsberg_residual(norm, f, yl).max_abs)
        res_xif = max(res_xif, landsberg_residual(norm, xif, yl).max_abs)
        lhs = spray_operator(norm, xif, yl)
        rhs = mapping.eta @ spray_operator(norm, f, mapping.apply(yl))
        kernel_max = max(kernel_max, float(np.max(np.abs(lhs - rhs))))
    condition = res_xif / max(res_f, 1e-300)
    return InvarianceReport(
        residual_f=res_f,
        residual_xi_f=res_xif,
        kernel_identity_max=kernel_max,
        condition_factor=condition,
        isometry_residual=iso_res,
    )
