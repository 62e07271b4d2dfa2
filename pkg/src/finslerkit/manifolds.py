"""Geometry models and adapted-chart construction for split Riemannian data.

A :class:`ManifoldModel` carries the full Riemannian quadratic-form field
``a_field`` and the lowered orthogonal-projector field ``b_field`` describing
the tangent splitting.  :func:`normal_chart` builds, at a chosen point, a
second-order coordinate change in which the Levi-Civita connection
coefficients vanish, the metric is the identity, and the splitting is
coordinate-aligned; the report exposes the first derivatives of the fields
in that chart, which drive every pointwise curvature formula downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from finslerkit import jets
from finslerkit.jets import Jet, algebra
from finslerkit.linalg import (
    field_derivatives,
    jet_matrix_inverse,
    matmul,
    matvec,
    value_matrix,
)

__all__ = [
    "ManifoldModel",
    "ModelError",
    "AlignmentError",
    "NormalChartReport",
    "ChartIdentityReport",
    "flat_product",
    "polar_plane",
    "hopf_sphere",
    "frame_span_model",
    "projector_from_span",
    "normal_chart",
    "check_chart_identities",
    "product_structure_criterion",
    "MODEL_NAMES",
]


class ModelError(ValueError):
    """The model data violates its structural invariants (e.g. projector rank)."""


class AlignmentError(ValueError):
    """Requested chart alignment vector lies inside one of the subbundles."""


class ManifoldModel:
    """Chart-domain geometry: dimension split, metric field, projector field."""

    def __init__(self, name, dimension, split, a_field, b_field,
                 domain=None, default_points=None):
        self.name = name
        self.dimension = int(dimension)
        self.split = (int(split[0]), int(split[1]))
        if sum(self.split) != self.dimension:
            raise ModelError("split must sum to the dimension")
        self.a_field = a_field
        self.b_field = b_field
        self._domain = domain
        self._default_points = default_points

    def contains(self, x) -> bool:
        if self._domain is None:
            return True
        return bool(self._domain([float(v) for v in x]))

    def default_points(self, count: int) -> list:
        if self._default_points is not None:
            pts = self._default_points(count)
            return [np.asarray(p, dtype=float) for p in pts]
        # generic fallback: deterministic points near the origin, domain-filtered
        from finslerkit.sampling import sphere_sequence

        candidates = [np.zeros(self.dimension)]
        for radius in (0.1, 0.25, 0.4, 0.7):
            for d in sphere_sequence(self.dimension, max(4, count)):
                candidates.append(radius * d)
        pts = [p for p in candidates if self.contains(p)][:count]
        if len(pts) < count:
            raise ModelError(
                f"model {self.name!r}: could not find {count} default points in domain"
            )
        return pts

    def __repr__(self):
        return f"ManifoldModel({self.name!r}, n={self.dimension}, split={self.split})"


# ---------------------------------------------------------------------------
# Built-in models


def flat_product(n1: int = 1, n2: int = 1) -> ManifoldModel:
    """Flat space with a constant coordinate-aligned splitting."""
    n = n1 + n2
    eye = np.eye(n)
    bmat = np.diag([0.0] * n1 + [1.0] * n2)

    def a_field(x):
        return eye

    def b_field(x):
        return bmat

    def default_points(count):
        base = np.linspace(-0.5, 0.5, count)
        return [np.full(n, v) for v in base]

    return ManifoldModel("flat-product", n, (n1, n2), a_field, b_field,
                         domain=lambda x: True, default_points=default_points)


def polar_plane() -> ManifoldModel:
    """Punctured flat plane split into angular and radial line bundles.

    In Cartesian coordinates the radial subbundle's lowered projector is
    ``x x^T / |x|^2``; the angular subbundle is its orthogonal complement.
    """

    def a_field(x):
        return np.eye(2)

    def b_field(x):
        q = x[0] * x[0] + x[1] * x[1]
        return np.array(
            [[x[0] * x[0] / q, x[0] * x[1] / q],
             [x[0] * x[1] / q, x[1] * x[1] / q]],
            dtype=object,
        )

    def domain(x):
        return math.hypot(x[0], x[1]) > 0.2

    def default_points(count):
        golden = (math.sqrt(5.0) - 1.0) / 2.0
        pts = []
        for i in range(count):
            r = 0.8 + 0.15 * (i % 4)
            th = 2.0 * math.pi * ((i * golden) % 1.0)
            pts.append([r * math.cos(th), r * math.sin(th)])
        return pts

    return ManifoldModel("polar-plane", 2, (1, 1), a_field, b_field,
                         domain=domain, default_points=default_points)


# Taylor coefficients in q = |x|^2 for the two analytic radial profiles used
# by the curved built-in model: r*cot(r) and sin(r)^2/r^2.  Exact rationals
# keep the fields jet-exact well below double rounding for |x| < 0.9.

_BERNOULLI_2K = [
    Fraction(1), Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42),
    Fraction(-1, 30), Fraction(5, 66), Fraction(-691, 2730), Fraction(7, 6),
    Fraction(-3617, 510), Fraction(43867, 798), Fraction(-174611, 330),
]

_RCOT_COEFFS = [
    float((-1) ** k * _BERNOULLI_2K[k] * Fraction(4**k, math.factorial(2 * k)))
    for k in range(len(_BERNOULLI_2K))
]

_SINSQ_COEFFS = [
    float(Fraction((-1) ** j * 2 ** (2 * j + 1), math.factorial(2 * j + 2)))
    for j in range(len(_BERNOULLI_2K))
]


def _poly_in(coeffs, q):
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * q + c
    return acc


def hopf_sphere() -> ManifoldModel:
    """Round 3-sphere with the fiber line bundle of the circle fibration.

    Uses exponential coordinates of the unit-curvature bi-invariant metric at
    a base point.  The fiber subbundle is generated by the left-translation
    flow of the diagonal circle subgroup; pushing its generator through the
    exponential chart gives the exact field
    ``v(x) = rcot(r) e3 + (1 - rcot(r)) (x.e3) x / r^2 + e3 x x``
    and the metric ``a(x) = m(q) I + (1 - m(q)) x x^T / q`` with
    ``m(q) = sin(r)^2 / r^2``, ``q = r^2``.  Both radial profiles are
    evaluated as exact power series in q (valid well beyond the chart domain).
    """

    def a_field(x):
        q = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
        m = _poly_in(_SINSQ_COEFFS, q)
        w = _poly_in([-c for c in _SINSQ_COEFFS[1:]], q)  # (1 - m(q)) / q
        out = np.empty((3, 3), dtype=object)
        for i in range(3):
            for j in range(3):
                out[i, j] = w * x[i] * x[j] + (m if i == j else 0.0)
        return out

    def b_field(x):
        q = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
        c = _poly_in(_RCOT_COEFFS, q)
        d = _poly_in([-k for k in _RCOT_COEFFS[1:]], q)  # (1 - rcot(r)) / q
        dx3 = d * x[2]
        v = [dx3 * x[0] - x[1], dx3 * x[1] + x[0], dx3 * x[2] + c]
        a = a_field(x)
        w = matvec(a, v)
        vav = v[0] * w[0] + v[1] * w[1] + v[2] * w[2]
        out = np.empty((3, 3), dtype=object)
        for i in range(3):
            for j in range(3):
                out[i, j] = w[i] * w[j] / vav
        return out

    def domain(x):
        return math.sqrt(x[0] ** 2 + x[1] ** 2 + x[2] ** 2) < 0.8

    def default_points(count):
        golden = (math.sqrt(5.0) - 1.0) / 2.0
        pts = [[0.0, 0.0, 0.0]]
        for i in range(1, count):
            r = 0.15 + 0.2 * ((i - 1) % 2)
            th = 2.0 * math.pi * ((i * golden) % 1.0)
            pts.append([r * math.cos(th), r * math.sin(th), 0.1 * math.sin(3.0 * th)])
        return pts

    return ManifoldModel("hopf-sphere", 3, (2, 1), a_field, b_field,
                         domain=domain, default_points=default_points)


MODEL_NAMES = ("flat-product", "polar-plane", "hopf-sphere")


def projector_from_span(a, span_columns, alg=None):
    """Lowered orthogonal projector onto span(W): a W (W^T a W)^{-1} W^T a.

    ``span_columns`` is an (n, k) object matrix whose columns span the target
    subbundle; entries may be jets.  The result is exactly symmetric and
    exactly idempotent in the lowered sense.
    """
    W = np.asarray(span_columns, dtype=object)
    a = np.asarray(a, dtype=object)
    aW = matmul(a, W)
    gram = matmul(W.T, aW)
    k = gram.shape[0]
    if k == 1:
        inv = np.empty((1, 1), dtype=object)
        inv[0, 0] = 1.0 / gram[0, 0]
    elif alg is not None:
        inv = jet_matrix_inverse(gram, alg)
    else:
        inv = np.asarray(np.linalg.inv(value_matrix(gram)), dtype=object)
    return matmul(matmul(aW, inv), aW.T)


def frame_span_model(name, split, a_field, span_field, domain=None,
                     default_points=None) -> ManifoldModel:
    """Model whose second subbundle is the span of a smooth frame field."""
    n = split[0] + split[1]

    def b_field(x, _a=a_field, _s=span_field):
        a = np.asarray(_a(x), dtype=object)
        W = np.asarray(_s(x), dtype=object)
        alg = None
        for entry in W.flat:
            if isinstance(entry, Jet):
                alg = entry.alg
                break
        if alg is None:
            for entry in a.flat:
                if isinstance(entry, Jet):
                    alg = entry.alg
                    break
        return projector_from_span(a, W, alg)

    return ManifoldModel(name, n, split, a_field, b_field,
                         domain=domain, default_points=default_points)


# ---------------------------------------------------------------------------
# Normal chart construction


@dataclass
class NormalChartReport:
    """Second-order adapted chart at a point, with field derivatives there.

    The chart map is ``x_old = p + E z + 0.5 * Q[i,a,b] z^a z^b`` for new
    coordinates z.  ``da`` and ``db`` hold first derivatives (index order
    ``[k, i, j]``) of the first-block quadratic form and of the lowered
    projector in the new chart; ``f_rates`` holds the first-order tilt of the
    first subbundle's frame, ``f_rates[k, i, j]`` being the rate of the
    coefficient of the (n1 + j)-th coordinate direction in the i-th frame
    vector.
    """

    point: np.ndarray
    split: tuple
    frame: np.ndarray
    quadratic: np.ndarray
    chart_model: ManifoldModel
    da: np.ndarray
    db: np.ndarray
    f_rates: np.ndarray
    aligned: np.ndarray | None = None

    @property
    def b1n_dx1(self) -> float:
        """d/dz^1 of the (1, n) projector entry at the chart center."""
        return float(self.db[0, 0, -1])

    @property
    def b1n_dxn(self) -> float:
        """d/dz^n of the (1, n) projector entry at the chart center."""
        return float(self.db[-1, 0, -1])

    def to_dict(self) -> dict:
        return {
            "point": [float(v) for v in self.point],
            "split": list(self.split),
            "frame": self.frame.tolist(),
            "db": self.db.tolist(),
            "b1n_dx1": self.b1n_dx1,
            "b1n_dxn": self.b1n_dxn,
            "aligned": None if self.aligned is None else [float(v) for v in self.aligned],
        }


def _householder_with_column(u: np.ndarray, position: int) -> np.ndarray:
    """Orthogonal matrix whose column `position` equals the unit vector u."""
    k = u.size
    e = np.zeros(k)
    e[position] = 1.0
    v = u - e
    nv2 = float(v @ v)
    if nv2 < 1e-28:
        return np.eye(k)
    return np.eye(k) - 2.0 * np.outer(v, v) / nv2


def _orient_block(cols: np.ndarray, indices) -> np.ndarray:
    """Deterministic in-block basis: Procrustes toward the identity columns."""
    target = np.zeros((cols.shape[0], len(indices)))
    for j, idx in enumerate(indices):
        target[idx, j] = 1.0
    M = cols.T @ target
    u, s, vt = np.linalg.svd(M)
    if s.size and s.min() > 1e-6:
        return cols @ (u @ vt)
    # Degenerate overlap with the target: fall back to a sign convention.
    out = cols.copy()
    for j in range(out.shape[1]):
        lead = np.argmax(np.abs(out[:, j]))
        if out[lead, j] < 0:
            out[:, j] = -out[:, j]
    return out


def _christoffels(a_field, p: np.ndarray, n: int) -> np.ndarray:
    a0, da = field_derivatives(a_field, p, n)
    ainv = np.linalg.inv(a0)
    gamma = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                s = 0.0
                for l in range(n):
                    s += ainv[i, l] * (da[j, l, k] + da[k, l, j] - da[l, j, k])
                gamma[i, j, k] = 0.5 * s
    return gamma


def _pullback_fields(model: ManifoldModel, p, E, Q):
    """Closures for the model fields in the chart x_old = p + E z + Q z z / 2."""
    n = model.dimension
    p = np.asarray(p, dtype=float)

    def chart_map(z):
        out = []
        for i in range(n):
            acc = p[i]
            for a in range(n):
                acc = acc + E[i, a] * z[a]
            for a in range(n):
                acc = acc + 0.5 * Q[i, a, a] * z[a] * z[a]
                for b in range(a + 1, n):
                    acc = acc + Q[i, a, b] * z[a] * z[b]
            out.append(acc)
        return out

    def jacobian(z):
        J = np.empty((n, n), dtype=object)
        for i in range(n):
            for a in range(n):
                acc = E[i, a]
                for b in range(n):
                    acc = acc + Q[i, a, b] * z[b]
                J[i, a] = acc
        return J

    def pull(field):
        def pulled(z, _f=field):
            x = chart_map(z)
            J = jacobian(z)
            return matmul(J.T, matmul(np.asarray(_f(x), dtype=object), J))

        return pulled

    def domain(z):
        return model.contains([float(v) for v in chart_map(list(z))])

    return pull(model.a_field), pull(model.b_field), domain, chart_map


def normal_chart(model: ManifoldModel, p, align=None, *,
                 projector_tol: float = 1e-10) -> NormalChartReport:
    """Build a second-order adapted chart at p and report field derivatives.

    The chart consists of (i) a linear frame diagonalizing the metric and
    block-aligning the splitting at p (with a deterministic in-block
    orientation, overridden along ``align`` when given so that the aligned
    vector maps to ``(a, 0, ..., 0, a')``), and (ii) a quadratic correction
    cancelling the connection coefficients at p.  Raises
    :class:`AlignmentError` if ``align`` lies in one of the subbundles and
    :class:`ModelError` if the projector field is invalid at p.
    """
    n = model.dimension
    n1, n2 = model.split
    p = np.asarray(p, dtype=float)
    if not model.contains(p):
        raise ModelError(f"point {p.tolist()} outside the domain of {model.name!r}")

    a0 = value_matrix(np.asarray(model.a_field(list(p)), dtype=object))
    b0 = value_matrix(np.asarray(model.b_field(list(p)), dtype=object))
    if not np.allclose(a0, a0.T, atol=1e-12) or not np.allclose(b0, b0.T, atol=1e-12):
        raise ModelError("metric or projector matrix is not symmetric at p")
    resid = b0 @ np.linalg.solve(a0, b0) - b0
    if np.max(np.abs(resid)) > max(projector_tol, 1e-10):
        raise ModelError(
            f"b is not an a-orthogonal projector at p (residual {np.max(np.abs(resid)):.2e})"
        )

    eigvals, vecs = scipy.linalg.eigh(b0, a0)
    if np.sum(eigvals < 0.5) != n1 or np.sum(eigvals >= 0.5) != n2:
        raise ModelError(
            f"projector rank at p is {int(np.sum(eigvals >= 0.5))}, expected {n2}"
        )
    if np.max(np.abs(eigvals - np.round(eigvals))) > 1e-8:
        raise ModelError("projector eigenvalues are not near 0/1 at p")

    E = np.empty((n, n))
    E[:, :n1] = _orient_block(vecs[:, :n1], list(range(n1)))
    E[:, n1:] = _orient_block(vecs[:, n1:], list(range(n1, n)))

    aligned = None
    if align is not None:
        align = np.asarray(align, dtype=float)
        comps = np.linalg.solve(E, align)
        u1, u2 = comps[:n1], comps[n1:]
        scale = np.linalg.norm(comps)
        if np.linalg.norm(u1) <= 1e-10 * scale or np.linalg.norm(u2) <= 1e-10 * scale:
            raise AlignmentError(
                "alignment vector lies inside a subbundle; need components in both"
            )
        B = np.zeros((n, n))
        B[:n1, :n1] = _householder_with_column(u1 / np.linalg.norm(u1), 0)
        B[n1:, n1:] = _householder_with_column(u2 / np.linalg.norm(u2), n2 - 1)
        E = E @ B
        aligned = np.linalg.solve(E, align)

    gamma = _christoffels(model.a_field, p, n)
    Q = -np.einsum("ijk,ja,kb->iab", gamma, E, E)
    Q = 0.5 * (Q + np.transpose(Q, (0, 2, 1)))

    a_new, b_new, domain, chart_map = _pullback_fields(model, p, E, Q)
    chart_model = ManifoldModel(
        f"{model.name}@chart", n, model.split, a_new, b_new, domain=domain
    )
    chart_model.chart_map = chart_map

    origin = np.zeros(n)
    afull0, dafull = field_derivatives(a_new, origin, n)
    b0n, db = field_derivatives(b_new, origin, n)
    da = dafull - db  # first-block form is (full metric) - (projector)

    if np.max(np.abs(afull0 - np.eye(n))) > 1e-10:
        raise ModelError("chart construction failed to normalize the metric at p")

    f_rates = _frame_tilt_rates(chart_model)

    return NormalChartReport(
        point=p,
        split=model.split,
        frame=E,
        quadratic=Q,
        chart_model=chart_model,
        da=da,
        db=db,
        f_rates=f_rates,
        aligned=aligned,
    )


def _frame_tilt_rates(chart_model: ManifoldModel) -> np.ndarray:
    """First-order tilt of the first subbundle's coordinate frame at the center.

    Near the center the first subbundle is spanned by vectors
    ``e_i + f_i^j e_j`` (i <= n1 < j); this computes ``d/dz^k f_i^j`` at 0 by
    projecting coordinate directions and renormalizing, independently of the
    projector-derivative route.
    """
    n = chart_model.dimension
    n1, n2 = chart_model.split
    alg = algebra((n,), (1,))
    z = alg.variables([0.0] * n)
    a = np.asarray(chart_model.a_field(z), dtype=object)
    b = np.asarray(chart_model.b_field(z), dtype=object)
    p2 = matmul(jet_matrix_inverse(a, alg), b)
    # columns i <= n1 of (I - P2) span the first subbundle
    cols = np.empty((n, n1), dtype=object)
    for i in range(n):
        for j in range(n1):
            cols[i, j] = (1.0 if i == j else 0.0) - p2[i, j]
    top = cols[:n1, :]
    top_inv = jet_matrix_inverse(top, alg)
    frame = matmul(cols, top_inv)  # rows n1..n hold f_i^j coefficients
    rates = np.zeros((n, n1, n2))
    for i in range(n1):
        for j in range(n2):
            entry = frame[n1 + j, i]
            if isinstance(entry, Jet):
                for k in range(n):
                    exps = [0] * n
                    exps[k] = 1
                    rates[k, i, j] = entry.partial(exps)
    return rates


# ---------------------------------------------------------------------------
# Chart identity checks


@dataclass
class ChartIdentityReport:
    """Max violations of the first-derivative identities in an adapted chart."""

    metric_vs_projector: float   # d_k a_ij + d_k b_ij = 0
    within_block: float          # d_k b_ij = 0 inside each block
    cross_vs_frame: float        # d_k b_ij = -d_k f_i^j across blocks
    max_violation: float

    @property
    def passed(self) -> bool:
        return math.isfinite(self.max_violation)

    def within(self, tol: float) -> bool:
        return self.max_violation < tol


def check_chart_identities(report: NormalChartReport) -> ChartIdentityReport:
    """Verify the adapted-chart derivative identities from independent routes."""
    n1, n2 = report.split
    n = n1 + n2
    da, db, fr = report.da, report.db, report.f_rates

    v1 = float(np.max(np.abs(da + db)))

    v2 = 0.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                same_block = (i < n1 and j < n1) or (i >= n1 and j >= n1)
                if same_block:
                    v2 = max(v2, abs(db[k, i, j]))

    v3 = 0.0
    for k in range(n):
        for i in range(n1):
            for j in range(n2):
                v3 = max(v3, abs(db[k, i, n1 + j] + fr[k, i, j]))

    return ChartIdentityReport(
        metric_vs_projector=v1,
        within_block=v2,
        cross_vs_frame=v3,
        max_violation=max(v1, v2, v3),
    )


def product_structure_criterion(report: NormalChartReport, tol: float = 1e-9) -> bool:
    """True iff every cross-block projector derivative vanishes at the center.

    When this holds at every point the splitting is parallel and the induced
    split-quadratic metrics have quadratic spray coefficients.
    """
    n1, n2 = report.split
    cross = report.db[:, :n1, n1:]
    return bool(np.max(np.abs(cross)) < tol)
