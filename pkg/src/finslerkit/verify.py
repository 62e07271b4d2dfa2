"""Cross-check suites: classification, dual-path S-curvature, chart patterns,
indicatrix traces and the punctured-plane non-Landsberg certificate.

Every "vanishing" verdict is calibrated against a known-zero control: the
Riemannian norm of the same geometry run through the identical pipeline.
Sample plans are deterministic, so reports reproduce byte-for-byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from finslerkit import curvature as cv
from finslerkit import landsberg as lb
from finslerkit.jets import algebra, Jet
from finslerkit.manifolds import (
    ManifoldModel,
    NormalChartReport,
    check_chart_identities,
    normal_chart,
    polar_plane,
    product_structure_criterion,
)
from finslerkit.metrics import Alpha1Alpha2Spec, MetricSpec, generator, metric_from_model
from finslerkit.sampling import SamplePlan, sphere_sequence

__all__ = [
    "ClassificationTolerances",
    "ClassificationReport",
    "classify",
    "DualPathRow",
    "DualPathReport",
    "s_curvature_dual_check",
    "EquivalenceReport",
    "s_vanishing_equivalence",
    "IndicatrixTrace",
    "indicatrix_cartan_trace",
    "NonLandsbergCertificate",
    "non_landsberg_certificate",
    "ChartPatternReport",
    "polar_chart_pattern",
    "hopf_chart_pattern",
    "chart_identities_suite",
    "product_criterion_suite",
    "IsometryInvarianceReport",
    "isometry_invariance_suite",
    "ClosedFormReport",
    "closed_form_suite",
]


# ---------------------------------------------------------------------------
# Classification


@dataclass
class ClassificationTolerances:
    """Explicit thresholds; fields left at None are calibrated from controls."""

    mean_cartan: float | None = None
    berwald: float | None = None
    landsberg: float | None = None
    s_curvature: float | None = None
    floor_scale: float = 10.0
    min_jet_floor: float = 1e-10
    min_s_floor: float = 2e-6


@dataclass
class ClassificationReport:
    flags: dict
    residuals: dict
    tolerances: dict
    control_residuals: dict
    plan: str
    spec_name: str
    model_name: str

    def to_dict(self) -> dict:
        return {
            "flags": dict(self.flags),
            "residuals": dict(self.residuals),
            "tolerances": dict(self.tolerances),
            "control_residuals": dict(self.control_residuals),
            "plan": self.plan,
            "spec": self.spec_name,
            "model": self.model_name,
        }


def _residual_scan(spec: MetricSpec, model, plan: SamplePlan) -> dict:
    n = spec.dimension
    out = {"max_mean_cartan": 0.0, "max_berwald": 0.0, "max_landsberg": 0.0, "max_s": 0.0}
    for p in plan.points:
        rep = normal_chart(model, p)
        chart_spec = cv.bind_metric(spec, rep.chart_model)
        origin = [0.0] * n
        for y in plan.directions(n):
            y = list(y)
            try:
                cd = cv.cartan_tensor(chart_spec, origin, y)
                ct = cv.berwald_landsberg_tensors(chart_spec, None, origin, y)
                s = cv.s_curvature_direct(chart_spec, None, origin, y)
            except (cv.StrongConvexityError, cv.DegenerateHessianError) as err:
                raise type(err)(f"classification failed at x={p}, y={y}: {err}") from err
            out["max_mean_cartan"] = max(out["max_mean_cartan"], cd.max_mean_cartan())
            out["max_berwald"] = max(out["max_berwald"], ct.max_berwald)
            out["max_landsberg"] = max(out["max_landsberg"], ct.max_landsberg)
            out["max_s"] = max(out["max_s"], abs(s))
    return out


def classify(spec: MetricSpec, model: ManifoldModel, plan: SamplePlan | None = None,
             tols: ClassificationTolerances | None = None) -> ClassificationReport:
    """Residual-based property flags with control-calibrated thresholds.

    Scans mean Cartan, Berwald and Landsberg tensors and the S-curvature over
    the plan, runs the model's Riemannian norm through the identical scan,
    and flags each property as holding when its residual stays below
    ``floor_scale`` times the control's (with absolute floors protecting
    against exactly-zero controls).
    """
    tols = tols or ClassificationTolerances()
    if plan is None:
        plan = SamplePlan(points=model.default_points(5), directions_per_point=16)
    if len(plan.points) < 5 or plan.directions_per_point < 16:
        raise ValueError("classification plan must cover >= 5 points x 16 directions")

    spec = cv.bind_metric(spec, model)
    residuals = _residual_scan(spec, model, plan)
    control = _residual_scan(cv.riemannian_control(model), model, plan)

    def threshold(explicit, control_val, minimum):
        if explicit is not None:
            return explicit
        return max(tols.floor_scale * control_val, minimum)

    thr = {
        "mean_cartan": threshold(tols.mean_cartan, control["max_mean_cartan"], tols.min_jet_floor),
        "berwald": threshold(tols.berwald, control["max_berwald"], tols.min_jet_floor),
        "landsberg": threshold(tols.landsberg, control["max_landsberg"], tols.min_jet_floor),
        "s_curvature": threshold(tols.s_curvature, control["max_s"], tols.min_s_floor),
    }

    flags = {
        "riemannian": residuals["max_mean_cartan"] < thr["mean_cartan"],
        "berwald": residuals["max_berwald"] < thr["berwald"],
        "landsberg": residuals["max_landsberg"] < thr["landsberg"],
        "s_vanishing": residuals["max_s"] < thr["s_curvature"],
    }
    # structural implications, enforced on the emitted report
    if flags["berwald"]:
        flags["landsberg"] = True
        flags["s_vanishing"] = True

    return ClassificationReport(
        flags=flags,
        residuals=residuals,
        tolerances=thr,
        control_residuals=control,
        plan=plan.describe(),
        spec_name=spec.name,
        model_name=model.name,
    )


# ---------------------------------------------------------------------------
# Dual-path S-curvature


@dataclass
class DualPathRow:
    direction: tuple
    s_direct: float
    s_formula: float
    rel_err: float


@dataclass
class DualPathReport:
    rows: list
    tol_rel: float
    noise_floor: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "direction": list(r.direction),
                    "s_direct": r.s_direct,
                    "s_formula": r.s_formula,
                    "rel_err": r.rel_err,
                }
                for r in self.rows
            ],
            "tol_rel": self.tol_rel,
            "noise_floor": self.noise_floor,
            "passed": self.passed,
        }


def s_curvature_dual_check(gen, model: ManifoldModel, p, directions,
                           tol_rel: float = 1e-4,
                           noise_floor: float | None = None) -> DualPathReport:
    """Compare spray-derivative and closed-form S-curvature at aligned directions.

    Directions are (a, a') pairs with both components nonzero and
    a^2 + a'^2 = 1.  Where the closed form is larger than the calibrated
    noise floor the comparison is relative; below it both values must sit
    under the floor.
    """
    rep = normal_chart(model, p)
    spec = metric_from_model(gen, rep.chart_model)
    n = spec.dimension
    origin = [0.0] * n

    if noise_floor is None:
        ctrl = cv.riemannian_control(rep.chart_model)
        worst = 0.0
        for a, ap in directions:
            y = [0.0] * n
            y[0], y[-1] = a, ap
            worst = max(worst, abs(cv.s_curvature_direct(ctrl, None, origin, y)))
        noise_floor = max(10.0 * worst, 2e-5)

    rows = []
    ok = True
    for a, ap in directions:
        y = [0.0] * n
        y[0], y[-1] = float(a), float(ap)
        s_dir = cv.s_curvature_direct(spec, None, origin, y)
        s_form = cv.s_curvature_formula(spec, rep, float(a), float(ap)).value
        if abs(s_form) > 10.0 * noise_floor:
            rel = abs(s_dir - s_form) / abs(s_form)
            ok = ok and rel < tol_rel
        else:
            rel = abs(s_dir - s_form)
            ok = ok and abs(s_dir) < noise_floor and abs(s_form) < noise_floor
        rows.append(DualPathRow(direction=(float(a), float(ap)),
                                s_direct=float(s_dir), s_formula=float(s_form),
                                rel_err=float(rel)))
    return DualPathReport(rows=rows, tol_rel=tol_rel, noise_floor=float(noise_floor),
                          passed=ok)


# ---------------------------------------------------------------------------
# Vanishing-S equivalence sampling


@dataclass
class EquivalenceReport:
    rows: list  # (point, identity_verdict, sampled_verdict, max_identity_violation, max_abs_s)
    passed: bool

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "point": [float(v) for v in p],
                    "identity_verdict": iv,
                    "sampled_verdict": sv,
                    "max_identity_violation": viol,
                    "max_abs_s": ms,
                }
                for p, iv, sv, viol, ms in self.rows
            ],
            "passed": self.passed,
        }


def s_vanishing_equivalence(model: ManifoldModel, points, gen="cross02",
                            num_directions: int = 16,
                            identity_tol: float = 1e-8) -> EquivalenceReport:
    """Per point: does the chart antisymmetry pattern predict sampled S = 0?

    The identity side is metric-free; the sampled side evaluates the spray
    derivative of the distortion for the given generator over a deterministic
    direction set, with a Riemannian control fixing the vanishing threshold.
    """
    rows = []
    ok = True
    for p in points:
        rep = normal_chart(model, p)
        spec = metric_from_model(gen, rep.chart_model)
        ctrl = cv.riemannian_control(rep.chart_model)
        n = spec.dimension
        origin = [0.0] * n
        identity_ok, viol = cv.s_vanishing_chart_identities(rep, identity_tol)
        max_s = 0.0
        max_ctrl = 0.0
        for y in sphere_sequence(n, num_directions):
            max_s = max(max_s, abs(cv.s_curvature_direct(spec, None, origin, list(y))))
            max_ctrl = max(max_ctrl, abs(cv.s_curvature_direct(ctrl, None, origin, list(y))))
        floor = max(10.0 * max_ctrl, 2e-6)
        sampled_ok = max_s < floor
        rows.append((np.asarray(p, float), bool(identity_ok), bool(sampled_ok),
                     float(viol), float(max_s)))
        ok = ok and (identity_ok == sampled_ok)
    return EquivalenceReport(rows=rows, passed=ok)


# ---------------------------------------------------------------------------
# Indicatrix trace


@dataclass
class IndicatrixTrace:
    angles: np.ndarray
    points: np.ndarray
    tangents: np.ndarray
    trace: np.ndarray
    norm_residual_max: float
    tangent_norm_residual_max: float

    def range(self) -> float:
        return float(np.max(self.trace) - np.min(self.trace))


def indicatrix_cartan_trace(norm: MetricSpec, num_angles: int = 256) -> IndicatrixTrace:
    """Cartan trace along the unit circle of a planar Minkowski norm.

    Points are radial scalings of (cos t, sin t) onto the unit level set;
    tangents follow the anticlockwise parametrization, normalized in the
    Hessian metric; the trace is the full Cartan contraction with the unit
    tangent.
    """
    if norm.dimension != 2:
        raise ValueError("indicatrix trace is defined for planar norms")
    if num_angles < 64:
        raise ValueError("need at least 64 angles")
    angles = 2.0 * math.pi * np.arange(num_angles) / num_angles
    pts = np.empty((num_angles, 2))
    tans = np.empty((num_angles, 2))
    trace = np.empty(num_angles)
    worst_f = 0.0
    worst_t = 0.0
    x0 = [0.0, 0.0]
    for idx, t in enumerate(angles):
        u = np.array([math.cos(t), math.sin(t)])
        du = np.array([-math.sin(t), math.cos(t)])
        alg = algebra((2,), (3,))
        yj = alg.variables(list(u))
        f2 = norm.squared_norm(x0, yj)
        if not isinstance(f2, Jet):
            raise cv.StrongConvexityError("norm produced no jet data on the circle")
        fval = math.sqrt(f2.value)
        grad_f2 = np.array([f2.partial((1, 0)), f2.partial((0, 1))])
        dfdt = float(grad_f2 @ du) / (2.0 * fval)
        Y = u / fval
        dY = du / fval - u * dfdt / fval**2

        try:
            ft = cv.fundamental_tensor(norm, x0, list(Y))
            cd = cv.cartan_tensor(norm, x0, list(Y))
        except cv.StrongConvexityError as err:
            raise cv.StrongConvexityError(f"degenerate Hessian at angle t={t}: {err}") from err
        speed = math.sqrt(float(dY @ ft.g @ dY))
        U = dY / speed
        pts[idx] = Y
        tans[idx] = U
        trace[idx] = float(np.einsum("ijk,i,j,k->", cd.C, U, U, U))
        worst_f = max(worst_f, abs(float(norm.norm(x0, list(Y))) - 1.0))
        worst_t = max(worst_t, abs(float(U @ ft.g @ U) - 1.0))
    return IndicatrixTrace(
        angles=angles, points=pts, tangents=tans, trace=trace,
        norm_residual_max=worst_f, tangent_norm_residual_max=worst_t,
    )


# ---------------------------------------------------------------------------
# Punctured-plane non-Landsberg certificate


class LinearGeneratorError(ValueError):
    """The certificate needs a nonlinear generator; a linear one is Riemannian."""


@dataclass
class NonLandsbergCertificate:
    max_landsberg: float
    noise_floor: float
    witness_point: np.ndarray
    witness_direction: np.ndarray
    trace_nonconstant: bool
    trace_range: float
    axis_trace_max: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "max_landsberg": self.max_landsberg,
            "noise_floor": self.noise_floor,
            "witness_point": [float(v) for v in self.witness_point],
            "witness_direction": [float(v) for v in self.witness_direction],
            "trace_nonconstant": self.trace_nonconstant,
            "trace_range": self.trace_range,
            "axis_trace_max": self.axis_trace_max,
            "passed": self.passed,
        }


def non_landsberg_certificate(gen, base_radius: float = 1.0,
                              nonlinearity_tol: float = 1e-9,
                              num_points: int = 3,
                              num_directions: int = 16) -> NonLandsbergCertificate:
    """Numerical witness that the angular/radial split metric is not Landsberg.

    Evaluates the Landsberg tensor of the punctured-plane metric over a
    deterministic grid at the given base radius and certifies a nonzero
    maximum against ten times the Riemannian-control noise floor; also
    reports that the indicatrix Cartan trace is non-constant with exact
    zeros on the coordinate axes.
    """
    gen = generator(gen)
    nonlin = 0.0
    for s, t in [(1.0, 1.0), (0.36, 0.64), (2.0, 0.5)]:
        d = gen.partials(s, t)
        nonlin = max(nonlin, abs(d.L11), abs(d.L12), abs(d.L22))
    if nonlin <= nonlinearity_tol:
        raise LinearGeneratorError(
            "generator is linear to tolerance; the split metric is Riemannian "
            "and the certificate is vacuous"
        )

    model = polar_plane()
    golden = (math.sqrt(5.0) - 1.0) / 2.0
    points = [
        [base_radius * math.cos(2.0 * math.pi * ((i * golden) % 1.0)),
         base_radius * math.sin(2.0 * math.pi * ((i * golden) % 1.0))]
        for i in range(num_points)
    ]

    best = 0.0
    floor = 0.0
    wit_p = np.zeros(2)
    wit_y = np.zeros(2)
    for p in points:
        rep = normal_chart(model, p)
        spec = metric_from_model(gen, rep.chart_model)
        ctrl = cv.riemannian_control(rep.chart_model)
        for y in sphere_sequence(2, num_directions):
            val = cv.berwald_landsberg_tensors(spec, None, [0.0, 0.0], list(y)).max_landsberg
            floor = max(floor, cv.berwald_landsberg_tensors(ctrl, None, [0.0, 0.0], list(y)).max_landsberg)
            if val > best:
                best = val
                wit_p = np.asarray(p, float)
                wit_y = np.asarray(y, float)
    floor = max(floor, 1e-12)

    frozen = metric_from_model(gen, model).frozen_at(points[0])
    tr = indicatrix_cartan_trace(frozen, 256)
    axis_angles = [0, len(tr.angles) // 4, len(tr.angles) // 2, 3 * len(tr.angles) // 4]
    axis_max = max(abs(tr.trace[i]) for i in axis_angles)
    nonconstant = tr.range() > 1e-6

    return NonLandsbergCertificate(
        max_landsberg=float(best),
        noise_floor=float(floor),
        witness_point=wit_p,
        witness_direction=wit_y,
        trace_nonconstant=bool(nonconstant),
        trace_range=tr.range(),
        axis_trace_max=float(axis_max),
        passed=bool(best > 10.0 * floor and nonconstant),
    )


# ---------------------------------------------------------------------------
# Chart pattern checks for the two curved built-ins


@dataclass
class ChartPatternReport:
    entries: dict
    passed: bool

    def to_dict(self) -> dict:
        return {"entries": dict(self.entries), "passed": self.passed}


def polar_chart_pattern(base_radius: float = 1.0, angle: float = 0.0,
                        tol: float = 1e-8) -> ChartPatternReport:
    """Adapted chart of the punctured plane: nonzero first cross-rate, zero last."""
    model = polar_plane()
    p = [base_radius * math.cos(angle), base_radius * math.sin(angle)]
    rep = normal_chart(model, p)
    a1, a2 = rep.b1n_dx1, rep.b1n_dxn
    entries = {
        "abs_b12_dx1": abs(a1),
        "b12_dx2": a2,
        "expected_abs_b12_dx1": 1.0 / base_radius,
    }
    passed = abs(a1) > 1e-6 and abs(a2) < tol and abs(abs(a1) - 1.0 / base_radius) < tol
    return ChartPatternReport(entries=entries, passed=passed)


def hopf_chart_pattern(point=None, tol: float = 1e-8) -> ChartPatternReport:
    """Adapted chart of the fibered 3-sphere: the antisymmetric unit cross pattern."""
    from finslerkit.manifolds import hopf_sphere

    model = hopf_sphere()
    p = [0.0, 0.0, 0.0] if point is None else list(point)
    rep = normal_chart(model, p)
    db = rep.db
    entries = {
        "b13_dx1": db[0, 0, 2],
        "b23_dx2": db[1, 1, 2],
        "b13_dx3": db[2, 0, 2],
        "b23_dx3": db[2, 1, 2],
        "b23_dx1": db[0, 1, 2],
        "b13_dx2": db[1, 0, 2],
    }
    zeros_ok = all(
        abs(entries[k]) < tol for k in ("b13_dx1", "b23_dx2", "b13_dx3", "b23_dx3")
    )
    anti_ok = abs(entries["b23_dx1"] + entries["b13_dx2"]) < tol
    unit_ok = (
        abs(abs(entries["b23_dx1"]) - 1.0) < tol
        and abs(abs(entries["b13_dx2"]) - 1.0) < tol
    )
    return ChartPatternReport(entries=entries, passed=zeros_ok and anti_ok and unit_ok)


def chart_identities_suite(model: ManifoldModel, points=None,
                           tol: float = 1e-8) -> dict:
    """Run the first-derivative chart identities at several points."""
    if points is None:
        points = model.default_points(3)
    worst = 0.0
    for p in points:
        rep = normal_chart(model, p)
        worst = max(worst, check_chart_identities(rep).max_violation)
    return {"max_violation": float(worst), "passed": bool(worst < tol),
            "points": [list(map(float, p)) for p in points]}


def product_criterion_suite(model: ManifoldModel, gen="cross02", points=None,
                            tol: float = 1e-9) -> dict:
    """Instance check: the parallel-splitting criterion against Berwald residuals."""
    if points is None:
        points = model.default_points(3)
    agree = True
    rows = []
    for p in points:
        rep = normal_chart(model, p)
        crit = product_structure_criterion(rep, tol)
        spec = metric_from_model(gen, rep.chart_model)
        ctrl = cv.riemannian_control(rep.chart_model)
        max_b = 0.0
        floor = 0.0
        n = model.dimension
        for y in sphere_sequence(n, 8):
            max_b = max(max_b, cv.berwald_landsberg_tensors(spec, None, [0.0] * n, list(y)).max_berwald)
            floor = max(floor, cv.berwald_landsberg_tensors(ctrl, None, [0.0] * n, list(y)).max_berwald)
        berwald_here = max_b < max(10.0 * floor, 1e-10)
        rows.append({"point": list(map(float, p)), "criterion": bool(crit),
                     "max_berwald": float(max_b), "berwald_verdict": bool(berwald_here)})
        agree = agree and (crit == berwald_here)
    return {"rows": rows, "passed": bool(agree)}


# ---------------------------------------------------------------------------
# Isometry invariance suite


@dataclass
class IsometryInvarianceReport:
    kernel_identity_max: float
    linearity_max: float
    hessian_equivariance_max: float
    rows: list
    passed: bool

    def to_dict(self) -> dict:
        return {
            "kernel_identity_max": self.kernel_identity_max,
            "linearity_max": self.linearity_max,
            "hessian_equivariance_max": self.hessian_equivariance_max,
            "rows": self.rows,
            "passed": self.passed,
        }


def isometry_invariance_suite(norm: MetricSpec, fields=None, maps=None,
                              num_fibers: int = 20,
                              kernel_tol: float = 1e-9,
                              linearity_tol: float = 1e-10) -> IsometryInvarianceReport:
    """Kernel identity, operator linearity and Hessian equivariance checks.

    Defaults to five block rotations of the norm's split (plus sign flips)
    and a small family of 2-homogeneous polynomial fields.
    """
    n = norm.dimension
    if maps is None:
        if isinstance(norm, Alpha1Alpha2Spec):
            n1, n2 = norm.split
        else:
            n1, n2 = n - 1, 1
        angles = [0.3, 0.9, 1.4, 2.2, 2.9]
        maps = [lb.block_rotation(n1, n2, angle1=a, angle2=a / 2.0) for a in angles]
        signs = np.ones(n)
        signs[1:-1] = -1.0  # flip every middle entry, an isometry of any split norm
        maps.append(lb.LinearMap.from_matrix(np.diag(signs)))
    if fields is None:
        fields = _default_fields(n)
    fibers = [list(y) for y in sphere_sequence(n, num_fibers)]

    kernel_max = 0.0
    rows = []
    for mi, mp in enumerate(maps):
        lb.verify_isometry(norm, mp)
        for fi, f in enumerate(fields):
            xif = lb.isometry_action(mp, f)
            worst = 0.0
            for y in fibers:
                lhs = lb.spray_operator(norm, xif, y)
                rhs = mp.eta @ lb.spray_operator(norm, f, mp.apply(y))
                worst = max(worst, float(np.max(np.abs(lhs - rhs))))
            kernel_max = max(kernel_max, worst)
            rows.append({"map": mi, "field": fi, "kernel_identity_max": worst})

    lin_max = 0.0
    f0, f1 = fields[0], fields[-1]
    comb = f0.combine(f1, 2.0, 3.0)
    for y in fibers:
        lhs = lb.spray_operator(norm, comb, y)
        rhs = 2.0 * lb.spray_operator(norm, f0, y) + 3.0 * lb.spray_operator(norm, f1, y)
        lin_max = max(lin_max, float(np.max(np.abs(lhs - rhs))))

    hess_max = 0.0
    for mp in maps:
        for y in fibers[:8]:
            gy = cv.fundamental_tensor(norm, [0.0] * n, y).g
            gxy = cv.fundamental_tensor(norm, [0.0] * n, mp.apply(y)).g
            hess_max = max(hess_max, float(np.max(np.abs(gxy - mp.eta.T @ gy @ mp.eta))))

    return IsometryInvarianceReport(
        kernel_identity_max=float(kernel_max),
        linearity_max=float(lin_max),
        hessian_equivariance_max=float(hess_max),
        rows=rows,
        passed=bool(kernel_max < kernel_tol and lin_max < linearity_tol and hess_max < 1e-9),
    )


def _default_fields(n: int) -> list:
    quad = lb.FiberField(
        [(lambda y, i=i: y[i] * y[(i + 1) % n]) for i in range(n)], n, name="quad"
    )
    mixed = lb.FiberField(
        [(lambda y, i=i: y[i] * y[i] - y[(i + 2) % n] * y[(i + 1) % n]) for i in range(n)],
        n, name="mixed",
    )

    def ratio_comp(i):
        def c(y, _i=i):
            q = 0.0
            for v in y:
                q = q + v * v
            return y[_i] * y[_i] * y[(_i + 1) % n] * y[(_i + 1) % n] / q

        return c

    quartic_ratio = lb.FiberField([ratio_comp(i) for i in range(n)], n, name="quartic-ratio")
    return [quad, mixed, quartic_ratio]


# ---------------------------------------------------------------------------
# Closed-form suite (aligned samples)


@dataclass
class ClosedFormReport:
    max_rel: dict
    det_identity_rel: float
    raised_trace_variant: str
    alt_variant_rel: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "max_rel": dict(self.max_rel),
            "det_identity_rel": self.det_identity_rel,
            "raised_trace_variant": self.raised_trace_variant,
            "alt_variant_rel": self.alt_variant_rel,
            "passed": self.passed,
        }


def closed_form_suite(gen, model: ManifoldModel, p, directions,
                      tol_rel: float = 1e-8) -> ClosedFormReport:
    """Generic jet pipeline against the aligned closed forms at one point.

    Compares the fundamental tensor, its inverse, the Cartan tensor, the mean
    Cartan covector/vector and the covariant spray pair, all at directions
    (a, 0, ..., 0, a') with a^2 + a'^2 = 1; also settles which denominator
    variant of the raised trace's last component the generic pipeline
    supports.
    """
    rep = normal_chart(model, p)
    spec = metric_from_model(gen, rep.chart_model)
    n = spec.dimension
    n1, n2 = spec.split
    origin = [0.0] * n

    def rel(a, b):
        return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))
                     / max(1.0, float(np.max(np.abs(b)))))

    worst = {"g": 0.0, "g_inv": 0.0, "C": 0.0, "I_cov": 0.0, "I_contra": 0.0,
             "G_cov": 0.0}
    det_rel = 0.0
    alt_rel = np.inf
    for a, ap in directions:
        y = [0.0] * n
        y[0], y[-1] = float(a), float(ap)
        cf = cv.aligned_closed_forms(spec.generator, n1, n2, a, ap,
                                     rep.b1n_dx1, rep.b1n_dxn)
        ft = cv.fundamental_tensor(spec, origin, y)
        cd = cv.cartan_tensor(spec, origin, y)
        sp = cv.spray(spec, None, origin, y)
        worst["g"] = max(worst["g"], rel(ft.g, cf["g"]))
        worst["g_inv"] = max(worst["g_inv"], rel(ft.g_inv, cf["g_inv"]))
        worst["C"] = max(worst["C"], rel(cd.C, cf["C"]))
        worst["I_cov"] = max(worst["I_cov"], rel(cd.I_cov, cf["I_cov"]))
        worst["I_contra"] = max(worst["I_contra"], rel(cd.I_contra, cf["I_contra"]))
        worst["G_cov"] = max(
            worst["G_cov"],
            rel([sp.G_cov[0], sp.G_cov[-1]], [cf["G_cov_first"], cf["G_cov_last"]]),
        )
        det_rel = max(det_rel, abs(ft.det_g - cf["det_full"]) / abs(cf["det_full"]))
        # variant resolution only at directions where the two denominators
        # produce visibly different raised-trace values
        scale = max(1.0, abs(cf["I_contra"][-1]))
        if abs(cf["I_contra"][-1] - cf["i_contra_last_alt"]) > 1e-6 * scale:
            alt = abs(cd.I_contra[-1] - cf["i_contra_last_alt"]) / scale
            alt_rel = min(alt_rel, alt)

    passed = all(v < tol_rel for v in worst.values()) and det_rel < tol_rel
    if not math.isfinite(alt_rel):
        variant = "indistinguishable"
    elif worst["I_contra"] < alt_rel:
        variant = "doubled-cross-term"
    else:
        variant = "plain-cross-term"
    return ClosedFormReport(
        max_rel=worst,
        det_identity_rel=float(det_rel),
        raised_trace_variant=variant,
        alt_variant_rel=float(alt_rel),
        passed=bool(passed),
    )
