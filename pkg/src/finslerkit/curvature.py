"""Pointwise curvature quantities of a Finsler norm field.

Everything is computed through the jet engine: the fundamental tensor is the
half Hessian of the squared norm, the Cartan tensor its third derivative,
spray coefficients mix one x-derivative with y-derivatives, and the Berwald
tensor differentiates the spray three more times through the matrix inverse
(whose truncated expansion around the constant term is exact).  The
Busemann-Hausdorff density is the only quantity without a derivative route;
it comes from sphere quadrature and enters S-curvature via finite
differences with a shared node set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from finslerkit.jets import Jet, MultiOrder, algebra, fd_partial
from finslerkit.linalg import jet_logdet, jet_matrix_inverse, matmul
from finslerkit.metrics import (
    Alpha1Alpha2Spec,
    GeneratorDerivatives,
    MetricSpec,
    RiemannianSpec,
)

__all__ = [
    "StrongConvexityError",
    "DegenerateHessianError",
    "FundamentalTensor",
    "CartanData",
    "SprayData",
    "CurvatureTensors",
    "VolumeDistortion",
    "SCurvatureTerms",
    "bind_metric",
    "riemannian_control",
    "fundamental_tensor",
    "cartan_tensor",
    "spray",
    "berwald_landsberg_tensors",
    "bh_density",
    "distortion",
    "sigma_gradient",
    "s_curvature_direct",
    "s_curvature_formula",
    "s_vanishing_chart_identities",
    "aligned_closed_forms",
    "default_nodes",
    "batch_rows",
    "QUANTITY_NAMES",
]


class StrongConvexityError(ArithmeticError):
    """The fundamental tensor failed to be positive definite."""


class DegenerateHessianError(ArithmeticError):
    """The aligned Hessian-block determinant is not positive."""


def bind_metric(spec: MetricSpec, model) -> MetricSpec:
    """Attach a geometry model's fields to a spec when one is supplied."""
    if model is None:
        return spec
    if isinstance(spec, Alpha1Alpha2Spec):
        if spec.model is model:
            return spec
        return Alpha1Alpha2Spec(
            model.a_field, model.b_field, spec.generator, model.dimension,
            model.split, name=spec.name, model=model,
        )
    if isinstance(spec, RiemannianSpec):
        return RiemannianSpec(model.a_field, model.dimension, name=spec.name)
    return spec


def riemannian_control(model) -> RiemannianSpec:
    """The quadratic norm of the model's own metric: a known-zero control."""
    return RiemannianSpec(model.a_field, model.dimension, name="riemannian-control")


# ---------------------------------------------------------------------------
# Jet plumbing


def _squared_norm_jet(spec: MetricSpec, x, y, x_cap: int, y_cap: int):
    """Evaluate the squared norm with all coordinates seeded as jet variables.

    Returns ``(alg, jet, ypos)`` where y-coordinate i is algebra variable
    ``ypos + i`` (x-coordinate i is variable i when x_cap > 0).
    """
    n = spec.dimension
    xf = [float(v) for v in x]
    yf = [float(v) for v in y]
    if all(v == 0.0 for v in yf):
        raise StrongConvexityError("curvature requested at the zero fiber")
    if x_cap > 0:
        alg = algebra((n, n), (x_cap, y_cap))
        xs = [alg.variable(i, v) for i, v in enumerate(xf)]
        ys = [alg.variable(n + i, v) for i, v in enumerate(yf)]
        ypos = n
    else:
        alg = algebra((n,), (y_cap,))
        xs = xf
        ys = alg.variables(yf)
        ypos = 0
    val = spec.squared_norm(xs, ys)
    if not isinstance(val, Jet):
        val = alg.constant(float(val))
    if not np.all(np.isfinite(val.c)):
        raise StrongConvexityError("squared norm produced non-finite jet data")
    return alg, val, ypos


def _unit(n: int, i: int, extra: int = 0) -> list:
    e = [0] * (n + extra)
    e[i] = 1
    return e


# ---------------------------------------------------------------------------
# Fundamental and Cartan tensors


@dataclass
class FundamentalTensor:
    g: np.ndarray
    g_inv: np.ndarray
    det_g: float
    at: tuple

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.g)[0])


def fundamental_tensor(spec: MetricSpec, x, y) -> FundamentalTensor:
    """Half y-Hessian of the squared norm, its inverse and determinant.

    The inverse comes from a direct linear solve; closed-form inverses for
    special families exist only as cross-checks in the test suite.
    """
    n = spec.dimension
    alg, f2, _ = _squared_norm_jet(spec, x, y, 0, 2)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            e = [0] * n
            e[i] += 1
            e[j] += 1
            g[i, j] = g[j, i] = 0.5 * f2.partial(e)
    eigs = np.linalg.eigvalsh(g)
    if eigs[0] <= 0.0:
        raise StrongConvexityError(
            f"fundamental tensor not positive definite (min eigenvalue {eigs[0]:.3e})"
        )
    return FundamentalTensor(
        g=g,
        g_inv=np.linalg.inv(g),
        det_g=float(np.prod(eigs)),
        at=(np.asarray(x, float), np.asarray(y, float)),
    )


@dataclass
class CartanData:
    C: np.ndarray
    I_cov: np.ndarray
    I_contra: np.ndarray

    def max_mean_cartan(self) -> float:
        return float(np.max(np.abs(self.I_cov)))


def cartan_tensor(spec: MetricSpec, x, y) -> CartanData:
    """Cartan tensor (quarter third derivative) and its metric trace.

    The covariant trace is read off the y-derivative of half the
    log-determinant of the fundamental tensor, assembled by jet arithmetic on
    the Hessian-entry jets.
    """
    n = spec.dimension
    alg, f2, _ = _squared_norm_jet(spec, x, y, 0, 3)
    C = np.zeros((n, n, n))
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                e = [0] * n
                e[i] += 1
                e[j] += 1
                e[k] += 1
                v = 0.25 * f2.partial(e)
                for p in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
                    C[p] = v

    # Hessian entries as first-order jets in y (exact below the cap).
    gjets = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            gjets[i, j] = gjets[j, i] = 0.5 * f2.formal_partial(i).formal_partial(j)
    logdet = jet_logdet(gjets, alg)
    I_cov = np.array([0.5 * logdet.partial(_unit(n, k)) for k in range(n)])

    g0 = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            g0[i, j] = gjets[i, j].value
    I_contra = np.linalg.solve(g0, I_cov)
    return CartanData(C=C, I_cov=I_cov, I_contra=I_contra)


# ---------------------------------------------------------------------------
# Spray


@dataclass
class SprayData:
    G_contra: np.ndarray
    G_cov: np.ndarray
    g: np.ndarray


def spray(spec: MetricSpec, model, x, y) -> SprayData:
    """Geodesic spray coefficients, covariant and contravariant.

    ``G_l`` is a quarter of ``[F^2]_{x^k y^l} y^k - [F^2]_{x^l}``; raising the
    index uses a linear solve against the fundamental tensor.
    """
    spec = bind_metric(spec, model)
    n = spec.dimension
    alg, f2, ypos = _squared_norm_jet(spec, x, y, 1, 2)
    yf = [float(v) for v in y]

    f2_x = np.array([f2.partial(_unit(n, l, extra=n)) for l in range(n)])
    mixed = np.empty((n, n))  # mixed[k, l] = d^2 F^2 / dx^k dy^l
    for k in range(n):
        for l in range(n):
            e = [0] * (2 * n)
            e[k] = 1
            e[ypos + l] = 1
            mixed[k, l] = f2.partial(e)
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            e = [0] * (2 * n)
            e[ypos + i] += 1
            e[ypos + j] += 1
            g[i, j] = g[j, i] = 0.5 * f2.partial(e)

    G_cov = 0.25 * (mixed.T @ np.asarray(yf) - f2_x)
    try:
        G_contra = np.linalg.solve(g, G_cov)
    except np.linalg.LinAlgError as err:
        raise StrongConvexityError(f"singular fundamental tensor: {err}") from err
    return SprayData(G_contra=G_contra, G_cov=G_cov, g=g)


# ---------------------------------------------------------------------------
# Berwald and Landsberg tensors


@dataclass
class CurvatureTensors:
    berwald: np.ndarray
    landsberg: np.ndarray
    max_berwald: float
    max_landsberg: float
    method: str


def berwald_landsberg_tensors(spec: MetricSpec, model, x, y,
                              method: str = "jet") -> CurvatureTensors:
    """Third y-derivatives of the spray and their metric contraction.

    The default path runs jets end to end, differentiating through the
    matrix inverse via its truncated expansion; ``method="fd"`` instead
    applies central differences to spray evaluations and serves as the
    independent oracle.
    """
    if method == "fd":
        return _berwald_fd(spec, model, x, y)
    if method != "jet":
        raise ValueError(f"unknown method {method!r}")

    spec = bind_metric(spec, model)
    n = spec.dimension
    alg, f2, ypos = _squared_norm_jet(spec, x, y, 1, 5)
    yf = [float(v) for v in y]

    # Hessian-entry jets (valid to y-degree 3) and their truncated inverse.
    gjets = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            gjets[i, j] = gjets[j, i] = (
                0.5 * f2.formal_partial(ypos + i).formal_partial(ypos + j)
            )
    ginv = jet_matrix_inverse(gjets, alg)

    # Covariant spray jets (valid to y-degree 4).
    yjets = [alg.variable(ypos + k, yf[k]) for k in range(n)]
    G_cov = []
    for l in range(n):
        acc = None
        for k in range(n):
            dH = f2.formal_partial(k).formal_partial(ypos + l)
            term = yjets[k] * dH
            acc = term if acc is None else acc + term
        G_cov.append(0.25 * (acc - f2.formal_partial(l)))

    B = np.zeros((n, n, n, n))
    for i in range(n):
        Gi = None
        for l in range(n):
            term = ginv[i, l] * G_cov[l]
            Gi = term if Gi is None else Gi + term
        for p in range(n):
            for q in range(p, n):
                for r in range(q, n):
                    e = [0] * (2 * n)
                    e[ypos + p] += 1
                    e[ypos + q] += 1
                    e[ypos + r] += 1
                    v = Gi.partial(e)
                    for t in {(p, q, r), (p, r, q), (q, p, r), (q, r, p), (r, p, q), (r, q, p)}:
                        B[(i,) + t] = v

    g0 = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            g0[i, j] = gjets[i, j].value
    gy = g0 @ np.asarray(yf)
    lam = np.einsum("i,ipqr->pqr", gy, B)
    return CurvatureTensors(
        berwald=B,
        landsberg=lam,
        max_berwald=float(np.max(np.abs(B))),
        max_landsberg=float(np.max(np.abs(lam))),
        method="jet",
    )


def _berwald_fd(spec: MetricSpec, model, x, y, step: float = 1e-3,
                richardson_levels: int = 1) -> CurvatureTensors:
    spec = bind_metric(spec, model)
    n = spec.dimension
    xf = [float(v) for v in x]
    yf = [float(v) for v in y]

    B = np.zeros((n, n, n, n))
    for i in range(n):
        def gi(xx, yy, _i=i):
            return float(spray(spec, None, xx, yy).G_contra[_i])

        for p in range(n):
            for q in range(p, n):
                for r in range(q, n):
                    orders = [0] * n
                    for idx in (p, q, r):
                        orders[idx] += 1
                    v, _ = fd_partial(
                        gi, xf, yf, MultiOrder((0,) * n, tuple(orders)),
                        step=step, richardson_levels=richardson_levels,
                    )
                    for t in {(p, q, r), (p, r, q), (q, p, r), (q, r, p), (r, p, q), (r, q, p)}:
                        B[(i,) + t] = v

    ft = fundamental_tensor(spec, xf, yf)
    gy = ft.g @ np.asarray(yf)
    lam = np.einsum("i,ipqr->pqr", gy, B)
    return CurvatureTensors(
        berwald=B,
        landsberg=lam,
        max_berwald=float(np.max(np.abs(B))),
        max_landsberg=float(np.max(np.abs(lam))),
        method="fd",
    )


# ---------------------------------------------------------------------------
# Busemann-Hausdorff density, distortion, S-curvature


@dataclass
class VolumeDistortion:
    sigma: float
    tau: float | None
    omega_n: float
    quadrature_nodes: int
    rel_change: float
    converged: bool


def default_nodes(n: int) -> int:
    return 1024 if n == 2 else 8192


def _sphere_rule(n: int, nodes: int):
    """Quadrature nodes and weights on the unit sphere with given total count."""
    if n == 2:
        theta = 2.0 * math.pi * np.arange(nodes) / nodes
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
        wts = np.full(nodes, 2.0 * math.pi / nodes)
        return pts, wts
    if n == 3:
        n_mu = max(8, int(round(math.sqrt(nodes / 2.0))))
        n_phi = 2 * n_mu
        mu, wmu = roots_legendre(n_mu)
        phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
        MU, PHI = np.meshgrid(mu, phi, indexing="ij")
        W = np.outer(wmu, np.full(n_phi, 2.0 * math.pi / n_phi))
        rho = np.sqrt(1.0 - MU**2)
        pts = np.column_stack(
            [(rho * np.cos(PHI)).ravel(), (rho * np.sin(PHI)).ravel(), MU.ravel()]
        )
        return pts, W.ravel()
    raise ValueError("sphere quadrature implemented for n in {2, 3}")


def _unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _ball_volume(spec: MetricSpec, x, nodes: int) -> float:
    """Euclidean volume of {y : F(x, y) < 1} by radial integration."""
    n = spec.dimension
    pts, wts = _sphere_rule(n, nodes)
    xf = [float(v) for v in x]
    f2 = np.asarray(spec.squared_norm(xf, [pts[:, i] for i in range(n)]), dtype=float)
    if np.any(~np.isfinite(f2)) or np.any(f2 <= 0.0):
        raise StrongConvexityError("norm not positive on the direction sphere")
    return float(np.sum(wts * f2 ** (-n / 2.0)) / n)


def bh_density(spec: MetricSpec, x, nodes: int | None = None) -> VolumeDistortion:
    """Busemann-Hausdorff density: unit-ball volume ratio at one point.

    Runs a self-convergence ratio test against half the node count; a failed
    test is reported, not raised.
    """
    n = spec.dimension
    if nodes is None:
        nodes = default_nodes(n)
    min_nodes = 64 if n == 2 else 1024
    if nodes < min_nodes:
        raise ValueError(f"need at least {min_nodes} nodes for n={n}")
    omega = _unit_ball_volume(n)
    vol = _ball_volume(spec, x, nodes)
    vol_half = _ball_volume(spec, x, max(min_nodes, nodes // 2))
    sigma = omega / vol
    rel = abs(vol - vol_half) / vol
    return VolumeDistortion(
        sigma=float(sigma),
        tau=None,
        omega_n=omega,
        quadrature_nodes=nodes,
        rel_change=float(rel),
        converged=bool(rel < 1e-6),
    )


def distortion(spec: MetricSpec, model, x, y, nodes: int | None = None) -> VolumeDistortion:
    """Distortion: log of sqrt(det g) over the Busemann-Hausdorff density."""
    spec = bind_metric(spec, model)
    vd = bh_density(spec, x, nodes)
    ft = fundamental_tensor(spec, x, y)
    vd.tau = float(0.5 * math.log(ft.det_g) - math.log(vd.sigma))
    return vd


def sigma_gradient(spec: MetricSpec, model, x, nodes: int | None = None,
                   fd_step: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of the density, sharing one node set."""
    spec = bind_metric(spec, model)
    n = spec.dimension
    if nodes is None:
        nodes = default_nodes(n)
    omega = _unit_ball_volume(n)
    xf = np.asarray(x, dtype=float)
    grad = np.empty(n)
    for k in range(n):
        xp = xf.copy()
        xm = xf.copy()
        xp[k] += fd_step
        xm[k] -= fd_step
        sp = omega / _ball_volume(spec, xp, nodes)
        sm = omega / _ball_volume(spec, xm, nodes)
        grad[k] = (sp - sm) / (2.0 * fd_step)
    return grad


def s_curvature_direct(spec: MetricSpec, model, x, y, fd_step: float = 1e-4,
                       nodes: int | None = None) -> float:
    """S-curvature as the spray derivative of the distortion.

    The log-determinant part and the fiber derivatives are exact jets; the
    density part has no derivative route and uses a directional central
    difference with a node set shared across the stencil.
    """
    spec = bind_metric(spec, model)
    n = spec.dimension
    if nodes is None:
        nodes = default_nodes(n)
    xf = np.asarray(x, dtype=float)
    yf = np.asarray(y, dtype=float)

    # y^k d_{x^k} of half log det g, from one mixed jet pass
    alg, f2, ypos = _squared_norm_jet(spec, xf, yf, 1, 2)
    g = np.empty((n, n))
    dg_dir = np.zeros((n, n))  # y^k d_{x^k} g_ij
    for i in range(n):
        for j in range(i, n):
            e = [0] * (2 * n)
            e[ypos + i] += 1
            e[ypos + j] += 1
            g[i, j] = g[j, i] = 0.5 * f2.partial(e)
            acc = 0.0
            for k in range(n):
                ek = list(e)
                ek[k] += 1
                acc += yf[k] * 0.5 * f2.partial(ek)
            dg_dir[i, j] = dg_dir[j, i] = acc
    ginv = np.linalg.inv(g)
    logdet_rate = 0.5 * float(np.trace(ginv @ dg_dir))

    # y^k d_{x^k} of log sigma: directional FD along y with a common rule
    omega = _unit_ball_volume(n)
    s_plus = omega / _ball_volume(spec, xf + fd_step * yf, nodes)
    s_minus = omega / _ball_volume(spec, xf - fd_step * yf, nodes)
    s_mid = omega / _ball_volume(spec, xf, nodes)
    sigma_rate = (s_plus - s_minus) / (2.0 * fd_step * s_mid)

    cd = cartan_tensor(spec, xf, yf)
    sp = spray(spec, None, xf, yf)
    return float(logdet_rate - sigma_rate - 2.0 * float(sp.G_contra @ cd.I_cov))


@dataclass
class SCurvatureTerms:
    """Closed-form S-curvature pieces at an aligned direction (a, 0, ..., 0, a')."""

    prefactor: float       # multiplies -(a L1 A1 + a' L2 A2) in the S value
    logdet_rate: float     # directional log-density rate per unit (a A1 + a' A2)
    b1n_dx1: float
    b1n_dxn: float
    value: float
    partials: GeneratorDerivatives

    @property
    def block_determinant(self) -> float:
        d = self.partials
        return d.L1 * d.L2 - 2.0 * d.L * d.L12


def s_curvature_formula(spec: Alpha1Alpha2Spec, report, a: float, ap: float) -> SCurvatureTerms:
    """Assemble the aligned closed-form S-curvature from the chart report.

    Requires a unit direction with nonzero components in both blocks of the
    chart; raises :class:`DegenerateHessianError` when the aligned Hessian
    block determinant is not positive.
    """
    if abs(a * a + ap * ap - 1.0) > 1e-9:
        raise ValueError("direction components must satisfy a^2 + a'^2 = 1")
    if a == 0.0 or ap == 0.0:
        raise ValueError("direction must have nonzero components in both blocks")
    if not isinstance(spec, Alpha1Alpha2Spec):
        raise TypeError("closed-form S-curvature needs a split-quadratic spec")
    n1, n2 = report.split
    d = spec.generator.partials(a * a, ap * ap)
    D = d.L1 * d.L2 - 2.0 * d.L * d.L12
    if D <= 0.0:
        raise DegenerateHessianError(
            f"aligned Hessian block determinant {D:.3e} is not positive"
        )
    psi = (
        (-d.L * d.L12 - 2.0 * a * a * d.L * d.L112) / (a * ap * D)
        + (n1 - 1) * a * d.L11 / (ap * d.L1)
        + (n2 - 1) * a * d.L12 / (ap * d.L2)
    )
    phi = d.L / D * psi
    A1 = report.b1n_dx1
    A2 = report.b1n_dxn
    value = -phi * (a * d.L1 * A1 + ap * d.L2 * A2)
    return SCurvatureTerms(
        prefactor=phi,
        logdet_rate=psi,
        b1n_dx1=A1,
        b1n_dxn=A2,
        value=float(value),
        partials=d,
    )


def s_vanishing_chart_identities(report, tol: float = 1e-9) -> tuple[bool, float]:
    """Antisymmetry pattern of cross projector derivatives at a chart center.

    Checks ``db[i, j, k] + db[j, i, k] = 0`` for ``i <= j <= n1 < k`` and for
    ``k <= n1 < i <= j``; this pattern holds at every point exactly when the
    associated split-quadratic metrics have identically vanishing S-curvature.
    """
    n1, n2 = report.split
    n = n1 + n2
    db = report.db
    worst = 0.0
    for k in range(n1, n):
        for i in range(n1):
            for j in range(i, n1):
                worst = max(worst, abs(db[i, j, k] + db[j, i, k]))
    for k in range(n1):
        for i in range(n1, n):
            for j in range(i, n):
                worst = max(worst, abs(db[i, j, k] + db[j, i, k]))
    return bool(worst < tol), float(worst)


# ---------------------------------------------------------------------------
# Closed forms at aligned directions (cross-check targets for the generic path)


def aligned_closed_forms(gen, n1: int, n2: int, a: float, ap: float,
                         A1: float = 0.0, A2: float = 0.0) -> dict:
    """Closed-form curvature data at direction (a, 0, ..., 0, a') in an
    adapted chart with unit metric, for a split-quadratic norm.

    Returns the fundamental tensor and its inverse, the nonzero Cartan
    entries, the mean Cartan covector and vector (the raised last component
    in two denominator variants, see ``i_contra_last_alt``), and the first
    and last covariant spray coefficients.
    """
    n = n1 + n2
    d = gen.partials(a * a, ap * ap)
    D = d.L1 * d.L2 - 2.0 * d.L * d.L12

    g = np.zeros((n, n))
    for i in range(n1):
        g[i, i] = d.L1
    for i in range(n1, n):
        g[i, i] = d.L2
    g[0, 0] = d.L1 + 2.0 * a * a * d.L11
    g[n - 1, n - 1] = d.L2 + 2.0 * ap * ap * d.L22
    g[0, n - 1] = g[n - 1, 0] = 2.0 * a * ap * d.L12

    ginv = np.zeros((n, n))
    for i in range(1, n1):
        ginv[i, i] = 1.0 / d.L1
    for i in range(n1, n - 1):
        ginv[i, i] = 1.0 / d.L2
    ginv[0, 0] = (d.L2 + 2.0 * ap * ap * d.L22) / D
    ginv[n - 1, n - 1] = (d.L1 + 2.0 * a * a * d.L11) / D
    ginv[0, n - 1] = ginv[n - 1, 0] = -2.0 * a * ap * d.L12 / D

    def sym_assign(C, i, j, k, v):
        for t in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
            C[t] = v

    C = np.zeros((n, n, n))
    sym_assign(C, 0, 0, 0, 3.0 * a * d.L11 + 2.0 * a**3 * d.L111)
    sym_assign(C, n - 1, n - 1, 0, a * d.L12 + 2.0 * a * ap * ap * d.L122)
    sym_assign(C, n - 1, 0, 0, ap * d.L12 + 2.0 * a * a * ap * d.L112)
    sym_assign(C, n - 1, n - 1, n - 1, 3.0 * ap * d.L22 + 2.0 * ap**3 * d.L222)
    for i in range(1, n1):
        sym_assign(C, i, i, 0, a * d.L11)
        sym_assign(C, i, i, n - 1, ap * d.L12)
    for i in range(n1, n - 1):
        sym_assign(C, i, i, 0, a * d.L12)
        sym_assign(C, i, i, n - 1, ap * d.L22)

    I_cov = np.zeros(n)
    I_cov[0] = (
        (-d.L * d.L12 - 2.0 * a * a * d.L * d.L112) / (a * D)
        + (n1 - 1) * a * d.L11 / d.L1
        + (n2 - 1) * a * d.L12 / d.L2
    )
    I_cov[n - 1] = (
        (-d.L * d.L12 - 2.0 * ap * ap * d.L * d.L122) / (ap * D)
        + (n1 - 1) * ap * d.L12 / d.L1
        + (n2 - 1) * ap * d.L22 / d.L2
    )

    I_contra = np.zeros(n)
    I_contra[0] = I_cov[0] * d.L2 / D
    I_contra[n - 1] = I_cov[n - 1] * d.L1 / D
    alt_denom = d.L1 * d.L2 - d.L * d.L12
    i_contra_last_alt = I_cov[n - 1] * d.L1 / alt_denom if alt_denom != 0.0 else math.inf

    G_cov_first = a * ap * d.L12 * A1 + 0.5 * ap * ap * (d.L2 - d.L1 + 2.0 * d.L12) * A2
    G_cov_last = 0.5 * a * a * (d.L2 - d.L1 - 2.0 * d.L12) * A1 - a * ap * d.L12 * A2

    return {
        "g": g,
        "g_inv": ginv,
        "det_block": D,
        "det_full": D * d.L1 ** (n1 - 1) * d.L2 ** (n2 - 1),
        "C": C,
        "I_cov": I_cov,
        "I_contra": I_contra,
        "i_contra_last_alt": float(i_contra_last_alt),
        "G_cov_first": float(G_cov_first),
        "G_cov_last": float(G_cov_last),
        "partials": d,
    }


# ---------------------------------------------------------------------------
# Batch evaluation


QUANTITY_NAMES = ("g", "C", "I", "G", "berwald", "landsberg", "sigma", "tau", "S")


def batch_rows(spec: MetricSpec, model, plan, quantities,
               nodes: int | None = None) -> list[dict]:
    """Evaluate requested quantities over a sample plan as flat records.

    Tensor quantities report their max absolute entry per sample; scalar
    quantities report their value.  Rows carry the method used and an error
    estimate where one exists (quadrature self-convergence for the density).
    """
    spec0 = bind_metric(spec, model)
    for q in quantities:
        if q not in QUANTITY_NAMES:
            raise ValueError(f"unknown quantity {q!r}; expected one of {QUANTITY_NAMES}")
    rows = []
    for x, y in plan.pairs(spec0.dimension):
        for q in quantities:
            method = "jet"
            err = 0.0
            if q == "g":
                val = float(np.max(np.abs(fundamental_tensor(spec0, x, y).g)))
            elif q == "C":
                val = float(np.max(np.abs(cartan_tensor(spec0, x, y).C)))
            elif q == "I":
                val = float(np.max(np.abs(cartan_tensor(spec0, x, y).I_cov)))
            elif q == "G":
                val = float(np.max(np.abs(spray(spec0, None, x, y).G_contra)))
            elif q == "berwald":
                val = berwald_landsberg_tensors(spec0, None, x, y).max_berwald
            elif q == "landsberg":
                val = berwald_landsberg_tensors(spec0, None, x, y).max_landsberg
            elif q == "sigma":
                vd = bh_density(spec0, x, nodes)
                val, err, method = vd.sigma, vd.rel_change, "quadrature"
            elif q == "tau":
                vd = distortion(spec0, None, x, y, nodes)
                val, err, method = vd.tau, vd.rel_change, "jet+quadrature"
            else:
                val = s_curvature_direct(spec0, None, x, y, nodes=nodes)
                method = "jet+fd-quadrature"
            rows.append(
                {
                    "x": [float(v) for v in x],
                    "y": [float(v) for v in y],
                    "quantity": q,
                    "value": float(val),
                    "method": method,
                    "error_estimate": float(err),
                }
            )
    return rows
