"""Curvature pipeline: tensors, spray, density, distortion, S-curvature."""

import math

import numpy as np
import pytest

from finslerkit.curvature import (
    DegenerateHessianError,
    StrongConvexityError,
    aligned_closed_forms,
    batch_rows,
    berwald_landsberg_tensors,
    bh_density,
    cartan_tensor,
    distortion,
    fundamental_tensor,
    riemannian_control,
    s_curvature_direct,
    s_curvature_formula,
    s_vanishing_chart_identities,
    sigma_gradient,
    spray,
)
from finslerkit.manifolds import flat_product, hopf_sphere, normal_chart, polar_plane
from finslerkit.metrics import (
    RawNormSpec,
    euclidean_spec,
    generator,
    metric_from_model,
)
from finslerkit.sampling import SamplePlan, sphere_sequence


@pytest.fixture(scope="module")
def polar_chart():
    return normal_chart(polar_plane(), [1.0, 0.0])


@pytest.fixture(scope="module")
def hopf_chart():
    return normal_chart(hopf_sphere(), [0.0, 0.0, 0.0])


def test_euclidean_fundamental_tensor():
    ft = fundamental_tensor(euclidean_spec(3), [0, 0, 0], [0.3, -0.2, 0.9])
    assert np.max(np.abs(ft.g - np.eye(3))) < 1e-14
    assert ft.det_g == pytest.approx(1.0, rel=1e-12)


def test_split_test_generator_worked_example():
    """Frozen values for L = s + t + st at y = (0.6, 0.8) on the flat split."""
    spec = metric_from_model("s+t+s*t", flat_product(1, 1))
    ft = fundamental_tensor(spec, [0, 0], [0.6, 0.8])
    assert ft.g[0, 0] == pytest.approx(1.64, abs=1e-12)
    assert ft.g[0, 1] == pytest.approx(0.96, abs=1e-12)
    assert ft.g[1, 1] == pytest.approx(1.36, abs=1e-12)
    assert ft.det_g == pytest.approx(1.3088, abs=1e-12)
    # expanded product form of the block determinant
    d = spec.generator.partials(0.36, 0.64)
    a, ap = 0.6, 0.8
    expanded = (d.L1 + 2 * a * a * d.L11) * (d.L2 + 2 * ap * ap * d.L22) \
        - 4 * a * a * ap * ap * d.L12**2
    assert ft.det_g == pytest.approx(expanded, rel=1e-12)
    # the compact two-factor identity needs 1-homogeneity, which this test
    # generator lacks: it must NOT match here
    assert abs(ft.det_g - (d.L1 * d.L2 - 2 * d.L * d.L12)) > 1.0

    cd = cartan_tensor(spec, [0, 0], [0.6, 0.8])
    assert cd.C[1, 1, 0] == pytest.approx(0.6, abs=1e-12)


def test_block_determinant_identity_at_unit_alpha():
    """For a 1-homogeneous generator the two determinant forms agree at |y|=1."""
    spec = metric_from_model("cross02", flat_product(1, 1))
    for a, ap in [(0.6, 0.8), (0.28, 0.96), (1 / math.sqrt(2), 1 / math.sqrt(2))]:
        ft = fundamental_tensor(spec, [0, 0], [a, ap])
        d = spec.generator.partials(a * a, ap * ap)
        assert ft.det_g == pytest.approx(d.L1 * d.L2 - 2 * d.L * d.L12, rel=1e-10)


def test_deicke_direction_riemannian_mean_cartan_vanishes():
    rng = np.random.default_rng(7)
    mat = np.array([[2.0, 0.3], [0.3, 1.5]])
    from finslerkit.metrics import RiemannianSpec, constant_field

    spec = RiemannianSpec(constant_field(mat), 2)
    for _ in range(50):
        y = rng.normal(size=2)
        if np.linalg.norm(y) < 0.1:
            continue
        cd = cartan_tensor(spec, [0, 0], list(y))
        assert cd.max_mean_cartan() < 1e-10
        assert np.max(np.abs(cd.C)) < 1e-10


def test_mean_cartan_trace_identity():
    """I_k equals g^{ij} C_ijk: log-det route vs trace route."""
    spec = metric_from_model("cross02", flat_product(2, 1))
    for y in sphere_sequence(3, 10):
        ft = fundamental_tensor(spec, [0, 0, 0], list(y))
        cd = cartan_tensor(spec, [0, 0, 0], list(y))
        trace = np.einsum("ij,ijk->k", ft.g_inv, cd.C)
        assert np.max(np.abs(trace - cd.I_cov)) < 1e-10


def test_cartan_homogeneity_contractions():
    spec = metric_from_model("cross02", flat_product(1, 1))
    y = [0.6, 0.8]
    cd = cartan_tensor(spec, [0, 0], y)
    assert np.max(np.abs(np.einsum("ijk,k->ij", cd.C, y))) < 1e-12
    assert abs(float(np.asarray(y) @ cd.I_cov)) < 1e-12


def test_closed_forms_match_generic_on_polar(polar_chart):
    spec = metric_from_model("cross02", polar_chart.chart_model)
    a, ap = 0.6, 0.8
    cf = aligned_closed_forms(spec.generator, 1, 1, a, ap,
                              polar_chart.b1n_dx1, polar_chart.b1n_dxn)
    ft = fundamental_tensor(spec, [0, 0], [a, ap])
    cd = cartan_tensor(spec, [0, 0], [a, ap])
    sp = spray(spec, None, [0, 0], [a, ap])
    assert np.max(np.abs(ft.g - cf["g"])) < 1e-12
    assert np.max(np.abs(ft.g_inv - cf["g_inv"])) < 1e-12
    assert np.max(np.abs(cd.C - cf["C"])) < 1e-12
    assert np.max(np.abs(cd.I_cov - cf["I_cov"])) < 1e-12
    assert np.max(np.abs(cd.I_contra - cf["I_contra"])) < 1e-12
    assert sp.G_cov[0] == pytest.approx(cf["G_cov_first"], abs=1e-12)
    assert sp.G_cov[-1] == pytest.approx(cf["G_cov_last"], abs=1e-12)


def test_spray_vanishes_for_position_independent_norms():
    spec = metric_from_model("cross02", flat_product(1, 1))
    sp = spray(spec, None, [0.3, 0.7], [0.6, 0.8])
    assert np.max(np.abs(sp.G_contra)) < 1e-14


def test_polar_spray_closed_form(polar_chart):
    """First covariant spray coefficient reduces to the cross-rate term."""
    spec = metric_from_model("cross02", polar_chart.chart_model)
    a, ap = 0.6, 0.8
    d = spec.generator.partials(a * a, ap * ap)
    sp = spray(spec, None, [0.0, 0.0], [a, ap])
    assert polar_chart.b1n_dxn == pytest.approx(0.0, abs=1e-12)
    expect = a * ap * d.L12 * polar_chart.b1n_dx1
    assert sp.G_cov[0] == pytest.approx(expect, rel=1e-10)


def test_hopf_aligned_spray_vanishes(hopf_chart):
    """Both aligned covariant spray components vanish at the chart center."""
    spec = metric_from_model("cross02", hopf_chart.chart_model)
    sp = spray(spec, None, [0.0] * 3, [0.6, 0.0, 0.8])
    assert abs(sp.G_cov[0]) < 1e-12
    assert abs(sp.G_cov[2]) < 1e-12
    # the middle component is driven by the frame tilt and need not vanish
    assert abs(sp.G_cov[1]) > 1e-3


def test_spray_homogeneity():
    spec = metric_from_model("cross02", polar_plane())
    x, y = [1.0, 0.2], [0.6, 0.8]
    base = spray(spec, None, x, y).G_contra
    for lam in (0.5, 2.0):
        scaled = spray(spec, None, x, [lam * v for v in y]).G_contra
        assert np.max(np.abs(scaled - lam * lam * base)) < 1e-9 * max(
            1.0, float(np.max(np.abs(base)))
        )


def test_berwald_flat_and_riemannian_vanish():
    flat = metric_from_model("cross02", flat_product(1, 1))
    ct = berwald_landsberg_tensors(flat, None, [0.1, 0.2], [0.6, 0.8])
    assert ct.max_berwald == 0.0 and ct.max_landsberg == 0.0
    riem = riemannian_control(polar_plane())
    ct2 = berwald_landsberg_tensors(riem, None, [1.0, 0.0], [0.6, 0.8])
    assert ct2.max_berwald < 1e-12 and ct2.max_landsberg < 1e-12


def test_berwald_jet_vs_fd_oracle():
    spec = metric_from_model("cross02", polar_plane())
    jet = berwald_landsberg_tensors(spec, None, [1.0, 0.0], [0.6, 0.8], method="jet")
    fd = berwald_landsberg_tensors(spec, None, [1.0, 0.0], [0.6, 0.8], method="fd")
    assert jet.max_landsberg > 1e-6  # non-Landsberg witness
    assert np.max(np.abs(jet.berwald - fd.berwald)) < 1e-5
    assert np.max(np.abs(jet.landsberg - fd.landsberg)) < 1e-5


def test_landsberg_tensor_symmetry():
    spec = metric_from_model("cross02", hopf_sphere())
    ct = berwald_landsberg_tensors(spec, None, [0.1, 0.0, 0.05], [0.5, 0.3, 0.8])
    lam = ct.landsberg
    for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
        assert np.max(np.abs(lam - np.transpose(lam, perm))) < 1e-9


def test_berwald_implies_landsberg_scaling():
    """Wherever the full third-derivative tensor is tiny, so is its contraction."""
    tol = 1e-9
    for model, gen in [
        (flat_product(1, 1), "cross02"),
        (flat_product(2, 1), "cross02"),
        (polar_plane(), "linear"),
    ]:
        spec = metric_from_model(gen, model)
        n = model.dimension
        for p in model.default_points(2):
            for y in sphere_sequence(n, 8):
                ct = berwald_landsberg_tensors(spec, None, list(p), list(y))
                if ct.max_berwald < tol:
                    assert ct.max_landsberg < n * n * tol


def test_bh_density_euclidean_and_scaled():
    vd = bh_density(euclidean_spec(2), [0, 0], 1024)
    assert vd.sigma == pytest.approx(1.0, abs=1e-8)
    assert vd.converged
    doubled = RawNormSpec(lambda x, y: 2.0 * (y[0] ** 2 + y[1] ** 2) ** 0.5, 2)
    assert bh_density(doubled, [0, 0], 1024).sigma == pytest.approx(4.0, abs=1e-8)


def test_bh_density_self_convergence():
    spec = metric_from_model("cross02", flat_product(1, 1))
    s512 = bh_density(spec, [0, 0], 512).sigma
    s1024 = bh_density(spec, [0, 0], 1024).sigma
    assert abs(s512 - s1024) / abs(s1024) < 1e-8


def test_bh_density_sphere_grid():
    vd = bh_density(euclidean_spec(3), [0, 0, 0], 8192)
    assert vd.sigma == pytest.approx(1.0, abs=1e-10)


def test_distortion_riemannian_zero():
    from finslerkit.metrics import RiemannianSpec, constant_field

    mat = np.array([[2.0, 0.4], [0.4, 1.2]])
    spec = RiemannianSpec(constant_field(mat), 2)
    vd = distortion(spec, None, [0, 0], [0.3, 0.9], 1024)
    assert abs(vd.tau) < 1e-10


def test_tau_zero_homogeneous():
    spec = metric_from_model("cross02", polar_plane())
    t1 = distortion(spec, None, [1.0, 0.0], [0.6, 0.8], 1024).tau
    t2 = distortion(spec, None, [1.0, 0.0], [1.2, 1.6], 1024).tau
    assert t1 == pytest.approx(t2, abs=1e-9)


def test_s_curvature_riemannian_noise_floor():
    ctrl = riemannian_control(polar_plane())
    for y in sphere_sequence(2, 6):
        assert abs(s_curvature_direct(ctrl, None, [1.0, 0.3], list(y))) < 2e-5


def test_s_curvature_dual_path_polar(polar_chart):
    spec = metric_from_model("cross02", polar_chart.chart_model)
    s_dir = s_curvature_direct(spec, None, [0.0, 0.0], [0.6, 0.8])
    terms = s_curvature_formula(spec, polar_chart, 0.6, 0.8)
    assert terms.value != 0.0
    assert abs(s_dir - terms.value) / abs(terms.value) < 1e-4
    # exposed factorization of the prefactor
    assert terms.prefactor == pytest.approx(
        terms.partials.L / terms.block_determinant * terms.logdet_rate, rel=1e-12
    )


def test_s_curvature_hopf_vanishes(hopf_chart):
    spec = metric_from_model("cross02", hopf_chart.chart_model)
    s = s_curvature_direct(spec, None, [0.0] * 3, [0.6, 0.0, 0.8])
    assert abs(s) < 2e-5
    terms = s_curvature_formula(spec, hopf_chart, 0.6, 0.8)
    assert abs(terms.value) < 1e-12


def test_s_formula_linear_generator_prefactor_zero(polar_chart):
    spec = metric_from_model("linear", polar_chart.chart_model)
    terms = s_curvature_formula(spec, polar_chart, 0.6, 0.8)
    assert terms.prefactor == pytest.approx(0.0, abs=1e-12)
    assert terms.value == 0.0


def test_s_formula_rejects_degenerate_direction(polar_chart):
    spec = metric_from_model("cross02", polar_chart.chart_model)
    with pytest.raises(ValueError):
        s_curvature_formula(spec, polar_chart, 1.0, 0.0)
    with pytest.raises(ValueError):
        s_curvature_formula(spec, polar_chart, 0.5, 0.5)


def test_s_vanishing_identities_patterns(polar_chart, hopf_chart):
    ok_flat, v_flat = s_vanishing_chart_identities(
        normal_chart(flat_product(1, 1), [0.0, 0.0])
    )
    assert ok_flat and v_flat == 0.0
    ok_hopf, v_hopf = s_vanishing_chart_identities(hopf_chart)
    assert ok_hopf and v_hopf < 1e-12
    ok_polar, v_polar = s_vanishing_chart_identities(polar_chart)
    assert not ok_polar
    assert v_polar == pytest.approx(2.0 * abs(polar_chart.b1n_dx1), rel=1e-12)


def test_sigma_critical_at_chart_center(polar_chart):
    spec = metric_from_model("cross02", polar_chart.chart_model)
    grad = sigma_gradient(spec, None, [0.0, 0.0])
    assert np.linalg.norm(grad) < 5e-6


def test_strong_convexity_error():
    quart = RawNormSpec(lambda x, y: (y[0] ** 4 + y[1] ** 4) ** 0.25, 2)
    with pytest.raises(StrongConvexityError):
        fundamental_tensor(quart, [0, 0], [1.0, 0.0])


def test_batch_rows_shape():
    spec = metric_from_model("cross02", flat_product(1, 1))
    plan = SamplePlan(points=[[0.0, 0.0]], directions_per_point=2)
    rows = batch_rows(spec, flat_product(1, 1), plan, ["G", "sigma"])
    assert len(rows) == 4
    for r in rows:
        assert set(r) == {"x", "y", "quantity", "value", "method", "error_estimate"}
    g_rows = [r for r in rows if r["quantity"] == "G"]
    assert all(r["value"] == 0.0 for r in g_rows)
    with pytest.raises(ValueError, match="unknown quantity"):
        batch_rows(spec, None, plan, ["nope"])
