"""Fiber-field operator, residual tables, source fields and isometry action."""

import math

import numpy as np
import pytest

from finslerkit.curvature import berwald_landsberg_tensors, fundamental_tensor, spray
from finslerkit.landsberg import (
    FiberField,
    IsometryError,
    LinearMap,
    block_rotation,
    invariance_check,
    isometry_action,
    landsberg_residual,
    reflection_part,
    spray_operator,
    spray_source_field,
    verify_isometry,
)
from finslerkit.manifolds import flat_product, hopf_sphere, normal_chart, polar_plane
from finslerkit.metrics import euclidean_spec, metric_from_model
from finslerkit.sampling import sphere_sequence


@pytest.fixture(scope="module")
def flat_norm3():
    return metric_from_model("cross02", flat_product(2, 1)).frozen_at([0.0] * 3)


def quad_field(n):
    comps = [lambda y: y[0] * y[0]] + [lambda y: 0.0] * (n - 1)
    return FiberField(comps, n, name="first-square")


def test_zero_field_maps_to_zero():
    assert np.all(spray_operator(euclidean_spec(3), FiberField.zero(3), [1, 2, 3]) == 0.0)


def test_euclidean_first_square_field():
    f = quad_field(3)
    y = [0.7, -0.3, 0.4]
    out = spray_operator(euclidean_spec(3), f, y)
    assert out[0] == pytest.approx(y[0] ** 2 / 4.0, rel=1e-14)
    assert abs(out[1]) < 1e-15 and abs(out[2]) < 1e-15
    # quadratic operator values have vanishing third derivatives
    assert landsberg_residual(euclidean_spec(3), f, y).max_abs < 1e-14


def test_operator_linearity(flat_norm3):
    f = quad_field(3)
    h = FiberField(
        [lambda y: y[1] * y[2], lambda y: y[0] * y[0] - y[2] * y[2],
         lambda y: y[0] * y[1]],
        3, name="h",
    )
    worst = 0.0
    for y in sphere_sequence(3, 20):
        lhs = spray_operator(flat_norm3, f.combine(h, 2.0, 3.0), list(y))
        rhs = 2.0 * spray_operator(flat_norm3, f, list(y)) \
            + 3.0 * spray_operator(flat_norm3, h, list(y))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    assert worst < 1e-10


def test_homogeneity_certificate_rejects_bad_field():
    with pytest.raises(ValueError, match="2-homogeneous"):
        FiberField([lambda y: y[0] ** 3, lambda y: 0.0], 2)


def test_source_field_polar_closed_form():
    rep = normal_chart(polar_plane(), [1.0, 0.0])
    spec = metric_from_model("cross02", rep.chart_model)
    src = spray_source_field(spec, None, [0.0, 0.0])
    gen = spec.generator
    for y in ([0.6, 0.8], [0.3, -0.5], [1.1, 0.4]):
        d = gen.partials(y[0] ** 2, y[1] ** 2)
        expected = 2.0 * rep.b1n_dx1 * y[0] * y[1] * (d.L2 - d.L1)
        vals = src(y)
        assert vals[0] == pytest.approx(expected, rel=1e-12, abs=1e-15)
        assert abs(vals[1]) < 1e-15


def test_source_field_flat_is_zero():
    spec = metric_from_model("cross02", flat_product(1, 1))
    src = spray_source_field(spec, None, [0.2, 0.3])
    for y in sphere_sequence(2, 8):
        assert np.max(np.abs(src(list(y)))) < 1e-15


def test_source_field_hopf_structure():
    rep = normal_chart(hopf_sphere(), [0.0, 0.0, 0.0])
    spec = metric_from_model("cross02", rep.chart_model)
    src = spray_source_field(spec, None, [0.0] * 3)
    y = [0.4, 0.5, 0.7]
    vals = src(y)
    assert abs(vals[2]) < 1e-15  # last component always vanishes
    assert abs(vals[0]) > 1e-4 and abs(vals[1]) > 1e-4


def test_source_field_matches_x_derivative_jets():
    """Assembled components equal jet x-derivatives of the squared norm."""
    from finslerkit.jets import MultiOrder, taylor_eval

    rep = normal_chart(hopf_sphere(), [0.05, -0.1, 0.2])
    spec = metric_from_model("cross02", rep.chart_model)
    src = spray_source_field(spec, None, [0.0] * 3)
    rng = np.random.default_rng(11)
    f2 = spec.squared_norm
    for _ in range(50):
        y = rng.normal(size=3)
        if np.linalg.norm(y) < 0.3:
            continue
        vals = src(list(y))
        orders = [MultiOrder(tuple(1 if i == l else 0 for i in range(3)), (0, 0, 0))
                  for l in range(3)]
        table = taylor_eval(lambda xx, yy, _y=list(y): f2(xx, _y), [0.0] * 3,
                            list(y), orders)
        direct = np.array([table[o] for o in orders])
        assert np.max(np.abs(vals - direct)) < 1e-9 * max(1.0, np.max(np.abs(direct)))


def test_source_field_operator_is_spray():
    rep = normal_chart(polar_plane(), [1.0, 0.0])
    spec = metric_from_model("cross02", rep.chart_model)
    src = spray_source_field(spec, None, [0.0, 0.0])
    frozen = spec.frozen_at([0.0, 0.0])
    for y in sphere_sequence(2, 6):
        sp = spray(spec, None, [0.0, 0.0], list(y)).G_contra
        op = spray_operator(frozen, src, list(y))
        assert np.max(np.abs(sp - op)) < 1e-12


def test_residual_matches_landsberg_tensor():
    rep = normal_chart(polar_plane(), [1.0, 0.0])
    spec = metric_from_model("cross02", rep.chart_model)
    src = spray_source_field(spec, None, [0.0, 0.0])
    frozen = spec.frozen_at([0.0, 0.0])
    y = [0.6, 0.8]
    res = landsberg_residual(frozen, src, y)
    ct = berwald_landsberg_tensors(spec, None, [0.0, 0.0], y)
    assert np.max(np.abs(res.values - ct.landsberg)) < 1e-12
    assert res.max_abs > 1e-6


def test_identity_action_is_identity(flat_norm3):
    f = quad_field(3)
    ident = LinearMap.from_matrix(np.eye(3))
    xf = isometry_action(ident, f)
    for y in sphere_sequence(3, 8):
        assert np.max(np.abs(xf(list(y)) - f(list(y)))) < 1e-15


def test_action_composition(flat_norm3):
    f = quad_field(3)
    m1 = block_rotation(2, 1, angle1=0.4)
    m2 = block_rotation(2, 1, angle1=-1.1)
    comp = LinearMap.from_matrix(m1.xi @ m2.xi)
    lhs = isometry_action(comp, f)
    rhs = isometry_action(m2, isometry_action(m1, f))
    for y in sphere_sequence(3, 10):
        assert np.max(np.abs(lhs(list(y)) - rhs(list(y)))) < 1e-12


def test_middle_flip_parity_combinator():
    """Averaging with the middle-sign-flip action kills middle components on
    the fixed plane of the flip."""
    rep = normal_chart(hopf_sphere(), [0.0, 0.0, 0.0])
    spec = metric_from_model("cross02", rep.chart_model)
    src = spray_source_field(spec, None, [0.0] * 3)
    flip = LinearMap.from_matrix(np.diag([1.0, -1.0, 1.0]))
    even = reflection_part(src, flip, +1.0)
    for y1, yn in [(0.6, 0.8), (0.9, -0.3)]:
        vals = even([y1, 0.0, yn])
        assert abs(vals[1]) < 1e-15


def test_isometry_verification_and_rejection(flat_norm3):
    verify_isometry(flat_norm3, block_rotation(2, 1, angle1=1.0))
    with pytest.raises(IsometryError):
        verify_isometry(flat_norm3, LinearMap.from_matrix(np.diag([2.0, 1.0, 1.0])))


def test_kernel_identity_block_rotations(flat_norm3):
    f = FiberField(
        [lambda y: y[1] * y[2], lambda y: y[0] * y[2], lambda y: y[0] * y[1]],
        3, name="sym",
    )
    for angle in (0.3, 1.2, 2.5):
        rot = block_rotation(2, 1, angle1=angle)
        rep = invariance_check(flat_norm3, rot, f,
                               [list(y) for y in sphere_sequence(3, 8)])
        assert rep.kernel_identity_max < 1e-9


def test_invariance_preserves_solution_smallness():
    """For the Euclidean norm, quadratic fields solve the equation; rotated
    copies must too."""
    eu = euclidean_spec(2)
    f = FiberField([lambda y: y[0] * y[0] - y[1] * y[1], lambda y: y[0] * y[1]], 2)
    theta = 0.77
    rot = LinearMap.from_matrix(
        np.array([[math.cos(theta), -math.sin(theta)],
                  [math.sin(theta), math.cos(theta)]])
    )
    rep = invariance_check(eu, rot, f, [list(y) for y in sphere_sequence(2, 10)])
    assert rep.residual_f < 1e-12
    assert rep.residual_xi_f < 1e-9


def test_hessian_equivariance(flat_norm3):
    rot = block_rotation(2, 1, angle1=0.9)
    for y in sphere_sequence(3, 10):
        gy = fundamental_tensor(flat_norm3, [0.0] * 3, list(y)).g
        gxy = fundamental_tensor(flat_norm3, [0.0] * 3, rot.apply(list(y))).g
        assert np.max(np.abs(gxy - rot.eta.T @ gy @ rot.eta)) < 1e-9
