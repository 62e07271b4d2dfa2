"""Geometry models and adapted-chart construction."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerkit.linalg import value_matrix
from finslerkit.manifolds import (
    AlignmentError,
    ManifoldModel,
    ModelError,
    check_chart_identities,
    flat_product,
    frame_span_model,
    hopf_sphere,
    normal_chart,
    polar_plane,
    product_structure_criterion,
)


def fd_christoffels(field, n, h=1e-5):
    a0 = value_matrix(np.asarray(field([0.0] * n), dtype=object))
    ainv = np.linalg.inv(a0)
    da = np.zeros((n, n, n))
    for k in range(n):
        xp, xm = [0.0] * n, [0.0] * n
        xp[k], xm[k] = h, -h
        ap = value_matrix(np.asarray(field(xp), dtype=object))
        am = value_matrix(np.asarray(field(xm), dtype=object))
        da[k] = (ap - am) / (2.0 * h)
    gamma = np.zeros((n, n, n))
    for i in range(n):
        for j in range(n):
            for k in range(n):
                gamma[i, j, k] = 0.5 * sum(
                    ainv[i, l] * (da[j, l, k] + da[k, l, j] - da[l, j, k])
                    for l in range(n)
                )
    return gamma


def fd_field_derivative(field, n, h=1e-6):
    d = np.zeros((n, n, n))
    for k in range(n):
        xp, xm = [0.0] * n, [0.0] * n
        xp[k], xm[k] = h, -h
        fp = value_matrix(np.asarray(field(xp), dtype=object))
        fm = value_matrix(np.asarray(field(xm), dtype=object))
        d[k] = (fp - fm) / (2.0 * h)
    return d


def test_flat_product_chart_trivial():
    rep = normal_chart(flat_product(1, 1), [0.2, -0.4])
    assert np.max(np.abs(rep.db)) == 0.0
    assert rep.b1n_dx1 == 0.0 and rep.b1n_dxn == 0.0
    assert product_structure_criterion(rep)
    assert check_chart_identities(rep).max_violation == 0.0


def test_polar_chart_rates():
    rep = normal_chart(polar_plane(), [1.0, 0.0])
    assert abs(rep.b1n_dx1) == pytest.approx(1.0, abs=1e-12)
    assert rep.b1n_dxn == pytest.approx(0.0, abs=1e-14)
    assert not product_structure_criterion(rep)


def test_polar_chart_rates_scale_with_radius():
    for r0 in (0.5, 2.0, 3.0):
        p = [r0 * math.cos(0.9), r0 * math.sin(0.9)]
        rep = normal_chart(polar_plane(), p)
        assert abs(rep.b1n_dx1) == pytest.approx(1.0 / r0, rel=1e-10)
        assert abs(rep.b1n_dxn) < 1e-12


def test_polar_db_against_fd_oracle():
    rep = normal_chart(polar_plane(), [1.0, 0.0])
    db_fd = fd_field_derivative(rep.chart_model.b_field, 2)
    assert np.max(np.abs(db_fd - rep.db)) < 1e-9


def test_hopf_chart_pattern_and_unit_rates():
    rep = normal_chart(hopf_sphere(), [0.0, 0.0, 0.0])
    db = rep.db
    assert abs(db[0, 0, 2]) < 1e-12  # first coordinate rate of (1,3) entry
    assert abs(db[1, 1, 2]) < 1e-12
    assert abs(db[2, 0, 2]) < 1e-12 and abs(db[2, 1, 2]) < 1e-12
    assert db[0, 1, 2] == pytest.approx(-db[1, 0, 2], abs=1e-12)
    assert abs(db[0, 1, 2]) == pytest.approx(1.0, abs=1e-12)


def test_hopf_chart_off_center():
    rep = normal_chart(hopf_sphere(), [0.2, -0.1, 0.15])
    assert check_chart_identities(rep).max_violation < 1e-12
    gamma = fd_christoffels(rep.chart_model.a_field, 3)
    assert np.max(np.abs(gamma)) < 1e-7
    a0 = value_matrix(np.asarray(rep.chart_model.a_field([0.0] * 3), dtype=object))
    assert np.max(np.abs(a0 - np.eye(3))) < 1e-12


def test_chart_christoffels_vanish_fd():
    for model, p in [
        (polar_plane(), [0.8, 0.3]),
        (hopf_sphere(), [0.1, 0.2, -0.1]),
    ]:
        rep = normal_chart(model, p)
        gamma = fd_christoffels(rep.chart_model.a_field, model.dimension)
        assert np.max(np.abs(gamma)) < 1e-7


def test_projector_transport_near_center():
    rep = normal_chart(hopf_sphere(), [0.1, 0.05, -0.2])
    bf = rep.chart_model.b_field
    af = rep.chart_model.a_field
    for z in ([0.05, 0.0, 0.02], [-0.03, 0.04, 0.01]):
        b = value_matrix(np.asarray(bf(z), dtype=object))
        a = value_matrix(np.asarray(af(z), dtype=object))
        assert np.max(np.abs(b - b.T)) < 1e-12
        assert np.max(np.abs(b @ np.linalg.solve(a, b) - b)) < 1e-10


def test_chart_identities_all_builtins():
    for model in (flat_product(2, 1), polar_plane(), hopf_sphere()):
        for p in model.default_points(3):
            rep = normal_chart(model, p)
            assert check_chart_identities(rep).max_violation < 1e-8


@settings(max_examples=10, deadline=None)
@given(
    c1=st.floats(-0.3, 0.3),
    c2=st.floats(-0.3, 0.3),
    c3=st.floats(-0.3, 0.3),
)
def test_chart_identities_perturbed_models(c1, c2, c3):
    """Smooth frame perturbations of the flat split still satisfy the identities."""

    def span_field(x):
        W = np.empty((3, 1), dtype=object)
        W[0, 0] = c1 * x[1] + c2 * x[2] * x[2]
        W[1, 0] = c3 * x[0]
        W[2, 0] = 1.0 + c1 * x[0] * x[1]
        return W

    model = frame_span_model("perturbed", (2, 1), lambda x: np.eye(3), span_field)
    rep = normal_chart(model, [0.1, -0.05, 0.2])
    assert check_chart_identities(rep).max_violation < 1e-10


def test_block_orthogonal_freedom():
    """Composing the frame with a block rotation yields another valid chart."""
    model = hopf_sphere()
    p = [0.05, 0.1, -0.08]
    rep = normal_chart(model, p)
    theta = 0.7
    B = np.eye(3)
    B[0, 0], B[0, 1], B[1, 0], B[1, 1] = (
        math.cos(theta), -math.sin(theta), math.sin(theta), math.cos(theta),
    )
    E2 = rep.frame @ B
    rotated = ManifoldModel("rotated", 3, (2, 1), model.a_field, model.b_field,
                            domain=model._domain)
    # re-run the construction on a model pre-composed with the rotated frame
    from finslerkit.manifolds import _pullback_fields

    a_new, b_new, domain, _ = _pullback_fields(model, p, E2, rep.quadratic * 0.0)
    a0 = value_matrix(np.asarray(a_new([0.0] * 3), dtype=object))
    b0 = value_matrix(np.asarray(b_new([0.0] * 3), dtype=object))
    assert np.max(np.abs(a0 - np.eye(3))) < 1e-12
    assert np.max(np.abs(b0 - np.diag([0.0, 0.0, 1.0]))) < 1e-12


def test_alignment_maps_vector_to_plane():
    model = hopf_sphere()
    rep0 = normal_chart(model, [0.0, 0.0, 0.0])
    u1 = rep0.frame[:, 0]
    u2 = rep0.frame[:, 2]
    align = 0.6 * u1 + 0.8 * u2
    rep = normal_chart(model, [0.0, 0.0, 0.0], align=align)
    assert rep.aligned is not None
    assert rep.aligned[0] == pytest.approx(0.6, abs=1e-12)
    assert rep.aligned[-1] == pytest.approx(0.8, abs=1e-12)
    assert abs(rep.aligned[1]) < 1e-12


def test_alignment_rejects_subbundle_vectors():
    model = flat_product(1, 1)
    with pytest.raises(AlignmentError):
        normal_chart(model, [0.0, 0.0], align=[1.0, 0.0])


def test_projector_rank_error():
    bad = ManifoldModel(
        "bad", 2, (1, 1), lambda x: np.eye(2), lambda x: np.eye(2)
    )
    with pytest.raises(ModelError, match="rank"):
        normal_chart(bad, [0.0, 0.0])


def test_non_projector_rejected():
    bad = ManifoldModel(
        "bad", 2, (1, 1), lambda x: np.eye(2), lambda x: np.diag([0.0, 0.5])
    )
    with pytest.raises(ModelError, match="projector"):
        normal_chart(bad, [0.0, 0.0])


def test_domain_enforced():
    with pytest.raises(ModelError, match="domain"):
        normal_chart(polar_plane(), [0.0, 0.0])
