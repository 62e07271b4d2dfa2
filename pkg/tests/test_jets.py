"""Derivative engine: jet exactness, FD oracle, and their agreement."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerkit.jets import (
    DomainError,
    EvaluationError,
    MultiOrder,
    UnsupportedOrderError,
    algebra,
    cross_check,
    exp,
    fd_partial,
    log,
    sin,
    sqrt,
    taylor_eval,
)


def test_polynomial_mixed_partial():
    # d^2/dy1 dy2 of (y1)^2 y2 at fiber (3, 5) is 2 * 3
    f = lambda x, y: y[0] * y[0] * y[1]
    t = taylor_eval(f, [0.0], [3.0, 5.0], [MultiOrder((0,), (1, 1))])
    assert t[MultiOrder((0,), (1, 1))] == pytest.approx(6.0, abs=1e-12)


def test_quadratic_hessian_is_twice_identity():
    f = lambda x, y: y[0] * y[0] + y[1] * y[1]
    orders = [MultiOrder((0,), (2, 0)), MultiOrder((0,), (1, 1)), MultiOrder((0,), (0, 2))]
    t = taylor_eval(f, [0.0], [0.7, -1.3], orders)
    assert t[orders[0]] == 2.0
    assert t[orders[1]] == 0.0
    assert t[orders[2]] == 2.0


def test_monomial_mixed_x_y():
    f = lambda x, y: x[0] * y[0] ** 3
    t = taylor_eval(f, [2.0], [7.0], [MultiOrder((1,), (3,))])
    assert t[MultiOrder((1,), (3,))] == pytest.approx(6.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    px=st.integers(0, 1),
    p1=st.integers(0, 3),
    p2=st.integers(0, 2),
    c=st.floats(-3.0, 3.0),
)
def test_jet_exact_on_monomials(px, p1, p2, c):
    """Any monomial of total degree <= 6 differentiates exactly."""

    def f(x, y):
        v = c
        for _ in range(px):
            v = v * x[0]
        for _ in range(p1):
            v = v * y[0]
        for _ in range(p2):
            v = v * y[1]
        return v

    base, fiber = [1.3], [0.8, -1.1]
    order = MultiOrder((px,), (p1, p2))
    got = taylor_eval(f, base, fiber, [order])[order]
    expected = c * math.factorial(px) * math.factorial(p1) * math.factorial(p2)
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_mixed_partial_symmetry_bitwise():
    # jets cannot distinguish differentiation order: one coefficient serves all
    def f(x, y):
        return sqrt(1.0 + y[0] * y[0] + 0.5 * y[0] * y[1] ** 2) * exp(0.1 * y[2])

    orders = [MultiOrder((), (1, 2, 1)), MultiOrder((), (1, 2, 1))]
    t1 = taylor_eval(f, [], [0.4, 0.6, -0.2], [orders[0]])
    t2 = taylor_eval(f, [], [0.4, 0.6, -0.2], [orders[1]])
    assert t1[orders[0]] == t2[orders[1]]


def test_composition_functions_match_analytic():
    f = lambda x, y: log(y[0])
    o3 = MultiOrder((), (3,))
    t = taylor_eval(f, [], [2.0], [o3])
    assert t[o3] == pytest.approx(2.0 / 8.0, rel=1e-14)  # d^3 log = 2/u^3

    g = lambda x, y: sin(y[0])
    o5 = MultiOrder((), (5,))
    t = taylor_eval(g, [], [0.3], [o5])
    assert t[o5] == pytest.approx(math.cos(0.3), rel=1e-13)


def test_euler_identity_transport():
    """2-homogeneous fields satisfy y^i df/dy^i = 2 f exactly through jets."""

    def f(x, y):
        q = y[0] * y[0] + 2.0 * y[1] * y[1]
        return q + 0.3 * y[0] * y[0] * y[1] * y[1] / q

    fiber = [0.6, 0.8]
    orders = [MultiOrder((), (1, 0)), MultiOrder((), (0, 1))]
    t = taylor_eval(f, [], fiber, orders)
    val = f([], fiber)
    euler = fiber[0] * t[orders[0]] + fiber[1] * t[orders[1]]
    assert euler == pytest.approx(2.0 * val, rel=1e-10)


def test_zero_fiber_rejected():
    f = lambda x, y: y[0] * y[0]
    with pytest.raises(DomainError):
        taylor_eval(f, [0.0], [0.0, 0.0], [MultiOrder((0,), (2, 0))])
    with pytest.raises(DomainError):
        fd_partial(f, [0.0], [0.0, 0.0], MultiOrder((0,), (2, 0)))


def test_order_caps_enforced():
    with pytest.raises(UnsupportedOrderError):
        MultiOrder((2,), (0, 0))
    with pytest.raises(UnsupportedOrderError):
        MultiOrder((0,), (3, 3))


def test_non_finite_evaluation_names_order():
    f = lambda x, y: log(y[0])  # domain error at negative argument
    with pytest.raises(EvaluationError):
        taylor_eval(f, [], [-1.0], [MultiOrder((), (1,))])


def test_fd_matches_quadratic():
    f = lambda x, y: y[0] * y[0] + y[1] * y[1]
    v, err = fd_partial(f, [0.0], [1.0, 1.0], MultiOrder((0,), (2, 0)), step=1e-3)
    assert v == pytest.approx(2.0, abs=1e-8)
    assert err < 1e-6


def test_fd_fifth_derivative():
    f = lambda x, y: y[0] ** 5
    v, err = fd_partial(f, [0.0], [1.0], MultiOrder((0,), (5,)), step=1e-2,
                        richardson_levels=2)
    assert v == pytest.approx(120.0, rel=1e-3)


def test_fd_x_independent_field():
    f = lambda x, y: y[0] * y[0] + y[1] * y[1]
    v, _ = fd_partial(f, [0.3, 0.4], [1.0, 2.0], MultiOrder((1, 0), (0, 0)))
    assert abs(v) < 1e-10


def test_fd_error_estimate_brackets_truth():
    f = lambda x, y: exp(y[0]) * sin(y[1])
    o = MultiOrder((), (2, 1))
    v, err = fd_partial(f, [], [0.4, 0.9], o)
    truth = math.exp(0.4) * -math.cos(0.9) * -1.0  # d2/dy0^2 e^y0 * d/dy1 sin
    assert abs(v - truth) < max(10.0 * err, 1e-9)


def test_cross_check_euclidean():
    f = lambda x, y: y[0] * y[0] + y[1] * y[1]
    samples = [([0.0, 0.0], [0.5 + 0.1 * i, 1.0 - 0.05 * i]) for i in range(10)]
    orders = [MultiOrder((0, 0), (2, 0)), MultiOrder((0, 0), (1, 1)),
              MultiOrder((0, 0), (0, 3))]
    rep = cross_check(f, samples, orders, rel_tol=1e-7)
    assert rep.passed and rep.max_rel_discrepancy < 1e-7


def test_cross_check_propagates_sample_index():
    f = lambda x, y: log(y[0])
    with pytest.raises(EvaluationError, match="sample 1"):
        cross_check(
            f,
            [([0.0], [1.0]), ([0.0], [-1.0])],
            [MultiOrder((0,), (1,))],
            rel_tol=1e-6,
        )


def test_algebra_group_caps_shape():
    alg = algebra((2, 2), (1, 3))
    for e in alg.monomials:
        assert e[0] + e[1] <= 1 and e[2] + e[3] <= 3
    # closed under admissible products: spot check x * y^3 present
    assert (1, 0, 3, 0) in alg.index
    assert (0, 0, 2, 2) not in alg.index
