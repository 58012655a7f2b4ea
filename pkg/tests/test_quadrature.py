from math import factorial

import numpy as np
import pytest

from trunc_fem.quadrature import (QuadratureCapabilityError, grundmann_moeller, integrate_on,
                                  rule_for_degree)
from trunc_fem.simplex import monomial_factor

from conftest import random_frame


def test_centroid_rule():
    rule = rule_for_degree(2, 1)
    assert len(rule) == 1
    assert np.allclose(rule.points, 1 / 3)
    assert rule.weights[0] == pytest.approx(0.5)


def test_product_of_two_coordinates_on_tet():
    rule = rule_for_degree(3, 2)
    val = 6 * rule.weights @ (rule.points[:, 0] * rule.points[:, 1])
    assert val * (1 / 6) == pytest.approx(1 / 120, rel=1e-14)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("degree", [1, 2, 5, 8, 12])
def test_exactness_sweep(d, degree):
    rule = rule_for_degree(d, degree)
    assert rule.weights.sum() == pytest.approx(1 / factorial(d), abs=1e-14)
    assert np.allclose(rule.points.sum(axis=1), 1.0, atol=1e-15)
    for total in range(degree + 1):
        for alpha in _compositions(total, d + 1):
            exact = monomial_factor(alpha, d) / factorial(d)
            approx = rule.weights @ np.prod(rule.points ** np.array(alpha), axis=1)
            assert abs(approx - exact) <= 1e-12 * exact


def test_grundmann_moeller_has_negative_weights():
    assert (grundmann_moeller(3, 4).weights < 0).any()


def test_known_point_counts():
    assert [len(rule_for_degree(d, 8)) for d in (2, 3, 4)] == [34, 69, 126]


@pytest.mark.parametrize("d, degree", [(1, 2), (5, 2), (3, 0), (3, 13)])
def test_capability_error(d, degree):
    with pytest.raises(QuadratureCapabilityError):
        rule_for_degree(d, degree)


def test_integrate_constant(rng):
    fr = random_frame(rng, 3)
    val = integrate_on(fr, rule_for_degree(3, 2), lambda x: np.ones(len(x)))
    assert val == pytest.approx(fr.measure, rel=1e-14)


def test_integrate_lambda_squared(ref_triangle):
    val = integrate_on(ref_triangle, rule_for_degree(2, 2), lambda x: (1 - x[:, 0] - x[:, 1]) ** 2)
    assert val == pytest.approx(1 / 12, rel=1e-14)


def test_degree_self_consistency(ref_triangle):
    # exact value 1/pi; a degree-8 rule sits about 4e-8 away, degree 10 and 12 much closer
    f = lambda x: np.sin(np.pi * x[:, 0])
    a8, a10, a12 = (integrate_on(ref_triangle, rule_for_degree(2, k), f) for k in (8, 10, 12))
    assert abs(a8 - a10) <= 1e-7
    assert abs(a10 - a12) <= 1e-9
    assert abs(a12 - 1 / np.pi) <= 1e-11


def test_integrand_failure_names_the_cell(ref_triangle):
    def boom(x):
        raise ZeroDivisionError("bad point")

    with pytest.raises(RuntimeError, match="cell 3"):
        integrate_on(ref_triangle, rule_for_degree(2, 2), boom, cell=3)
    with pytest.raises(FloatingPointError):
        integrate_on(ref_triangle, rule_for_degree(2, 2), lambda x: np.full(len(x), np.nan))
