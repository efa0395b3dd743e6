"""Function space construction, evaluation and moment helpers."""

from __future__ import annotations

import math

import numpy as np
import pytest

from sbpkit.spaces import (
    Interval,
    affine_map,
    boundary_product_moment,
    exponential_space,
    make_space,
    pair_derivative_rows,
    pair_moments,
    polynomial_space,
    rbf_cubic_space,
    trigonometric_space,
    unisolvency_rank,
    vandermonde,
    vandermonde_derivative,
)


def test_interval_rejects_empty_and_non_finite():
    with pytest.raises(ValueError):
        Interval(1.0, 1.0)
    with pytest.raises(ValueError):
        Interval(2.0, -1.0)
    with pytest.raises(ValueError):
        Interval(0.0, math.inf)
    iv = Interval(-2.0, 3.0)
    assert iv.width == 5.0
    assert iv.contains([-2.0, 0.0, 3.0])
    assert not iv.contains(3.5)


def test_space_dimensions():
    iv = Interval(0.0, 1.0)
    assert polynomial_space(0, iv).dim == 1
    assert polynomial_space(3, iv).dim == 4
    assert trigonometric_space(1, iv).dim == 3
    assert trigonometric_space(4, iv).dim == 9
    assert exponential_space(2, iv).dim == 3
    assert rbf_cubic_space([0.0, 0.5, 1.0], iv).dim == 3


def test_all_builtin_spaces_contain_constants():
    iv = Interval(0.0, 1.0)
    spaces = [
        polynomial_space(2, iv),
        trigonometric_space(2, iv),
        exponential_space(2, iv),
        rbf_cubic_space([0.0, 0.25, 0.75, 1.0], iv),
    ]
    x = np.linspace(0.0, 1.0, 17)
    for space in spaces:
        assert space.contains_constants
        # the constant must actually lie in the span on a sample grid
        V = vandermonde(space, x)
        coef, *_ = np.linalg.lstsq(V, np.ones_like(x), rcond=None)
        assert np.max(np.abs(V @ coef - 1.0)) < 1e-10


def test_trig_vandermonde_row_at_zero():
    space = trigonometric_space(1, Interval(0.0, 1.0))
    row = vandermonde(space, [0.0])[0]
    np.testing.assert_allclose(row, [1.0, 0.0, 1.0], atol=1e-15)


def test_exp_vandermonde_row_at_one():
    space = exponential_space(2, Interval(0.0, 1.0))
    row = vandermonde(space, [1.0])[0]
    np.testing.assert_allclose(row, [1.0, 1.0, math.e], rtol=1e-15)


def test_vandermonde_rejects_points_outside_interval():
    space = polynomial_space(2, Interval(0.0, 1.0))
    with pytest.raises(ValueError):
        vandermonde(space, [0.0, 1.5])
    with pytest.raises(ValueError):
        vandermonde_derivative(space, [-0.2])


def test_rbf_cardinal_property():
    """Each radial basis element is one at its own center, zero at the others."""
    centers = [0.0, 0.3, 0.7, 1.0]
    space = rbf_cubic_space(centers, Interval(0.0, 1.0))
    V = vandermonde(space, centers)
    np.testing.assert_allclose(V, np.eye(4), atol=1e-12)


def test_rbf_partition_of_unity():
    space = rbf_cubic_space([0.0, 0.5, 1.0], Interval(0.0, 1.0))
    x = np.linspace(0.0, 1.0, 101)
    total = vandermonde(space, x).sum(axis=1)
    assert np.max(np.abs(total - 1.0)) < 1e-10


def test_rbf_three_center_closed_form():
    # with centers {0, 1/2, 1} the first cardinal function is
    # |x|^3/2 - 2|x-1/2|^3 + 3|x-1|^3/2 - 1/4
    space = rbf_cubic_space([0.0, 0.5, 1.0], Interval(0.0, 1.0))
    x = np.linspace(0.0, 1.0, 33)
    expected = (
        0.5 * np.abs(x) ** 3
        - 2.0 * np.abs(x - 0.5) ** 3
        + 1.5 * np.abs(x - 1.0) ** 3
        - 0.25
    )
    got = vandermonde(space, x)[:, 0]
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_constructor_rejects_bad_parameters():
    iv = Interval(0.0, 1.0)
    with pytest.raises(ValueError):
        polynomial_space(-1, iv)
    with pytest.raises(ValueError):
        trigonometric_space(0, iv)
    with pytest.raises(ValueError):
        exponential_space(0, iv)
    with pytest.raises(ValueError):
        rbf_cubic_space([0.0], iv)
    with pytest.raises(ValueError):
        rbf_cubic_space([0.0, 0.5, 0.5, 1.0], iv)
    with pytest.raises(ValueError):
        # endpoints of the interval must be among the centers
        rbf_cubic_space([0.1, 0.5, 1.0], iv)


def test_make_space_grammar():
    iv = Interval(0.0, 2.0)
    assert make_space("poly:d=3", iv).dim == 4
    assert make_space("trig:d=2", iv).dim == 5
    assert make_space("exp:d=1", iv).dim == 2
    assert make_space("rbf-cubic:centers=0,1,2", iv).dim == 3
    for bad in ("poly", "poly:3", "poly:k=3", "poly:d=x", "splines:d=2", ""):
        with pytest.raises(ValueError):
            make_space(bad, iv)


def test_analytic_derivatives_match_finite_differences():
    """Stored derivatives agree with central differences for every family."""
    rng = np.random.default_rng(20240817)
    specs = [
        ("poly:d=4", Interval(0.0, 1.0)),
        ("trig:d=2", Interval(0.0, 2.0)),
        ("exp:d=3", Interval(-1.0, 1.0)),
        ("rbf-cubic:centers=0,0.4,1", Interval(0.0, 1.0)),
    ]
    for text, iv in specs:
        space = make_space(text, iv)
        margin = 0.05 * iv.width
        x = rng.uniform(iv.left + margin, iv.right - margin, size=100)
        h = 1e-6 * iv.width
        exact = vandermonde_derivative(space, x)
        approx = (vandermonde(space, x + h) - vandermonde(space, x - h)) / (2 * h)
        assert np.max(np.abs(approx - exact)) < 1e-4 * (1.0 + np.max(np.abs(exact)))


def test_unisolvency_rank_counts_independent_directions():
    iv = Interval(0.0, 1.0)
    trig = trigonometric_space(1, iv)
    assert unisolvency_rank(trig, np.linspace(0.0, 1.0, 4)) == 3
    poly2 = polynomial_space(2, iv)
    assert unisolvency_rank(poly2, [0.0, 0.5, 1.0]) == 3
    # a repeated node contributes nothing new
    poly1 = polynomial_space(1, iv)
    assert unisolvency_rank(poly1, [0.5, 0.5]) == 1
    assert unisolvency_rank(poly1, [0.25, 0.75]) == 2


def test_boundary_product_moment_values_and_symmetry():
    space = exponential_space(2, Interval(0.0, 1.0))
    # elements are 1, x, exp(x); the (x, x) product jumps by 1 over [0, 1]
    assert boundary_product_moment(space, 1, 1) == pytest.approx(1.0)
    # (1, exp) jumps by e - 1
    assert boundary_product_moment(space, 0, 2) == pytest.approx(math.e - 1.0)
    for k in range(space.dim):
        for l in range(space.dim):
            a = boundary_product_moment(space, k, l)
            b = boundary_product_moment(space, l, k)
            assert a == pytest.approx(b, abs=0.0)


def test_boundary_product_moment_periodic_pairs_vanish():
    space = trigonometric_space(1, Interval(0.0, 1.0))
    # sin and cos of the base frequency take equal values at both ends
    assert boundary_product_moment(space, 1, 2) == pytest.approx(0.0, abs=1e-15)
    assert boundary_product_moment(space, 1, 1) == pytest.approx(0.0, abs=1e-15)


def test_boundary_product_moment_range_check():
    space = polynomial_space(1, Interval(0.0, 1.0))
    with pytest.raises(ValueError):
        boundary_product_moment(space, 0, 2)
    with pytest.raises(ValueError):
        boundary_product_moment(space, -1, 0)


def test_pair_rows_constant_space():
    space = polynomial_space(0, Interval(0.0, 1.0))
    rows = pair_derivative_rows(space, np.linspace(0.0, 1.0, 5))
    assert rows.shape == (1, 5)
    np.testing.assert_allclose(rows, 0.0, atol=1e-15)
    np.testing.assert_allclose(pair_moments(space), [0.0], atol=1e-15)


def test_pair_rows_monomial_pair():
    # for elements 1, x, exp(x) the (x, x) row is (x^2)' = 2x with moment 1
    space = exponential_space(2, Interval(0.0, 1.0))
    grid = np.array([0.0, 1.0])
    rows = pair_derivative_rows(space, grid)
    assert rows.shape == (6, 2)
    idx = 3  # pairs in order (0,0), (0,1), (0,2), (1,1), (1,2), (2,2)
    np.testing.assert_allclose(rows[idx], [0.0, 2.0], atol=1e-14)
    assert pair_moments(space)[idx] == pytest.approx(1.0)


def test_pair_rows_match_product_rule():
    """Each row equals the derivative of the corresponding product."""
    space = trigonometric_space(1, Interval(0.0, 1.0))
    x = np.linspace(0.05, 0.95, 21)
    rows = pair_derivative_rows(space, x)
    h = 1e-6
    Vp = vandermonde(space, x + h)
    Vm = vandermonde(space, x - h)
    pairs = [(k, l) for k in range(space.dim) for l in range(k, space.dim)]
    for row, (k, l) in zip(rows, pairs):
        fd = (Vp[:, k] * Vp[:, l] - Vm[:, k] * Vm[:, l]) / (2 * h)
        np.testing.assert_allclose(row, fd, atol=1e-4)


def test_affine_map_preserves_values_and_scales_derivatives():
    src = trigonometric_space(1, Interval(0.0, 1.0))
    mapped = affine_map(src, Interval(2.0, 4.0))
    assert mapped.interval == Interval(2.0, 4.0)
    assert mapped.kind == "mapped(trig:d=1)"
    assert mapped.contains_constants
    # values are transported along the chart, derivatives divide by the
    # width ratio s = 2
    x = np.linspace(2.0, 4.0, 9)
    xi = (x - 2.0) / 2.0
    np.testing.assert_allclose(
        vandermonde(mapped, x), vandermonde(src, xi), atol=1e-14
    )
    np.testing.assert_allclose(
        vandermonde_derivative(mapped, x),
        vandermonde_derivative(src, xi) / 2.0,
        atol=1e-14,
    )
