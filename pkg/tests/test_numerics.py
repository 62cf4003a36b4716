import pytest
import numpy as np

from diracstab.core.numerics import (
    Grid, LinearOperator, NumericalFailure, BracketingError, build_grid, diff_matrix,
    wilson_matrix, dense_eigs, quadrature, find_root, interior_mass, even_fold,
    set_distance, fit_power_law,
)
from diracstab.utils.exception import ConfigurationError


TOL = 1e-12
TOL_FD = 1e-4


def assert_allclose(arr1, arr2, atol=TOL):
    np.testing.assert_allclose(arr1, arr2, rtol=0., atol=atol)


def gaussian_grid(points=401):
    return Grid(10.0, points)


def test_grid_nodes_are_symmetric():
    for points in (3, 16, 101, 1024):
        grid = Grid(7.5, points)
        np.testing.assert_array_equal(grid.nodes, -grid.nodes[::-1])
        assert grid.nodes[0] == pytest.approx(-7.5)
        assert grid.spacing == pytest.approx(15.0 / (points - 1))


def test_grid_three_points():
    np.testing.assert_array_equal(Grid(1.0, 3).nodes, [-1.0, 0.0, 1.0])


def test_grid_rejects_bad_values():
    with pytest.raises(ConfigurationError):
        Grid(1.0, 2)
    with pytest.raises(ConfigurationError):
        Grid(-1.0, 10)
    with pytest.raises(TypeError):
        Grid(1.0, 10.0)
    with pytest.raises(ConfigurationError):
        build_grid(1.0, 8)
    assert build_grid(1.0, 16).points == 16


def test_grid_scaled():
    grid = Grid(10.0, 11)
    scaled = grid.scaled(0.5)
    assert scaled.points == 11
    assert_allclose(scaled.nodes, 0.5 * grid.nodes)


def test_first_derivative_is_antisymmetric():
    for accuracy in (2, 4, 6):
        d1 = diff_matrix(gaussian_grid(), 1, accuracy=accuracy).matrix
        np.testing.assert_array_equal(d1, -d1.T)
    d2 = diff_matrix(gaussian_grid(), 2).matrix
    np.testing.assert_array_equal(d2, d2.T)


def test_derivatives_of_gaussian():
    grid = gaussian_grid()
    x = grid.nodes
    f = np.exp(-x ** 2)
    assert_allclose(diff_matrix(grid, 1).apply(f), -2 * x * f, atol=TOL_FD)
    assert_allclose(diff_matrix(grid, 2).apply(f), (4 * x ** 2 - 2) * f, atol=TOL_FD)
    assert_allclose(diff_matrix(grid, 2, accuracy=6).apply(f), (4 * x ** 2 - 2) * f, atol=TOL_FD)


def test_one_sided_closure_is_exact_for_polynomials():
    grid = Grid(1.0, 21)
    x = grid.nodes
    d1 = diff_matrix(grid, 1, closure="one-sided")
    d2 = diff_matrix(grid, 2, closure="one-sided")
    assert_allclose(d1.apply(np.ones_like(x)), 0.0, atol=1e-9)
    assert_allclose(d1.apply(x ** 2), 2 * x, atol=1e-9)
    assert_allclose(d2.apply(x ** 3), 6 * x, atol=1e-7)
    assert d1.boundary == "one-sided"


def test_diff_matrix_rejects_bad_arguments():
    with pytest.raises(ConfigurationError):
        diff_matrix(gaussian_grid(), 3)
    with pytest.raises(ConfigurationError):
        diff_matrix(gaussian_grid(), 1, closure="periodic")
    with pytest.raises(ConfigurationError):
        diff_matrix(Grid(1.0, 4), 1)


def test_wilson_matrix_is_small_on_resolved_functions():
    grid = gaussian_grid()
    wilson = wilson_matrix(grid)
    np.testing.assert_allclose(wilson, wilson.T, rtol=0., atol=1e-12)
    f = np.exp(-grid.nodes ** 2)
    assert np.abs(wilson @ f).max() < TOL_FD

    nyquist = (-1.0) ** np.arange(grid.points)
    lifted = (nyquist @ wilson @ nyquist) / (nyquist @ nyquist)
    assert lifted > 1.0 / grid.spacing


def test_linear_operator_validation():
    grid = Grid(1.0, 4)
    with pytest.raises(ConfigurationError):
        LinearOperator(np.eye(3), grid)
    with pytest.raises(ConfigurationError):
        LinearOperator(np.eye(4) * 1j, grid)
    with pytest.raises(ConfigurationError):
        LinearOperator(np.full((4, 4), np.nan), grid)
    op = LinearOperator(np.eye(8), grid, ("v", "u"))
    assert op.dimension == 8
    assert_allclose(op.block(1, 1), np.eye(4))
    assert_allclose((op @ op).matrix, np.eye(8))
    with pytest.raises(ConfigurationError):
        op @ LinearOperator(np.eye(8), Grid(2.0, 4), ("v", "u"))


def test_dense_eigs():
    result = dense_eigs(np.diag([3.0, 1.0, 2.0]))
    assert_allclose(np.sort(result.values.real), [1.0, 2.0, 3.0])
    assert result.vectors is None
    assert result.residual_bound < TOL

    rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
    result = dense_eigs(rotation, want_vectors=True)
    assert_allclose(np.sort(result.values.imag), [-1.0, 1.0])
    assert result.vectors.shape == (2, 2)
    assert result.conjugation_defect() < TOL

    with pytest.raises(ConfigurationError):
        dense_eigs(np.ones((2, 3)))


def test_numerical_failure_keeps_dimension():
    error = NumericalFailure("no convergence", 12)
    assert error.dimension == 12
    assert "12" in str(error)


def test_quadrature_of_gaussian():
    for points in (2001, 2000):
        grid = Grid(10.0, points)
        assert quadrature(grid, np.exp(-grid.nodes ** 2)) == pytest.approx(np.sqrt(np.pi), abs=1e-10)
    with pytest.raises(ConfigurationError):
        quadrature(Grid(10.0, 11), np.ones(10))


def test_find_root():
    assert find_root(np.cos, (0.0, 2.0)) == pytest.approx(np.pi / 2, abs=1e-13)
    assert find_root(lambda x: x, (0.0, 1.0)) == 0.0
    with pytest.raises(BracketingError):
        find_root(lambda x: x ** 2 + 1, (-1.0, 1.0))


def test_interior_mass():
    grid = Grid(20.0, 401)
    narrow = np.exp(-grid.nodes ** 2)
    assert interior_mass(grid, narrow) == pytest.approx(1.0)
    assert interior_mass(grid, np.concatenate([narrow, narrow])) == pytest.approx(1.0)
    assert interior_mass(grid, np.ones(grid.points)) == pytest.approx(0.5, abs=0.01)
    assert interior_mass(grid, np.zeros(grid.points)) == 0.0


def test_even_fold():
    grid = Grid(1.0, 7)
    restrict, extend = even_fold(grid)
    assert restrict.shape == (4, 7)
    even = np.cos(grid.nodes)
    assert_allclose(extend @ (restrict @ even), even)


def test_set_distance():
    assert set_distance([1j, 2.0], [2.0, 1j, 5.0]) == 0.0
    assert set_distance([1.0], [0.0, 3.0]) == pytest.approx(1.0)
    assert set_distance([], [1.0]) == 0.0


def test_fit_power_law():
    x = np.array([0.1, 0.2, 0.4, 0.8])
    assert fit_power_law(x, 3 * x ** 2) == pytest.approx(2.0)
    with pytest.raises(ConfigurationError):
        fit_power_law([1.0], [1.0])
