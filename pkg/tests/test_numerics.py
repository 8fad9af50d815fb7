import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from modeqfi.errors import GridMismatchError, NumericalError, ValidationError
from modeqfi.modes import hermite_gauss_1d
from modeqfi.numerics import (
    SampledFunction,
    gram_matrix,
    grid_from_nodes,
    inner_product,
    make_grid,
    numeric_derivative,
)


def test_trapezoid_weights_sum_to_length():
    grid = make_grid("trapezoid", 0.0, 1.0, 11)
    assert grid.weights.sum() == pytest.approx(1.0, rel=1e-12)


def test_gauss_legendre_integrates_quadratic_exactly():
    grid = make_grid("gauss-legendre", -1.0, 1.0, 16)
    assert abs(np.sum(grid.weights * grid.coords[0] ** 2) - 2 / 3) < 1e-14


@pytest.mark.parametrize("kind", ["gauss-legendre", "trapezoid", "periodic"])
@pytest.mark.parametrize("dimension", [1, 2])
def test_weights_sum_to_domain_measure(kind, dimension):
    grid = make_grid(kind, -2.0, 3.0, 40, dimension)
    assert grid.weights.sum() == pytest.approx(5.0**dimension, rel=1e-12)
    assert grid.measure == pytest.approx(5.0**dimension, rel=1e-12)
    assert np.all(grid.weights > 0)


def test_hg00_norm_on_default_window():
    w = 1.3
    grid = make_grid("gauss-legendre", -8 * w, 8 * w, 200)
    u = hermite_gauss_1d(0, grid.coords[0], w)
    assert abs(np.sum(grid.weights * u**2) - 1.0) < 1e-10


def test_two_dimensional_grid_is_tensor_product():
    grid = make_grid("gauss-legendre", -1.0, 1.0, 10, dimension=2)
    assert grid.size == 100
    assert grid.points.shape == (100, 2)
    x, y = grid.coords
    # ∫∫ x² y⁴ over the square = (2/3)(2/5)
    assert np.sum(grid.weights * x**2 * y**4) == pytest.approx(4 / 15, abs=1e-14)


@pytest.mark.parametrize("lo, hi, n", [(1.0, 1.0, 10), (2.0, 1.0, 10), (0.0, 1.0, 7)])
def test_make_grid_rejects_bad_input(lo, hi, n):
    with pytest.raises(ValidationError):
        make_grid("gauss-legendre", lo, hi, n)


def test_make_grid_rejects_unknown_rule_and_dimension():
    with pytest.raises(ValidationError):
        make_grid("simpson", 0.0, 1.0, 10)
    with pytest.raises(ValidationError):
        make_grid("trapezoid", 0.0, 1.0, 10, dimension=3)


def test_grid_from_nodes_trapezoid():
    nodes = np.linspace(0.0, 2.0, 21) ** 2
    grid = grid_from_nodes(nodes)
    assert grid.weights.sum() == pytest.approx(4.0)
    with pytest.raises(ValidationError):
        grid_from_nodes(nodes[::-1])


def test_sampled_function_rejects_nan_and_wrong_shape():
    grid = make_grid("trapezoid", 0.0, 1.0, 10)
    with pytest.raises(NumericalError):
        SampledFunction(grid, np.full(10, np.nan))
    with pytest.raises(ValidationError):
        SampledFunction(grid, np.ones(9))


def test_inner_product_examples():
    w = 1.0
    grid = make_grid("gauss-legendre", -8 * w, 8 * w, 200)
    f = grid.sample(lambda x: hermite_gauss_1d(0, x, w))
    g = grid.sample(lambda x: hermite_gauss_1d(1, x, w))
    assert abs(inner_product(f, f) - 1.0) < 1e-12
    assert abs(inner_product(f, g)) < 1e-10
    assert abs(inner_product(f, 1j * f) - 1j) < 1e-12


def test_inner_product_grid_mismatch():
    a = make_grid("trapezoid", 0.0, 1.0, 10).sample(np.sin)
    b = make_grid("trapezoid", 0.0, 1.0, 11).sample(np.sin)
    with pytest.raises(GridMismatchError):
        inner_product(a, b)
    with pytest.raises(GridMismatchError):
        a + b


def test_gram_matrix_layout():
    grid = make_grid("gauss-legendre", -8.0, 8.0, 120)
    funcs = [grid.sample(lambda x, n=n: hermite_gauss_1d(n, x, 1.0)) for n in range(3)]
    other = [1j * funcs[1]]
    m = gram_matrix(funcs, other)
    assert m.shape == (3, 1)
    assert abs(m[1, 0] - 1j) < 1e-12
    np.testing.assert_allclose(gram_matrix(funcs), np.eye(3), atol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_inner_product_conjugate_symmetry(seed):
    rng = np.random.default_rng(seed)
    grid = make_grid("gauss-legendre", -1.0, 1.0, 16)
    a = SampledFunction(grid, rng.normal(size=16) + 1j * rng.normal(size=16))
    b = SampledFunction(grid, rng.normal(size=16) + 1j * rng.normal(size=16))
    assert inner_product(a, b) == pytest.approx(np.conj(inner_product(b, a)), abs=1e-14)


def test_numeric_derivative_linear_phase():
    grid = make_grid("gauss-legendre", -8.0, 8.0, 200)
    g = hermite_gauss_1d(0, grid.coords[0], 1.0)
    d = numeric_derivative(lambda t: SampledFunction(grid, np.exp(1j * t) * g), 1e-4)
    assert np.max(np.abs(d.values - 1j * g)) < 1e-12


def test_numeric_derivative_displaced_gaussian():
    w = 1.0
    grid = make_grid("gauss-legendre", -8 * w, 8 * w, 200)
    x = grid.coords[0]
    d = numeric_derivative(lambda t: SampledFunction(grid, hermite_gauss_1d(0, x + t, w)), 1e-4 * w)
    exact = -2 * x / w**2 * hermite_gauss_1d(0, x, w)
    assert np.max(np.abs(d.values - exact)) < 1e-8


def test_numeric_derivative_constant_family_is_zero():
    grid = make_grid("trapezoid", 0.0, 1.0, 10)
    f = grid.sample(np.cos)
    assert np.max(np.abs(numeric_derivative(lambda t: f, 1e-3).values)) < 1e-12
    with pytest.raises(ValidationError):
        numeric_derivative(lambda t: f, 0.0)


def test_quadrature_convergence_of_overlap():
    values = []
    for n in (200, 400):
        grid = make_grid("gauss-legendre", -8.0, 8.0, n)
        x = grid.coords[0]
        values.append(np.sum(grid.weights * hermite_gauss_1d(2, x, 1.0) * x**2 * hermite_gauss_1d(0, x, 1.0)))
    assert abs(values[0] - values[1]) < 1e-9
    assert values[0] == pytest.approx(math.sqrt(2) / 4 * 1.0, rel=1e-10)
