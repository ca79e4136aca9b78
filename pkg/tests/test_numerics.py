import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from loja_lab.errors import ContractViolation
from loja_lab.numerics import (EuclideanSpace, Grid1D, d1, d2, dirichlet_eigenvalue,
                               dirichlet_laplacian_matrix, edge_average, edge_average_T,
                               edge_difference, edge_difference_T, inner, linfit, svd_small,
                               sym_eigs)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_grid_spacing_and_nodes():
    g = Grid1D(0.0, 2.0, 3)
    assert g.h == 0.5
    npt.assert_allclose(g.x, [0.5, 1.0, 1.5])


@pytest.mark.parametrize("a, b, n", [(0, 1, 2), (1, 1, 10), (1, 0, 10), (0, np.inf, 10)])
def test_grid_rejects_bad_arguments(a, b, n):
    with pytest.raises(ContractViolation):
        Grid1D(a, b, n)


def test_field_shape_is_checked(grid):
    with pytest.raises(ContractViolation):
        grid.check(np.zeros(grid.n + 1))
    with pytest.raises(ContractViolation):
        grid.check(np.full(grid.n, np.nan))


def test_inner_of_constant_is_interior_length(grid):
    one = np.ones(grid.n)
    npt.assert_allclose(inner(grid, one, one), grid.n * grid.h, rtol=1e-15)


def test_inner_of_sine_squared_is_exactly_half(grid):
    # sum_{i=1}^{n} sin^2(pi i/(n+1)) = (n+1)/2
    s = np.sin(np.pi * grid.x)
    npt.assert_allclose(inner(grid, s, s), 0.5, rtol=1e-14)


def test_difference_operators_are_exact_on_quadratics(grid):
    u = grid.x * (1 - grid.x)
    npt.assert_allclose(d2(grid, u), -2.0, rtol=1e-9)
    npt.assert_allclose(d1(grid, u), 1 - 2 * grid.x, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 5])
def test_sines_are_eigenfunctions_of_the_laplacian(grid, k):
    u = np.sin(k * np.pi * grid.x)
    npt.assert_allclose(-d2(grid, u), dirichlet_eigenvalue(grid, k) * u, atol=1e-8)


def test_laplacian_matrix_matches_stencil(small_grid):
    rng = np.random.default_rng(0)
    u = rng.standard_normal(small_grid.n)
    npt.assert_allclose(dirichlet_laplacian_matrix(small_grid) @ u, -d2(small_grid, u), rtol=1e-12)


def test_dirichlet_eigenvalue_tends_to_continuum():
    g = Grid1D(0.0, 1.0, 999)
    npt.assert_allclose(dirichlet_eigenvalue(g, 2), 4 * np.pi**2, rtol=1e-4)


@settings(max_examples=50, deadline=None)
@given(arrays(float, 8, elements=finite), arrays(float, 9, elements=finite))
def test_edge_operators_are_adjoint(u, q):
    g = Grid1D(0.0, 3.0, 8)
    cell = lambda a, b: g.h * float(np.dot(a, b))
    npt.assert_allclose(cell(q, edge_difference(g, u)), inner(g, edge_difference_T(g, q), u),
                        atol=1e-9 * (1 + np.abs(q).sum() * np.abs(u).sum()))
    npt.assert_allclose(cell(q, edge_average(g, u)), inner(g, edge_average_T(g, q), u),
                        atol=1e-9 * (1 + np.abs(q).sum() * np.abs(u).sum()))


def test_euclidean_space_has_unit_weight():
    s = EuclideanSpace(3)
    assert s.h == 1.0
    npt.assert_allclose(s.inner([1, 2, 3], [1, 1, 1]), 6.0)


def test_svd_of_known_matrix():
    # singular values of [[3, 0], [4, 5]] are sqrt(45) and sqrt(5)
    U, s, V = svd_small(np.array([[3.0, 0.0], [4.0, 5.0]]))
    npt.assert_allclose(s, [np.sqrt(45), np.sqrt(5)], rtol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_svd_reconstructs_and_is_orthonormal(m, n, seed):
    M = np.random.default_rng(seed).standard_normal((m, n))
    U, s, V = svd_small(M, full=True)
    k = s.size
    npt.assert_allclose((U[:, :k] * s) @ V[:, :k].T, M, atol=1e-12)
    npt.assert_allclose(V.T @ V, np.eye(n), atol=1e-12)
    assert np.all(np.diff(s) <= 1e-14)


def test_svd_kernel_columns_annihilate():
    M = np.array([[1.0, 2.0, 3.0]])
    _, s, V = svd_small(M, full=True)
    npt.assert_allclose(M @ V[:, 1:], 0.0, atol=1e-14)


def test_sym_eigs_known_pair():
    values, vectors = sym_eigs(np.array([[2.0, 1.0], [1.0, 2.0]]))
    npt.assert_allclose(values, [1.0, 3.0], rtol=1e-14)
    npt.assert_allclose(np.abs(vectors[:, 0]), [2**-0.5, 2**-0.5], rtol=1e-14)


def test_sym_eigs_rejects_asymmetric():
    with pytest.raises(ContractViolation):
        sym_eigs(np.array([[1.0, 2.0], [0.0, 1.0]]))


@settings(max_examples=50, deadline=None)
@given(finite, finite, st.integers(3, 30))
def test_linfit_recovers_exact_lines(slope, intercept, n):
    x = np.linspace(-1.0, 2.0, n)
    s, c, r2 = linfit(x, slope * x + intercept)
    npt.assert_allclose([s, c], [slope, intercept], atol=1e-9 * (1 + abs(slope) + abs(intercept)))
    assert r2 == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("x, y", [([1, 2], [1, 2]), ([1, 1, 1], [1, 2, 3])])
def test_linfit_rejects_degenerate_input(x, y):
    with pytest.raises(ContractViolation):
        linfit(x, y)
