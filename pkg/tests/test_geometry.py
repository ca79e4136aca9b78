import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loja_lab.checks import random_field
from loja_lab.errors import (ChartDomainError, ConstraintDegeneracyError, ContractViolation,
                             SurjectivityError)
from loja_lab.geometry import (build_chart, constraint_gradients, gram_matrix,
                               hessian_spectrum, lagrangian_hessian, lemma42_comparison,
                               multiplier, phi, phi_prime, phi_prime_singular_values,
                               project_tangent, psi, psi_prime, psi_prime_fd_error,
                               pullback_energy, pullback_grad, pullback_hessian, retract,
                               tangent_identity_check)
from loja_lab.models import (AllenCahnModel, HeightEnergy, RevolutionModel, SphereConstraint,
                             StackedConstraint, constraint_hessian_example_model,
                             integral_constraint, lambda_weights, mass_constraint,
                             revolution_multiplier, revolution_volume_constraint)
from loja_lab.numerics import Grid1D, dirichlet_eigenvalue

NORTH = np.array([0.0, 0.0, 1.0])


# -- multiplier and projection ---------------------------------------------------


def test_cylinder_multiplier_is_one(cylinder, grid):
    E, G = cylinder
    npt.assert_allclose(multiplier(E, G, grid.zeros()), [1.0], rtol=1e-13)
    npt.assert_allclose(revolution_multiplier(grid, grid.zeros(), np.pi), 1.0, rtol=1e-13)


def test_revolution_multiplier_closed_form_agrees_under_refinement():
    # u = b sin(pi x) + a sin(2 pi x) lies on M in the continuum when
    # 2b/pi = -(a^2 + b^2)/4
    a = 0.2
    b = 2 * (-2 / np.pi + np.sqrt(4 / np.pi**2 - a * a / 4))
    for n in (199, 399, 799):
        g = Grid1D(0.0, 1.0, n)
        u = b * np.sin(np.pi * g.x) + a * np.sin(2 * np.pi * g.x)
        E, G = RevolutionModel(g), revolution_volume_constraint(g, np.pi)
        assert abs(multiplier(E, G, u)[0] - revolution_multiplier(g, u, np.pi)) <= 3.0 * g.h


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_projected_gradient_is_tangent(seed):
    g = Grid1D(0.0, 1.0, 49)
    rng = np.random.default_rng(seed)
    E = AllenCahnModel(g)
    G = StackedConstraint(mass_constraint(g), integral_constraint(g, "square", 0.01))
    u = random_field(g, rng)
    p = project_tangent(E, G, u)
    for grad in constraint_gradients(G, u):
        assert abs(g.inner(p, grad)) <= 1e-10 * (1 + g.norm(E.h_gradient(u)) * g.norm(grad))
    # projection onto a subspace cannot increase the norm
    assert g.norm(p) <= (1 + 1e-12) * g.norm(E.h_gradient(u))


def test_multiplier_reports_degenerate_gradients(small_grid):
    E = AllenCahnModel(small_grid)
    G = integral_constraint(small_grid, "square", 0.0)
    with pytest.raises(ConstraintDegeneracyError, match=r"hypothesis \(vi\)"):
        multiplier(E, G, small_grid.zeros())


def test_gram_matrix_of_mass_gradient(grid):
    grads = constraint_gradients(mass_constraint(grid), grid.zeros())
    npt.assert_allclose(gram_matrix(grid, grads), [[grid.n * grid.h]])


# -- retraction -----------------------------------------------------------------


@pytest.mark.parametrize("offset", [0.1, -0.1, 0.5])
def test_retract_reaches_constraint(small_cylinder, small_grid, offset):
    _, G = small_cylinder
    u = retract(G, np.full(small_grid.n, offset))
    assert abs(G.value(u)[0]) <= 1e-12 * (1 + np.pi)


def test_retract_is_identity_on_manifold(cylinder, grid):
    _, G = cylinder
    npt.assert_array_equal(retract(G, grid.zeros()), grid.zeros())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_retract_onto_sphere(seed):
    x = np.random.default_rng(seed).standard_normal(3)
    x /= np.linalg.norm(x)
    y = retract(SphereConstraint(3), x * 1.3)
    npt.assert_allclose(np.linalg.norm(y), 1.0, atol=1e-12)
    npt.assert_allclose(y, x, atol=1e-12)


# -- charts -----------------------------------------------------------------


def test_chart_bases_are_orthonormal(small_cylinder, small_grid):
    _, G = small_cylinder
    chart = build_chart(G, small_grid.zeros())
    gram = small_grid.h * np.vstack([chart.V0, chart.V1]) @ np.vstack([chart.V0, chart.V1]).T
    npt.assert_allclose(gram, np.eye(small_grid.n), atol=1e-12)
    npt.assert_allclose(chart.V0 @ constraint_gradients(G, small_grid.zeros()).T, 0.0, atol=1e-10)
    assert chart.dim == small_grid.n - 1 and chart.m == 1


def test_chart_normal_points_along_gradient(small_cylinder, small_grid):
    _, G = small_cylinder
    chart = build_chart(G, small_grid.zeros())
    assert np.all(chart.V1 > 0)


def test_chart_requires_point_on_manifold(small_cylinder, small_grid):
    _, G = small_cylinder
    with pytest.raises(ContractViolation):
        build_chart(G, np.full(small_grid.n, 0.1))


def test_chart_rejects_rank_deficient_constraint(small_grid):
    G = integral_constraint(small_grid, "square", 0.0)
    with pytest.raises(SurjectivityError, match=r"hypothesis \(vi\)"):
        build_chart(G, small_grid.zeros())


def test_sphere_chart_bases():
    chart = build_chart(SphereConstraint(3), NORTH)
    npt.assert_allclose(chart.V0, [[1, 0, 0], [0, 1, 0]], atol=1e-15)
    npt.assert_allclose(chart.V1, [[0, 0, 1]], atol=1e-15)


@pytest.mark.parametrize("omega", [[0.0, 0.0], [0.3, 0.0], [0.2, -0.1], [0.5, 0.6]])
def test_sphere_psi_closed_form(omega):
    G = SphereConstraint(3)
    chart = build_chart(G, NORTH)
    w = np.array(omega)
    expected = np.sqrt(1 - w @ w) - 1
    npt.assert_allclose(psi(chart, G, w), [expected], atol=1e-12)
    # psi'(w) = -w / sqrt(1 - |w|^2)
    npt.assert_allclose(psi_prime(chart, G, w), [-w / np.sqrt(1 - w @ w)], atol=1e-12)


def test_sphere_psi_value_quoted():
    G = SphereConstraint(3)
    chart = build_chart(G, NORTH)
    npt.assert_allclose(1 + psi(chart, G, [0.3, 0.0])[0], np.sqrt(0.91), rtol=1e-13)
    npt.assert_allclose(psi_prime(chart, G, [0.3, 0.0])[0, 0], -0.3 / np.sqrt(0.91), rtol=1e-12)


def test_chart_outside_domain_raises():
    G = SphereConstraint(3)
    chart = build_chart(G, NORTH)
    with pytest.raises(ChartDomainError):
        psi(chart, G, [1.5, 0.0])


def test_psi_vanishes_at_centre(small_cylinder, small_grid):
    _, G = small_cylinder
    chart = build_chart(G, small_grid.zeros())
    npt.assert_allclose(psi(chart, G, chart.omega_bar), [0.0], atol=1e-15)
    npt.assert_allclose(psi_prime(chart, G, chart.omega_bar), 0.0, atol=1e-14)


@pytest.mark.parametrize("radius", [1e-3, 1e-2, 1e-1])
def test_volume_chart_identities(small_cylinder, small_grid, radius):
    _, G = small_cylinder
    chart = build_chart(G, small_grid.zeros())
    w = np.random.default_rng(7).standard_normal(chart.dim)
    w *= radius / np.linalg.norm(w)
    a1, a2 = tangent_identity_check(chart, G, w)
    assert a1 <= 1e-6 and a2 <= 1e-6
    assert psi_prime_fd_error(chart, G, w) <= 1e-6
    # (id + psi') has singular values >= 1 for an orthogonal splitting
    assert phi_prime_singular_values(chart, G, w)[-1] >= 1 - 1e-12
    assert abs(G.value(phi(chart, G, w))[0]) <= 1e-12 * (1 + np.pi)


def test_phi_prime_rows_are_tangent(small_cylinder, small_grid):
    _, G = small_cylinder
    chart = build_chart(G, small_grid.zeros())
    w = 0.05 * np.random.default_rng(1).standard_normal(chart.dim) / np.sqrt(chart.dim)
    u = phi(chart, G, w)
    rows = phi_prime(chart, G, w)
    npt.assert_allclose(small_grid.h * rows @ constraint_gradients(G, u).T, 0.0, atol=1e-10)


# -- constraint-Hessian example --------------------------------------------------


@pytest.mark.parametrize("N", [1, 5, 12])
def test_example_chart_reproduces_graph(N):
    lam = lambda_weights(N)
    E, G = constraint_hessian_example_model(N, lam)
    chart = build_chart(G, np.zeros(N + 1))
    rng = np.random.default_rng(N)
    for _ in range(5):
        xp = 0.3 * rng.standard_normal(N)
        npt.assert_allclose(psi(chart, G, xp), [G.graph(xp)], atol=1e-10)
        npt.assert_allclose(pullback_energy(chart, E, G, xp), np.dot(lam, xp * xp), atol=1e-10)
        npt.assert_allclose(pullback_grad(chart, E, G, xp), 2 * lam * xp, atol=1e-10)


# -- second variation -----------------------------------------------------------


def test_allen_cahn_projected_spectrum(allen_cahn, grid):
    E, G = allen_cahn
    chart = build_chart(G, grid.zeros())
    values, _, kernel = hessian_spectrum(lagrangian_hessian(chart, E, G))
    # tangent fields have zero mean, so the lowest mode is sin(2 pi x)
    npt.assert_allclose(values[0], dirichlet_eigenvalue(grid, 2) - 1, rtol=1e-10)
    npt.assert_allclose(values[0], 38.47517074, rtol=1e-9)
    assert kernel == 0


def test_cylinder_projected_spectrum(cylinder, grid):
    E, G = cylinder
    chart = build_chart(G, grid.zeros())
    values, _, kernel = hessian_spectrum(lagrangian_hessian(chart, E, G))
    npt.assert_allclose(values[0], 2 * np.pi * (dirichlet_eigenvalue(grid, 2) - 1), rtol=1e-10)
    npt.assert_allclose(values[0], 241.74662749, rtol=1e-9)
    assert kernel == 0


@pytest.mark.parametrize("model", ["cylinder", "allen_cahn"])
def test_fd_pullback_hessian_matches_lagrangian(model, small_grid):
    if model == "cylinder":
        E, G = RevolutionModel(small_grid), revolution_volume_constraint(small_grid, np.pi)
    else:
        E, G = AllenCahnModel(small_grid), mass_constraint(small_grid)
    chart = build_chart(G, small_grid.zeros())
    H = pullback_hessian(chart, E, G)
    L = lagrangian_hessian(chart, E, G)
    npt.assert_allclose(H, L, atol=1e-6 * np.max(np.abs(L)))
    npt.assert_allclose(H, H.T)


def test_sphere_pullback_hessian():
    # F(w) = -sqrt(1 - |w|^2) has Hessian identity at 0
    E, G = HeightEnergy(3), SphereConstraint(3)
    chart = build_chart(G, NORTH)
    npt.assert_allclose(pullback_hessian(chart, E, G), np.eye(2), atol=1e-7)
    npt.assert_allclose(lagrangian_hessian(chart, E, G), np.eye(2), atol=1e-14)


def test_hessian_spectrum_counts_kernel():
    _, _, kernel = hessian_spectrum(np.diag([2.0, 1.0, 1e-9, 0.0]))
    assert kernel == 2


# -- two-sided chart comparison ------------------------------------------------


def test_lemma42_bounds_hold_near_cylinder(small_cylinder, small_grid):
    E, G = small_cylinder
    chart = build_chart(G, small_grid.zeros())
    rng = np.random.default_rng(3)
    samples = [r * d / np.linalg.norm(d)
               for r, d in zip(np.logspace(-4, -1, 20), rng.standard_normal((20, chart.dim)))]
    rep = lemma42_comparison(chart, E, G, samples)
    assert rep.ok, rep.violations
    assert rep.sup_phi_prime >= 1.0
    assert np.all(rep.E_norm <= 2 * rep.F_norm * (1 + 1e-9) + 1e-13)
