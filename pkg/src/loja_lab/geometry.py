"""Lagrange multipliers, tangent projection, retraction and implicit-function charts.

Everything here works with respect to the inner product of the model's space
(discrete L2 on a grid, Euclidean in sequence space). Internally, matrices are
formed in scaled coordinates ``sqrt(h) * u`` in which that inner product is the
Euclidean one; returned bases are orthonormal for ``space.inner``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import subspace_angles

from .errors import (ChartDegeneracyError, ChartDomainError, ConstraintDegeneracyError,
                     ContractViolation, RetractionError, SurjectivityError)
from .numerics import svd_small, sym_eigs


def constraint_gradients(G, u):
    grads = np.asarray(G.h_gradients(u), dtype=float)
    return grads.reshape(G.m, -1)


def gram_matrix(space, grads):
    return space.h * grads @ grads.T


def _solve_multiplier(space, g, grads, gram_tol=1e-12):
    gram = gram_matrix(space, grads)
    evals = gram[0] if grads.shape[0] == 1 else np.linalg.eigvalsh(gram)
    if evals[0] <= gram_tol * max(1.0, evals[-1]):
        raise ConstraintDegeneracyError(
            f"constraint gradients are linearly dependent (smallest Gram eigenvalue "
            f"{evals[0]:.3e}); hypothesis (vi) fails at this point")
    beta = space.h * grads @ g
    if grads.shape[0] == 1:
        return beta / gram[0]
    return np.linalg.solve(gram, beta)


def multiplier(E, G, u, gram_tol=1e-12):
    """Coefficients lambda with grad E - sum lambda_k grad G_k orthogonal to all grad G_k.

    For m = 1 this is <grad G, grad E> / |grad G|^2; for m > 1 the Gram system is solved.
    """
    if G.m == 0:
        return np.zeros(0)
    return _solve_multiplier(E.space, E.h_gradient(u), constraint_gradients(G, u), gram_tol)


def project_tangent(E, G, u):
    """P(u) grad E(u): the orthogonal projection onto ker G'(u)."""
    g = E.h_gradient(u)
    if G.m == 0:
        return g
    grads = constraint_gradients(G, u)
    return g - _solve_multiplier(E.space, g, grads) @ grads


def _residual_tol(G, tol):
    return tol * (1.0 + G.scale)


@dataclass(frozen=True)
class RetractInfo:
    iterations: int
    residual: float


def retract(G, u, tol=1e-12, max_iter=50, return_info=False):
    """Newton projection onto {G = 0} along the span of the constraint gradients."""
    space = G.space
    u = space.check(u).copy()
    if G.m == 0:
        return (u, RetractInfo(0, 0.0)) if return_info else u
    target = _residual_tol(G, tol)
    for it in range(max_iter + 1):
        r = G.value(u)
        res = float(np.max(np.abs(r)))
        if not np.isfinite(res):
            raise RetractionError("constraint residual became non-finite", residual=res)
        if res <= target:
            return (u, RetractInfo(it, res)) if return_info else u
        if it == max_iter:
            break
        grads = constraint_gradients(G, u)
        gram = gram_matrix(space, grads)
        try:
            c = np.linalg.solve(gram, r)
        except np.linalg.LinAlgError:
            raise RetractionError("singular constraint Jacobian during retraction",
                                  residual=res) from None
        u = u - c @ grads
    raise RetractionError(
        f"retraction did not converge in {max_iter} iterations (residual {res:.3e})",
        residual=res)


# ---------------------------------------------------------------------------
# implicit-function chart


@dataclass(frozen=True)
class ChartData:
    """Graph chart of M = {G = 0} centred at ``u_bar``.

    ``V0`` (k x n) and ``V1`` (m x n) hold inner-orthonormal basis fields of
    ker G'(u_bar) and of its orthogonal complement. The chart is
    ``phi(omega) = u_bar + omega @ V0 + psi(omega) @ V1`` with ``omega_bar = 0``.
    """

    space: object
    u_bar: np.ndarray
    V0: np.ndarray
    V1: np.ndarray
    singular_values: np.ndarray
    newton_tol: float
    newton_max_iter: int
    psi_trust: float

    @property
    def dim(self):
        return self.V0.shape[0]

    @property
    def m(self):
        return self.V1.shape[0]

    @property
    def omega_bar(self):
        return np.zeros(self.dim)


def _polar(A):
    W, _, Zt = np.linalg.svd(A)
    return W @ Zt


def _canonical_kernel_basis(K0):
    """Orthonormal basis of span(K0) closest to a set of coordinate vectors."""
    n, k = K0.shape
    if k == 0:
        return K0
    weight = np.sum(K0 * K0, axis=1)
    idx = np.sort(np.argsort(-weight, kind="stable")[:k])
    return K0 @ _polar(K0[idx, :].T)


def build_chart(G, u_bar, kernel_rtol=1e-10, newton_tol=1e-12, newton_max_iter=50,
                base_tol=1e-10):
    space = G.space
    u_bar = space.check(u_bar, "u_bar").copy()
    n, m = space.n, G.m
    r = G.value(u_bar)
    if m and np.max(np.abs(r)) > base_tol * (1.0 + G.scale):
        raise ContractViolation(
            f"base point is not on M (|G(u_bar)| = {np.max(np.abs(r)):.3e})")
    sq = np.sqrt(space.h)
    if m == 0:
        return ChartData(space, u_bar, np.eye(n) / sq, np.zeros((0, n)), np.zeros(0),
                         _residual_tol(G, newton_tol), newton_max_iter, np.inf)
    if m >= n:
        raise SurjectivityError(f"codimension {m} leaves no tangent directions in dimension {n}")
    B = sq * constraint_gradients(G, u_bar)
    _, s, V = svd_small(B, full=True)
    rank = int(np.sum(s > kernel_rtol * s[0])) if s[0] > 0 else 0
    if rank < m:
        raise SurjectivityError(
            f"G'(u_bar) has rank {rank} < m = {m}: surjectivity hypothesis (vi) fails "
            f"(singular values {s})")
    K1, K0 = V[:, :m], V[:, m:]
    Bn = B / np.linalg.norm(B, axis=1, keepdims=True)
    K1 = K1 @ _polar(K1.T @ Bn.T)
    K0 = _canonical_kernel_basis(K0)
    trust = 10.0 * (s[0] / s[m - 1]) * (1.0 + space.norm(u_bar))
    return ChartData(space, u_bar, K0.T / sq, K1.T / sq, s,
                     _residual_tol(G, newton_tol), newton_max_iter, trust)


def _dG_dv(chart, G, u, basis):
    return chart.space.h * constraint_gradients(G, u) @ basis.T


def _embed(chart, omega, psi_coeffs):
    return chart.u_bar + omega @ chart.V0 + psi_coeffs @ chart.V1


def _omega(chart, omega):
    omega = np.asarray(omega, dtype=float).reshape(-1)
    if omega.shape != (chart.dim,):
        raise ContractViolation(f"omega must have {chart.dim} coefficients, got {omega.shape}")
    return omega


def psi(chart, G, omega, start=None):
    """Coefficients over V1 solving G(u_bar + omega + psi(omega)) = 0 by Newton."""
    omega = _omega(chart, omega)
    if chart.m == 0:
        return np.zeros(0)
    y = np.zeros(chart.m) if start is None else np.array(start, dtype=float)
    last_step = np.inf
    for _ in range(chart.newton_max_iter):
        u = _embed(chart, omega, y)
        r = G.value(u)
        res = float(np.max(np.abs(r)))
        if not np.isfinite(res):
            break
        if res <= chart.newton_tol and last_step <= 1e-14 * (1.0 + np.linalg.norm(y)):
            return y
        A = _dG_dv(chart, G, u, chart.V1)
        try:
            step = np.linalg.solve(A, r)
        except np.linalg.LinAlgError:
            raise ChartDegeneracyError("dG/dv1 is singular along the chart") from None
        y = y - step
        last_step = float(np.linalg.norm(step))
        if last_step == 0.0 and res <= chart.newton_tol:
            return y
        if np.linalg.norm(y) > chart.psi_trust:
            raise ChartDomainError(
                f"|psi| = {np.linalg.norm(y):.3e} left the chart trust region "
                f"({chart.psi_trust:.3e}); omega is outside the chart domain")
    u = _embed(chart, omega, y)
    res = float(np.max(np.abs(G.value(u))))
    if res <= chart.newton_tol:
        return y
    raise ChartDomainError(
        f"Newton for psi did not converge in {chart.newton_max_iter} iterations "
        f"(residual {res:.3e})")


def phi(chart, G, omega, start=None):
    omega = _omega(chart, omega)
    return _embed(chart, omega, psi(chart, G, omega, start))


def psi_prime(chart, G, omega, u=None, sing_tol=1e-10):
    """Matrix of psi'(omega) from V0 coefficients to V1 coefficients.

    psi'(omega) = -(dG/dv1(phi(omega)))^{-1} G'(phi(omega)) restricted to V0.
    """
    omega = _omega(chart, omega)
    if chart.m == 0:
        return np.zeros((0, chart.dim))
    if u is None:
        u = phi(chart, G, omega)
    A = _dG_dv(chart, G, u, chart.V1)
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= sing_tol:
        raise ChartDegeneracyError(
            f"dG/dv1 is (nearly) singular at phi(omega): smallest singular value {s[-1]:.3e}")
    return -np.linalg.solve(A, _dG_dv(chart, G, u, chart.V0))


def psi_prime_fd_error(chart, G, omega, step=1e-5):
    """max |psi'(omega) - central differences of psi| relative to 1 + |psi'(omega)|."""
    omega = _omega(chart, omega)
    if chart.m == 0:
        return 0.0
    y0 = psi(chart, G, omega)
    exact = psi_prime(chart, G, omega)
    fd = np.empty_like(exact)
    for i in range(chart.dim):
        e = np.zeros(chart.dim)
        e[i] = step
        fd[:, i] = (psi(chart, G, omega + e, y0) - psi(chart, G, omega - e, y0)) / (2 * step)
    return float(np.max(np.abs(exact - fd)) / (1.0 + np.max(np.abs(exact))))


def phi_prime(chart, G, omega, u=None):
    """Fields phi'(omega) e_i as the rows of a (k x n) array."""
    return chart.V0 + psi_prime(chart, G, omega, u).T @ chart.V1


def phi_prime_singular_values(chart, G, omega):
    """Singular values of phi'(omega) between the inner-orthonormal coordinates."""
    P = psi_prime(chart, G, omega)
    return np.linalg.svd(np.vstack([np.eye(chart.dim), P]), compute_uv=False)


def tangent_identity_check(chart, G, omega, fd_step=1e-5, kernel_rtol=1e-10):
    """Largest principal angles checking T_uM = ker G'(u) = Im phi'(omega).

    ``angle1`` compares the numerical kernel of G'(u) with the image of the
    analytic derivative id + psi'(omega); ``angle2`` compares the kernel with the
    velocities of the chart curves t -> phi(omega + t e_i), which span T_uM.
    """
    omega = _omega(chart, omega)
    space = chart.space
    sq = np.sqrt(space.h)
    u = phi(chart, G, omega)
    if chart.m:
        _, s, V = svd_small(sq * constraint_gradients(G, u), full=True)
        kernel = V[:, int(np.sum(s > kernel_rtol * s[0])):]
    else:
        kernel = np.eye(space.n)
    image = (sq * phi_prime(chart, G, omega, u)).T
    vel = np.empty((chart.dim, space.n))
    y0 = psi(chart, G, omega)
    for i in range(chart.dim):
        e = np.zeros(chart.dim)
        e[i] = fd_step
        vel[i] = (phi(chart, G, omega + e, y0) - phi(chart, G, omega - e, y0)) / (2 * fd_step)
    angle1 = float(np.max(subspace_angles(kernel, image)))
    angle2 = float(np.max(subspace_angles(kernel, (sq * vel).T)))
    return angle1, angle2


def pullback_energy(chart, E, G, omega):
    return E.energy(phi(chart, G, omega))


def pullback_grad(chart, E, G, omega):
    """Coefficients of F'(omega) over the orthonormal V0 basis, F = E o phi."""
    omega = _omega(chart, omega)
    u = phi(chart, G, omega)
    return chart.space.h * phi_prime(chart, G, omega, u) @ E.h_gradient(u)


def pullback_hessian(chart, E, G, omega_bar=None, step=None, sym_rtol=1e-6):
    """Central finite differences of :func:`pullback_grad`, symmetrised.

    The default step is 1e-4 (1 + |omega_bar|) in sequence space. On a grid the
    orthonormal V0 fields are localised with height ~ h^-1/2 and slope ~ h^-3/2,
    so the step is scaled by h^(3/2) to keep the perturbed slopes small.
    """
    w = chart.omega_bar if omega_bar is None else _omega(chart, omega_bar)
    k = chart.dim
    if step is None:
        step = 1e-4 * (1.0 + np.linalg.norm(w)) * min(1.0, chart.space.h) ** 1.5
    H = np.empty((k, k))
    for i in range(k):
        e = np.zeros(k)
        e[i] = step
        H[:, i] = (pullback_grad(chart, E, G, w + e) - pullback_grad(chart, E, G, w - e)) / (2 * step)
    scale = max(float(np.max(np.abs(H))), np.finfo(float).tiny)
    asym = float(np.max(np.abs(H - H.T)))
    if asym > sym_rtol * scale:
        raise ContractViolation(f"finite-difference Hessian is not symmetric ({asym / scale:.3e})")
    return 0.5 * (H + H.T)


def lagrangian_hessian(chart, E, G, lam=None):
    """Matrix of V0^T (E'' - sum lam_k G_k'') V0 at the chart centre.

    At a constrained critical point this is F''(omega_bar); elsewhere it is the
    Newton model used by the critical-point search.
    """
    u = chart.u_bar
    if lam is None:
        lam = multiplier(E, G, u)
    cols = []
    for t in chart.V0:
        hv = E.hessian_apply(u, t)
        for k in range(G.m):
            hv = hv - lam[k] * G.hessian_apply(u, k, t)
        cols.append(hv)
    H = chart.space.h * chart.V0 @ np.array(cols).T
    return 0.5 * (H + H.T)


@dataclass
class Lemma42Report:
    """Per-sample norms for the two-sided chart comparison."""

    F_norm: np.ndarray
    E_norm: np.ndarray
    phi_norm: np.ndarray
    sup_phi_prime: float
    violations_upper: list
    violations_lower: list

    @property
    def violations(self):
        return sorted(set(self.violations_upper) | set(self.violations_lower))

    @property
    def ok(self):
        return not self.violations


def lemma42_comparison(chart, E, G, samples, rtol=1e-9, atol=1e-13):
    """Check ||F'(w)|| <= ||E'(u)||_T* sup||phi'|| and ||E'(u)||_T* <= 2 ||F'(w)||.

    In the Hilbert setting the dual norm on the tangent space is the norm of the
    projected gradient P(u) grad E(u).
    """
    samples = [_omega(chart, w) for w in samples]
    F_norm, E_norm, phi_norm = [], [], []
    for w in samples:
        u = phi(chart, G, w)
        F_norm.append(np.linalg.norm(chart.space.h * phi_prime(chart, G, w, u) @ E.h_gradient(u)))
        E_norm.append(chart.space.norm(project_tangent(E, G, u)))
        phi_norm.append(phi_prime_singular_values(chart, G, w)[0])
    F_norm, E_norm, phi_norm = map(np.asarray, (F_norm, E_norm, phi_norm))
    sup_phi = float(np.max(phi_norm)) if len(samples) else 1.0
    upper = [i for i in range(len(samples))
             if F_norm[i] > E_norm[i] * sup_phi * (1 + rtol) + atol]
    lower = [i for i in range(len(samples))
             if E_norm[i] > 2.0 * F_norm[i] * (1 + rtol) + atol]
    return Lemma42Report(F_norm, E_norm, phi_norm, sup_phi, upper, lower)


def hessian_spectrum(H, kernel_rtol=1e-6):
    values, vectors = sym_eigs(H)
    radius = float(np.max(np.abs(values))) if values.size else 0.0
    kernel_dim = int(np.sum(np.abs(values) < kernel_rtol * radius)) if radius > 0 else values.size
    return values, vectors, kernel_dim
