"""Discrete L2 calculus on uniform 1-D grids and small dense linear algebra.

Fields are plain 1-D ``numpy`` arrays holding the values at the interior nodes of
a :class:`Grid1D`; boundary values are identically zero (homogeneous Dirichlet
data). Sequence-space problems use :class:`EuclideanSpace`, which exposes the same
interface with unit weight.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, NumericalFailure


def _as_field(space, u, name="u"):
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.shape[0] != space.n:
        raise ContractViolation(
            f"{name} has shape {u.shape}, expected ({space.n},) for {space!r}")
    return u


@dataclass(frozen=True)
class Grid1D:
    """Uniform mesh of [a, b] with ``n`` interior nodes and spacing (b-a)/(n+1)."""

    a: float
    b: float
    n: int
    h: float = field(init=False)

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise ContractViolation(f"need a < b, got a={self.a}, b={self.b}")
        if int(self.n) != self.n or self.n < 3:
            raise ContractViolation(f"need an integer n >= 3, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "h", (self.b - self.a) / (self.n + 1))

    @property
    def x(self):
        return self.a + self.h * np.arange(1, self.n + 1)

    @property
    def length(self):
        return self.b - self.a

    def sample(self, f):
        return np.asarray(f(self.x), dtype=float) * np.ones(self.n)

    def zeros(self):
        return np.zeros(self.n)

    def check(self, u, name="u"):
        u = _as_field(self, u, name)
        if not np.all(np.isfinite(u)):
            raise ContractViolation(f"{name} has non-finite entries")
        return u

    def inner(self, u, v):
        u = _as_field(self, u, "u")
        v = _as_field(self, v, "v")
        return self.h * float(np.dot(u, v))

    def norm(self, u):
        return np.sqrt(self.inner(u, u))


@dataclass(frozen=True)
class EuclideanSpace:
    """R^n with the standard inner product; ``h`` is the (unit) quadrature weight."""

    n: int
    h: float = field(default=1.0, init=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ContractViolation(f"need a positive dimension, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    def zeros(self):
        return np.zeros(self.n)

    def check(self, u, name="u"):
        u = _as_field(self, u, name)
        if not np.all(np.isfinite(u)):
            raise ContractViolation(f"{name} has non-finite entries")
        return u

    def inner(self, u, v):
        return float(np.dot(_as_field(self, u, "u"), _as_field(self, v, "v")))

    def norm(self, u):
        return np.sqrt(self.inner(u, u))


def inner(grid, u, v):
    """Discrete L2 pairing ``h * sum(u*v)``."""
    return grid.inner(u, v)


def _padded(grid, u):
    u = _as_field(grid, u)
    return np.concatenate(([0.0], u, [0.0]))


def d1(grid, u):
    """Central first difference of the zero-extended field."""
    w = _padded(grid, u)
    return (w[2:] - w[:-2]) / (2.0 * grid.h)


def d2(grid, u):
    """Three-point Laplacian with homogeneous Dirichlet ghosts."""
    w = _padded(grid, u)
    return (w[2:] - 2.0 * w[1:-1] + w[:-2]) / grid.h**2


def edge_difference(grid, u):
    """Forward differences on the n+1 cells, (u_{j+1} - u_j)/h."""
    return np.diff(_padded(grid, u)) / grid.h


def edge_average(grid, u):
    """Cell-midpoint averages (u_j + u_{j+1})/2 of the zero-extended field."""
    w = _padded(grid, u)
    return 0.5 * (w[1:] + w[:-1])


def edge_difference_T(grid, q):
    """Adjoint of :func:`edge_difference` w.r.t. the cell and node L2 pairings."""
    q = np.asarray(q, dtype=float)
    return -(q[1:] - q[:-1]) / grid.h


def edge_average_T(grid, q):
    q = np.asarray(q, dtype=float)
    return 0.5 * (q[1:] + q[:-1])


def dirichlet_laplacian_matrix(grid):
    """Dense matrix of ``-d2`` (symmetric positive definite)."""
    n, h = grid.n, grid.h
    return (2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)) / h**2


def dirichlet_eigenvalue(grid, k=1):
    """k-th eigenvalue of ``-d2``: (2 - 2 cos(k pi h/L)) / h^2."""
    return (2.0 - 2.0 * np.cos(k * np.pi * grid.h / grid.length)) / grid.h**2


def _as_matrix(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ContractViolation(f"expected a non-empty 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ContractViolation("matrix has non-finite entries")
    return M


def svd_small(M, full=False):
    """Dense SVD ``M = U @ diag(s) @ V.T`` with descending singular values.

    With ``full=True`` the returned ``V`` is square, so its trailing columns span
    the kernel of ``M``.
    """
    M = _as_matrix(M)
    if M.size > 10**6:
        raise ContractViolation(f"matrix with {M.size} entries is outside the small dense regime")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=full)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}") from exc
    k = s.size
    err = np.linalg.norm(M - (U[:, :k] * s) @ Vt[:k])
    if err > 1e-10 * (1.0 + np.linalg.norm(M)):
        raise NumericalFailure(f"SVD reconstruction error {err:.3e}")
    return U, s, Vt.T


def sym_eigs(M, rtol=1e-10):
    """Ascending eigenpairs of a symmetric matrix."""
    M = _as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ContractViolation(f"matrix must be square, got {M.shape}")
    scale = max(np.max(np.abs(M)), np.finfo(float).tiny)
    asym = np.max(np.abs(M - M.T))
    if asym > rtol * scale:
        raise ContractViolation(f"matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    try:
        values, vectors = np.linalg.eigh(0.5 * (M + M.T))
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver did not converge: {exc}") from exc
    return values, vectors


def linfit(x, y):
    """Least-squares line through (x, y); returns (slope, intercept, r2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ContractViolation("x and y must be 1-D sequences of equal length")
    if x.size < 3:
        raise ContractViolation(f"need at least 3 points, got {x.size}")
    xc = x - x.mean()
    sxx = float(np.dot(xc, xc))
    if sxx <= 1e-300 or np.ptp(x) == 0.0:
        raise ContractViolation("x values are all equal")
    yc = y - y.mean()
    slope = float(np.dot(xc, yc)) / sxx
    intercept = float(y.mean() - slope * x.mean())
    syy = float(np.dot(yc, yc))
    if syy <= y.size * (1e-14 * float(np.max(np.abs(y)))) ** 2:
        # y is constant up to rounding
        r2 = 1.0
    else:
        resid = yc - slope * xc
        r2 = min(1.0, max(0.0, 1.0 - float(np.dot(resid, resid)) / syy))
    return slope, intercept, r2
