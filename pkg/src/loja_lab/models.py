"""Energies and constraints with exact discrete gradients and Hessians.

Grid energies are cell based: with cell slopes ``p_j = (u_{j+1} - u_j)/h`` and
cell midpoints ``m_j = (u_j + u_{j+1})/2`` (zero Dirichlet ghosts),

    E(u) = h * sum_j f(m_j, p_j) + h * (sum_i q(u_i) + q(0)),

the last term being the trapezoid rule for a pointwise potential ``q``. The
L2-gradient of this discrete functional is a three-point stencil and is exact,
so finite-difference checks hold to rounding and continuum formulas become
convergence tests.
"""
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DomainError
from .numerics import (EuclideanSpace, Grid1D, edge_average, edge_average_T,
                       edge_difference, edge_difference_T)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ScalarFunction:
    """Analytic scalar function handle with its first two derivatives."""

    name: str
    f: object
    df: object
    ddf: object

    def __call__(self, s):
        return self.f(s)


NAMED_FUNCTIONS = {
    "identity": ScalarFunction("identity", lambda s: s, lambda s: np.ones_like(s),
                               lambda s: np.zeros_like(s)),
    "square": ScalarFunction("square", lambda s: s**2, lambda s: 2.0 * s,
                             lambda s: 2.0 * np.ones_like(s)),
    "cube": ScalarFunction("cube", lambda s: s**3, lambda s: 3.0 * s**2, lambda s: 6.0 * s),
    "exp": ScalarFunction("exp", np.exp, np.exp, np.exp),
}


def named_function(name):
    try:
        return NAMED_FUNCTIONS[name]
    except KeyError:
        raise ContractViolation(
            f"unknown function {name!r}; choose from {sorted(NAMED_FUNCTIONS)}") from None


# ---------------------------------------------------------------------------
# grid energies


class GridEnergy:
    """Base class for cell-based energies on a :class:`Grid1D`.

    Subclasses provide ``density(m, p)`` returning ``(f, f_m, f_p)``,
    ``density_hessian(m, p)`` returning ``(f_mm, f_mp, f_pp)`` and optionally a
    pointwise potential ``potential``/``dpotential``/``ddpotential``.
    """

    name = "grid-energy"
    has_potential = False

    def __init__(self, grid):
        if not isinstance(grid, Grid1D):
            raise ContractViolation("grid energies need a Grid1D")
        self.grid = grid

    @property
    def space(self):
        return self.grid

    def admissible(self, u):
        return True

    def _check(self, u):
        return self.grid.check(u)

    def potential(self, s):
        return np.zeros_like(s)

    def dpotential(self, s):
        return np.zeros_like(s)

    def ddpotential(self, s):
        return np.zeros_like(s)

    def energy(self, u):
        u = self._check(u)
        g = self.grid
        m, p = edge_average(g, u), edge_difference(g, u)
        f = self.density(m, p)[0]
        total = np.sum(f)
        if self.has_potential:
            total += np.sum(self.potential(u)) + float(self.potential(np.zeros(1))[0])
        return g.h * float(total)

    def h_gradient(self, u):
        u = self._check(u)
        g = self.grid
        m, p = edge_average(g, u), edge_difference(g, u)
        _, f_m, f_p = self.density(m, p)
        grad = edge_average_T(g, f_m) + edge_difference_T(g, f_p)
        if self.has_potential:
            grad = grad + self.dpotential(u)
        return grad

    def hessian_apply(self, u, v):
        u = self._check(u)
        v = self.grid.check(v, "v")
        g = self.grid
        m, p = edge_average(g, u), edge_difference(g, u)
        f_mm, f_mp, f_pp = self.density_hessian(m, p)
        av, dv = edge_average(g, v), edge_difference(g, v)
        out = (edge_average_T(g, f_mm * av + f_mp * dv)
               + edge_difference_T(g, f_mp * av + f_pp * dv))
        if self.has_potential:
            out = out + self.ddpotential(u) * v
        return out

    def amax(self, u):
        """Coefficient of the second-order term, for the explicit time-step cap."""
        return 1.0


class GraphAreaModel(GridEnergy):
    """Length of the graph of ``u``: integral of sqrt(1 + u'^2)."""

    name = "graph_area"

    def density(self, m, p):
        r = np.sqrt(1.0 + p * p)
        return r, np.zeros_like(p), p / r

    def density_hessian(self, m, p):
        z = np.zeros_like(p)
        return z, z, (1.0 + p * p) ** -1.5

    @staticmethod
    def continuum_gradient(u, du, ddu):
        return -ddu / (1.0 + du**2) ** 1.5


class AllenCahnModel(GridEnergy):
    """Ginzburg-Landau energy with eps = 1 and W(s) = (1 - s^2)^2 / 4."""

    name = "allen_cahn"
    has_potential = True

    def density(self, m, p):
        return 0.5 * p * p, np.zeros_like(p), p

    def density_hessian(self, m, p):
        z = np.zeros_like(p)
        return z, z, np.ones_like(p)

    def potential(self, s):
        w = 1.0 - s * s
        return 0.25 * w * w

    def dpotential(self, s):
        return s * s * s - s

    def ddpotential(self, s):
        return 3.0 * s * s - 1.0

    @staticmethod
    def continuum_gradient(u, du, ddu):
        return -ddu + u**3 - u


class RevolutionModel(GridEnergy):
    """Area of the surface obtained by rotating the graph of 1 + u about the axis.

    Admissible fields satisfy 1 + u > 0 on the closed interval.
    """

    name = "revolution"

    def admissible(self, u):
        u = np.asarray(u, dtype=float)
        return bool(np.all(np.isfinite(u)) and np.min(1.0 + u) > 0.0)

    def _check(self, u):
        u = self.grid.check(u)
        bad = np.flatnonzero(1.0 + u <= 0.0)
        if bad.size:
            i = int(bad[0])
            raise DomainError(
                f"1 + u <= 0 at interior node {i} (x = {self.grid.x[i]:.6g}, u = {u[i]:.6g})",
                node=i)
        return u

    def density(self, m, p):
        r = np.sqrt(1.0 + p * p)
        return TWO_PI * (1.0 + m) * r, TWO_PI * r, TWO_PI * (1.0 + m) * p / r

    def density_hessian(self, m, p):
        r2 = 1.0 + p * p
        return (np.zeros_like(p), TWO_PI * p / np.sqrt(r2), TWO_PI * (1.0 + m) * r2**-1.5)

    def amax(self, u):
        return TWO_PI * max(1.0, float(np.max(1.0 + np.asarray(u))))

    @staticmethod
    def continuum_gradient(u, du, ddu):
        # Euler-Lagrange operator of 2*pi*(1+u)*sqrt(1+u'^2):
        # 2*pi*[1/sqrt(1+u'^2) - (1+u)*(u'/sqrt(1+u'^2))'].
        r2 = 1.0 + du**2
        return TWO_PI * (1.0 / np.sqrt(r2) - (1.0 + u) * ddu / r2**1.5)


def graph_area_model(grid):
    return GraphAreaModel(grid)


def allen_cahn_model(grid):
    return AllenCahnModel(grid)


def revolution_model(grid):
    return RevolutionModel(grid)


def revolution_multiplier(grid, u, nu):
    """Closed-form Lagrange multiplier of the revolution problem on M.

    Integration by parts of <grad E, grad G> / ||grad G||^2 using G(u) = 0 gives
    E(u)/nu - (pi/nu) * int (1+u)/sqrt(1+u'^2) - (pi/nu) * [u'/sqrt(1+u'^2)]_a^b,
    evaluated here with the same cell quadrature as the discrete energy.
    """
    u = grid.check(u)
    m, p = edge_average(grid, u), edge_difference(grid, u)
    r = np.sqrt(1.0 + p * p)
    area = TWO_PI * grid.h * float(np.sum((1.0 + m) * r))
    weighted = grid.h * float(np.sum((1.0 + m) / r))
    boundary = p[-1] / r[-1] - p[0] / r[0]
    return area / nu - np.pi / nu * weighted - np.pi / nu * boundary


# ---------------------------------------------------------------------------
# sequence-space energies


class EuclideanEnergy:
    """Energy on R^n with the Euclidean inner product."""

    name = "euclidean"

    def __init__(self, dim):
        self.space = EuclideanSpace(dim)

    def admissible(self, u):
        return True

    def amax(self, u):
        return 1.0


class DiagonalQuadratic(EuclideanEnergy):
    """E(x) = 1/2 sum w_k x_k^2 with non-negative weights."""

    name = "diagonal_quadratic"

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ContractViolation("weights must be a non-empty finite non-negative sequence")
        super().__init__(w.size)
        self.weights = w

    def energy(self, x):
        x = self.space.check(x)
        return 0.5 * float(np.dot(self.weights, x * x))

    def h_gradient(self, x):
        return self.weights * self.space.check(x)

    def hessian_apply(self, x, v):
        self.space.check(x)
        return self.weights * self.space.check(v, "v")

    def amax(self, u):
        return float(np.max(self.weights))


LAMBDA_RULES = ("geometric", "inverse_square")


def lambda_weights(N, rule="geometric"):
    """l1 weight profile lambda_k, k = 1..N: 2^-k (geometric) or k^-2."""
    if int(N) != N or N < 1:
        raise ContractViolation(f"N must be a positive integer, got {N}")
    k = np.arange(1, int(N) + 1, dtype=float)
    if rule == "geometric":
        return 2.0**-k
    if rule == "inverse_square":
        return k**-2
    raise ContractViolation(f"unknown lambda rule {rule!r}; choose from {LAMBDA_RULES}")


class SeqQuadModel(DiagonalQuadratic):
    """Truncated l1-weighted quadratic 1/2 sum lambda_k x_k^2 on R^N."""

    name = "seq_quad"

    def __init__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if lam.ndim != 1 or np.any(lam <= 0):
            raise ContractViolation("lambda weights must be strictly positive")
        super().__init__(lam)

    @classmethod
    def from_rule(cls, N, rule="geometric"):
        return cls(lambda_weights(N, rule))

    @property
    def N(self):
        return self.space.n

    @property
    def lam(self):
        return self.weights


def seq_quad_energy(model, x):
    return model.energy(x)


def seq_quad_gradient(model, x):
    return model.h_gradient(x)


class MonomialModel(EuclideanEnergy):
    """E(x) = sum x_i^(2p); degenerate at the origin for p > 1."""

    name = "monomial"

    def __init__(self, p, dim=1):
        if int(p) != p or p < 1:
            raise ContractViolation(f"p must be a positive integer, got {p}")
        super().__init__(dim)
        self.p = int(p)

    def energy(self, x):
        x = self.space.check(x)
        return float(np.sum(x ** (2 * self.p)))

    def h_gradient(self, x):
        x = self.space.check(x)
        return 2 * self.p * x ** (2 * self.p - 1)

    def hessian_apply(self, x, v):
        x = self.space.check(x)
        return 2 * self.p * (2 * self.p - 1) * x ** (2 * self.p - 2) * self.space.check(v, "v")

    def amax(self, x):
        return max(1.0, 2 * self.p * (2 * self.p - 1) * float(np.max(np.abs(x))) ** (2 * self.p - 2))


class HeightEnergy(EuclideanEnergy):
    """E(x) = -x_last; on the unit sphere its minimum is the north pole."""

    name = "height"

    def energy(self, x):
        return -float(self.space.check(x)[-1])

    def h_gradient(self, x):
        self.space.check(x)
        g = np.zeros(self.space.n)
        g[-1] = -1.0
        return g

    def hessian_apply(self, x, v):
        self.space.check(v, "v")
        return np.zeros(self.space.n)


class ConstraintHessianExampleEnergy(EuclideanEnergy):
    """E(x) = x_0 + sum |x'_n|^2 on R x R^N (coordinate 0 is x_0)."""

    name = "constraint_hessian_example"

    def energy(self, x):
        x = self.space.check(x)
        return float(x[0] + np.dot(x[1:], x[1:]))

    def h_gradient(self, x):
        x = self.space.check(x)
        return np.concatenate(([1.0], 2.0 * x[1:]))

    def hessian_apply(self, x, v):
        v = self.space.check(v, "v")
        return np.concatenate(([0.0], 2.0 * v[1:]))

    def amax(self, x):
        return 2.0


# ---------------------------------------------------------------------------
# constraints


class Constraint:
    """G: U -> R^m. ``value`` returns shape (m,), ``h_gradients`` shape (m, n)."""

    m = 1
    scale = 0.0

    def hessian_apply(self, u, k, v):
        raise NotImplementedError


class NoConstraint(Constraint):
    m = 0

    def __init__(self, space):
        self.space = space

    def value(self, u):
        self.space.check(u)
        return np.zeros(0)

    def h_gradients(self, u):
        self.space.check(u)
        return np.zeros((0, self.space.n))

    def hessian_apply(self, u, k, v):
        raise ContractViolation("the empty constraint has no components")


class IntegralConstraint(Constraint):
    """G(u) = int g(u) dx - target, trapezoid rule with the zero boundary values."""

    def __init__(self, grid, g, target=0.0):
        if not isinstance(grid, Grid1D):
            raise ContractViolation("integral constraints need a Grid1D")
        if isinstance(g, str):
            g = named_function(g)
        self.grid = grid
        self.g = g
        self.target = float(target)
        self.scale = abs(self.target)

    @property
    def space(self):
        return self.grid

    def value(self, u):
        u = self.grid.check(u)
        total = np.sum(self.g.f(u)) + float(self.g.f(np.zeros(1))[0])
        return np.array([self.grid.h * float(total) - self.target])

    def h_gradients(self, u):
        u = self.grid.check(u)
        return np.broadcast_to(self.g.df(u), u.shape)[None, :]

    def hessian_apply(self, u, k, v):
        if k != 0:
            raise ContractViolation(f"constraint has one component, got k={k}")
        u = self.grid.check(u)
        return self.g.ddf(u) * self.grid.check(v, "v")


def integral_constraint(grid, g, target=0.0):
    return IntegralConstraint(grid, g, target)


def mass_constraint(grid, target=0.0):
    return IntegralConstraint(grid, NAMED_FUNCTIONS["identity"], target)


_VOLUME_DENSITY = ScalarFunction(
    "revolution_volume",
    lambda s: np.pi * (1.0 + s) ** 2,
    lambda s: TWO_PI * (1.0 + s),
    lambda s: TWO_PI * np.ones_like(s),
)


def revolution_volume_constraint(grid, nu):
    """G(u) = pi * int (1+u)^2 dx - nu."""
    c = IntegralConstraint(grid, _VOLUME_DENSITY, nu)
    c.nu = float(nu)
    return c


class SphereConstraint(Constraint):
    """G(x) = |x|^2 - r^2 on R^n."""

    def __init__(self, dim=3, radius=1.0):
        self.space = EuclideanSpace(dim)
        self.radius = float(radius)
        self.scale = self.radius**2

    def value(self, x):
        x = self.space.check(x)
        return np.array([float(np.dot(x, x)) - self.radius**2])

    def h_gradients(self, x):
        return 2.0 * self.space.check(x)[None, :]

    def hessian_apply(self, x, k, v):
        return 2.0 * self.space.check(v, "v")


class ConstraintHessianExampleConstraint(Constraint):
    """G(x) = x_0 - sum (lambda_n - 1) |x'_n|^2 on R x R^N."""

    def __init__(self, lam):
        lam = np.asarray(lam, dtype=float)
        self.lam = lam
        self.space = EuclideanSpace(lam.size + 1)

    def value(self, x):
        x = self.space.check(x)
        return np.array([x[0] - float(np.dot(self.lam - 1.0, x[1:] ** 2))])

    def h_gradients(self, x):
        x = self.space.check(x)
        return np.concatenate(([1.0], -2.0 * (self.lam - 1.0) * x[1:]))[None, :]

    def hessian_apply(self, x, k, v):
        v = self.space.check(v, "v")
        return np.concatenate(([0.0], -2.0 * (self.lam - 1.0) * v[1:]))

    def graph(self, xp):
        """Closed-form graph function psi(x') = sum (lambda_n - 1) x'_n^2."""
        return float(np.dot(self.lam - 1.0, np.asarray(xp, dtype=float) ** 2))


def constraint_hessian_example_model(N, lam):
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size != N:
        raise ContractViolation(f"need {N} weights, got shape {lam.shape}")
    return ConstraintHessianExampleEnergy(N + 1), ConstraintHessianExampleConstraint(lam)


class StackedConstraint(Constraint):
    """Several constraints on the same space stacked into one map to R^m."""

    def __init__(self, *parts):
        if not parts:
            raise ContractViolation("need at least one constraint")
        self.parts = parts
        self.space = parts[0].space
        self.m = sum(p.m for p in parts)
        self.scale = max(p.scale for p in parts)

    def value(self, u):
        return np.concatenate([p.value(u) for p in self.parts])

    def h_gradients(self, u):
        return np.vstack([p.h_gradients(u) for p in self.parts])

    def hessian_apply(self, u, k, v):
        for p in self.parts:
            if k < p.m:
                return p.hessian_apply(u, k, v)
            k -= p.m
        raise ContractViolation("constraint component out of range")
