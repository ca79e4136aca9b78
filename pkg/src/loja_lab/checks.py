"""Finite-difference checks of energies and constraints on random smooth fields."""
from dataclasses import dataclass, field

import numpy as np

from .numerics import Grid1D


def random_field(space, rng, amplitude=0.1, modes=5):
    """Smooth random field: a short random sine series on a grid, Gaussian in R^n."""
    if isinstance(space, Grid1D):
        k = np.arange(1, modes + 1)
        c = rng.standard_normal(modes) / k
        xi = (space.x - space.a) / space.length
        return amplitude * (c @ np.sin(np.pi * np.outer(k, xi))) / np.sqrt(modes)
    return amplitude * rng.standard_normal(space.n)


def directional_fd(fun, u, v, eps):
    return (fun(u + eps * v) - fun(u - eps * v)) / (2.0 * eps)


def gradient_error(E, u, v, eps=1e-5):
    """|<grad E(u), v> - central difference| relative to 1 + |E(u)|."""
    exact = E.space.inner(E.h_gradient(u), v)
    return abs(exact - directional_fd(E.energy, u, v, eps)) / (1.0 + abs(E.energy(u)))


def hessian_asymmetry(E, u, v, w):
    a = E.space.inner(E.hessian_apply(u, v), w)
    b = E.space.inner(v, E.hessian_apply(u, w))
    return abs(a - b) / max(1.0, abs(a), abs(b))


def hessian_fd_error(E, u, v, eps=1e-5):
    exact = E.hessian_apply(u, v)
    fd = directional_fd(E.h_gradient, u, v, eps)
    return E.space.norm(exact - fd) / max(1.0, E.space.norm(exact))


def constraint_gradient_error(G, u, v, eps=1e-5):
    grads = G.h_gradients(u)
    fd = directional_fd(G.value, u, v, eps)
    scale = 1.0 + np.max(np.abs(G.value(u)) + G.scale)
    return max((abs(G.space.inner(grads[k], v) - fd[k]) / scale for k in range(G.m)), default=0.0)


@dataclass
class GradCheckReport:
    pairs: int
    max_gradient_error: float = 0.0
    max_asymmetry: float = 0.0
    max_hessian_fd_error: float = 0.0
    max_constraint_error: float = 0.0
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures

    def to_record(self):
        return {
            "pairs": self.pairs,
            "max_gradient_error": self.max_gradient_error,
            "max_asymmetry": self.max_asymmetry,
            "max_hessian_fd_error": self.max_hessian_fd_error,
            "max_constraint_error": self.max_constraint_error,
            "ok": self.ok,
        }


def grad_check(E, G=None, pairs=100, seed=0, eps=1e-5, grad_tol=1e-6, sym_tol=1e-9,
               hess_tol=1e-5):
    """Run the exact-gradient, Hessian-symmetry and Hessian-consistency checks."""
    rng = np.random.default_rng(seed)
    rep = GradCheckReport(pairs)
    for i in range(pairs):
        u = random_field(E.space, rng)
        v, w = random_field(E.space, rng, 1.0), random_field(E.space, rng, 1.0)
        ge = gradient_error(E, u, v, eps)
        asym = hessian_asymmetry(E, u, v, w)
        he = hessian_fd_error(E, u, v, eps)
        rep.max_gradient_error = max(rep.max_gradient_error, ge)
        rep.max_asymmetry = max(rep.max_asymmetry, asym)
        rep.max_hessian_fd_error = max(rep.max_hessian_fd_error, he)
        if ge > grad_tol:
            rep.failures.append(f"pair {i}: gradient error {ge:.3e}")
        if asym > sym_tol:
            rep.failures.append(f"pair {i}: Hessian asymmetry {asym:.3e}")
        if he > hess_tol:
            rep.failures.append(f"pair {i}: Hessian vs gradient differences {he:.3e}")
        if G is not None and G.m:
            ce = constraint_gradient_error(G, u, v, eps)
            rep.max_constraint_error = max(rep.max_constraint_error, ce)
            if ce > grad_tol:
                rep.failures.append(f"pair {i}: constraint gradient error {ce:.3e}")
    return rep
