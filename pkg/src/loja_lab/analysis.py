"""Critical points, empirical Lojasiewicz exponents and constant blow-up sweeps."""
import logging
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (ChartDomainError, ContractViolation, DomainError, IllConditionedFit,
                     NumericalFailure, RetractionError, SearchFailure)
from .flow import FlowOptions, run_flow
from .geometry import (build_chart, hessian_spectrum, lagrangian_hessian,
                       phi, phi_prime, project_tangent, pullback_energy, pullback_grad, pullback_hessian,
                       retract)
from .models import SeqQuadModel, constraint_hessian_example_model, lambda_weights
from .numerics import linfit

log = logging.getLogger(__name__)

MIN_FIT_SAMPLES = 8
GAP_FLOOR = 1e-14


@dataclass(frozen=True)
class LojaFit:
    """Fitted law |E - E(u_bar)|^(1-theta) <= C ||grad||."""

    theta: float
    C: float
    slope: float
    r2: float
    n_samples: int
    window: tuple
    in_range_flag: bool

    def to_record(self):
        return {
            "theta": self.theta,
            "C": self.C,
            "slope": self.slope,
            "r2": self.r2,
            "n_samples": self.n_samples,
            "window": [self.window[0], self.window[1]],
            "in_range_flag": self.in_range_flag,
        }


# ---------------------------------------------------------------------------
# critical points


def _tol_reached(E, G, u, tol):
    pn = E.space.norm(project_tangent(E, G, u))
    return pn, pn <= tol * (1.0 + E.space.norm(E.h_gradient(u)))


def find_critical(E, G, u0, flow_opts=None, flow_max_steps=20000, tol=1e-12, max_newton=100):
    """Flow towards a constrained critical point, then polish with chart Newton steps.

    The flow stage stops at projected-gradient norm 1e-6 or after ``flow_max_steps``;
    slow directions (tiny weights) are left to the Newton stage.
    """
    if flow_opts is None:
        flow_opts = FlowOptions(tol_pgrad=1e-6, t_max=1e6, record_every=10**9)
    trace = run_flow(E, G, u0, flow_opts, max_steps=flow_max_steps)
    if trace.status == "failed":
        raise SearchFailure(f"flow stage failed ({trace.reason})", last_iterate=trace.u)
    u = trace.u
    pn, done = _tol_reached(E, G, u, tol)
    for it in range(max_newton):
        if done:
            return u
        try:
            chart = build_chart(G, u)
            g = pullback_grad(chart, E, G, chart.omega_bar)
            H = lagrangian_hessian(chart, E, G)
            step = -np.linalg.lstsq(H, g, rcond=None)[0]
        except (ContractViolation, NumericalFailure, np.linalg.LinAlgError) as exc:
            raise SearchFailure(f"Newton model failed: {exc}", last_iterate=u) from exc
        alpha = 1.0
        while alpha > 1e-8:
            try:
                cand = phi(chart, G, alpha * step)
                if E.admissible(cand):
                    cand = retract(G, cand)
                    cpn, cdone = _tol_reached(E, G, cand, tol)
                    if cpn < pn or cdone:
                        break
            except (ChartDomainError, DomainError, RetractionError):
                pass
            alpha *= 0.5
        else:
            raise SearchFailure(
                f"no damped Newton step reduced the projected gradient ({pn:.3e})",
                last_iterate=u)
        u, pn, done = cand, cpn, cdone
        log.debug("newton %d: alpha %.3g, |P grad E| %.3e", it, alpha, pn)
    if done:
        return u
    raise SearchFailure(f"Newton polish stalled at |P grad E| = {pn:.3e}", last_iterate=u)


# ---------------------------------------------------------------------------
# sampling and fitting


def sample_near(E, G, u_bar, radius, count, seed, chart=None):
    """Points of M near u_bar: random tangent directions, log-uniform amplitudes, retracted."""
    if not radius > 0 or int(count) != count or count < 1:
        raise ContractViolation("need radius > 0 and a positive integer count")
    if seed is None:
        raise ContractViolation("sampling needs an explicit seed")
    chart = chart or build_chart(G, u_bar)
    rng = np.random.default_rng(seed)
    space = E.space
    out, skipped = [], 0
    for _ in range(int(count)):
        d = rng.standard_normal(chart.dim)
        d /= np.linalg.norm(d)
        r = radius * 10.0 ** rng.uniform(-2.0, 0.0)
        try:
            u = retract(G, chart.u_bar + (r * d) @ chart.V0)
        except (RetractionError, DomainError):
            skipped += 1
            continue
        if not E.admissible(u) or space.norm(u - chart.u_bar) > 1.01 * radius:
            skipped += 1
            continue
        out.append(u)
    if skipped:
        log.info("sample_near skipped %d of %d candidates", skipped, count)
    if len(out) < count / 2:
        raise NumericalFailure(f"only {len(out)} of {count} samples reached M")
    return out


def sample_chart_coordinates(chart, radius, count, seed):
    """Chart coordinates with random directions and log-uniform norms in [radius/100, radius]."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(int(count)):
        d = rng.standard_normal(chart.dim)
        out.append(radius * 10.0 ** rng.uniform(-2.0, 0.0) * d / np.linalg.norm(d))
    return out


def gradient_norms(E, G, samples, gradient="projected"):
    if gradient == "projected":
        return np.array([E.space.norm(project_tangent(E, G, u)) for u in samples])
    if gradient == "full":
        return np.array([E.space.norm(E.h_gradient(u)) for u in samples])
    raise ContractViolation(f"gradient must be 'projected' or 'full', got {gradient!r}")


def fit_exponent(E, G, u_bar, samples, gradient="projected"):
    """Regress log ||grad|| on log |E - E(u_bar)|; theta = 1 - slope.

    ``gradient='full'`` uses the unprojected gradient, giving the plain inequality
    for comparison with the refined one.
    """
    e_bar = E.energy(u_bar)
    gaps = np.abs(np.array([E.energy(u) for u in samples]) - e_bar)
    norms = gradient_norms(E, G, samples, gradient)
    keep = gaps > GAP_FLOOR
    gaps, norms = gaps[keep], norms[keep]
    if gaps.size < MIN_FIT_SAMPLES:
        raise IllConditionedFit(
            f"need at least {MIN_FIT_SAMPLES} samples with energy gap > {GAP_FLOOR}, "
            f"got {gaps.size}")
    if gaps.max() < 10.0 * gaps.min():
        raise IllConditionedFit(
            f"energy gaps span only [{gaps.min():.3e}, {gaps.max():.3e}]; need a factor 10")
    live = norms > GAP_FLOOR
    if np.count_nonzero(live) < 3:
        raise IllConditionedFit("gradient vanishes on almost every sample")
    slope, _, r2 = linfit(np.log(gaps[live]), np.log(norms[live]))
    theta = 1.0 - slope
    C = float(np.max(gaps[live] ** (1.0 - theta) / norms[live]))
    return LojaFit(theta=float(theta), C=C, slope=float(slope), r2=float(r2),
                   n_samples=int(gaps.size), window=(float(gaps.min()), float(gaps.max())),
                   in_range_flag=bool(0.0 < theta <= 0.5 + 1e-9))


def sample_constant(E, G, u_bar, samples, theta, gradient="projected"):
    """max |E - E(u_bar)|^(1-theta) / ||grad|| over samples at a fixed theta."""
    e_bar = E.energy(u_bar)
    gaps = np.abs(np.array([E.energy(u) for u in samples]) - e_bar)
    norms = gradient_norms(E, G, samples, gradient)
    live = norms > GAP_FLOOR
    if not np.any(live):
        raise IllConditionedFit("gradient vanishes on every sample")
    return float(np.max(gaps[live] ** (1.0 - theta) / norms[live]))


# ---------------------------------------------------------------------------
# constants and blow-up


def _probe_directions(dim, seed, n_random):
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n_random, dim))
    R /= np.linalg.norm(R, axis=1, keepdims=True)
    return np.vstack([np.eye(dim), R])


def _amplitudes(sigma, count=7):
    return sigma * np.logspace(-3.0, 0.0, count)


def _max_ratio(evaluate, dim, theta, sigma, seed, n_random):
    """Max of |E|^(1-theta) / ||grad|| over probe points; ``evaluate`` returns both."""
    if not 0.0 < theta <= 0.5:
        raise ContractViolation(f"theta must lie in (0, 1/2], got {theta}")
    if not sigma > 0:
        raise ContractViolation(f"sigma must be positive, got {sigma}")
    best = 0.0
    for d in _probe_directions(dim, seed, n_random):
        for t in _amplitudes(sigma):
            e, gn = evaluate(t * d)
            if gn > GAP_FLOOR:
                best = max(best, abs(e) ** (1.0 - theta) / gn)
    return best


def best_constant(model, theta, sigma, seed=0, n_random=200):
    """Smallest C valid on the probe set: max |E|^(1-theta) / ||grad E|| near the origin.

    Probes are the coordinate directions plus ``n_random`` seeded unit directions,
    each at amplitudes up to ``sigma``.
    """
    e0 = model.energy(model.space.zeros())

    def evaluate(x):
        return model.energy(x) - e0, np.linalg.norm(model.h_gradient(x))

    return _max_ratio(evaluate, model.space.n, theta, sigma, seed, n_random)


def pullback_constant(E, G, theta, sigma, u_bar=None, seed=0, n_random=200):
    """Same probe as :func:`best_constant` for F = E o phi in a chart at u_bar."""
    u_bar = E.space.zeros() if u_bar is None else u_bar
    chart = build_chart(G, u_bar)
    f0 = pullback_energy(chart, E, G, chart.omega_bar)

    def evaluate(w):
        u = phi(chart, G, w)
        dF = chart.space.h * phi_prime(chart, G, w, u) @ E.h_gradient(u)
        return E.energy(u) - f0, np.linalg.norm(dF)

    return _max_ratio(evaluate, chart.dim, theta, sigma, seed, n_random)


def constraint_example_for(N, lambda_rule):
    """Constraint-Hessian example whose chart pullback is the seq-quad energy of size N.

    With weights lambda/2 the pullback is sum (lambda_n/2) x'_n^2 = 1/2 sum lambda_n x'_n^2.
    """
    return constraint_hessian_example_model(N, 0.5 * lambda_weights(N, lambda_rule))


def sweep_constant(N, lambda_rule="geometric", theta=0.5, sigma=1.0, route="direct", seed=0,
                   n_random=200):
    """Best constant for truncation size N, directly or through the chart pullback."""
    if route == "direct":
        return best_constant(SeqQuadModel.from_rule(N, lambda_rule), theta, sigma, seed, n_random)
    if route == "chart":
        E, G = constraint_example_for(N, lambda_rule)
        return pullback_constant(E, G, theta, sigma, seed=seed, n_random=n_random)
    raise ContractViolation(f"route must be 'direct' or 'chart', got {route!r}")


def blowup_sweep(Ns, lambda_rule="geometric", theta=0.5, sigma=1.0, route="direct", seed=0,
                 n_random=200, workers=1):
    """Rows (N, C, ratio) of best constants; ratio is C_N over the previous row's C.

    Rows are independent, so ``workers > 1`` evaluates them in a thread pool; the
    result does not depend on the worker count.
    """
    Ns = [int(N) for N in Ns]
    if not Ns:
        raise ContractViolation("Ns must be non-empty")
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ContractViolation(f"Ns must be strictly ascending, got {Ns}")
    if route not in ("direct", "chart"):
        raise ContractViolation(f"route must be 'direct' or 'chart', got {route!r}")

    def one(N):
        return sweep_constant(N, lambda_rule, theta, sigma, route, seed, n_random)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            Cs = list(pool.map(one, Ns))
    else:
        Cs = [one(N) for N in Ns]
    return [{"N": N, "C": C, "ratio": None if i == 0 else C / Cs[i - 1]}
            for i, (N, C) in enumerate(zip(Ns, Cs))]


def closed_form_constant(N, lambda_rule="geometric"):
    """(2 lambda_N)^(-1/2), the theta = 1/2 constant of the truncated quadratic."""
    return float((2.0 * lambda_weights(N, lambda_rule)[-1]) ** -0.5)


# ---------------------------------------------------------------------------
# second variation

HessianReport = namedtuple("HessianReport", ["eigenvalues", "kernel_dim", "index_zero_analog"])


def hessian_report(chart, E, G, u_bar=None, kernel_rtol=1e-6, method="exact"):
    """Spectrum of F'' at the chart centre and its kernel dimension.

    ``method='exact'`` uses the Lagrangian second variation, ``'fd'`` finite
    differences of the pullback gradient.
    """
    if u_bar is not None and E.space.norm(np.asarray(u_bar) - chart.u_bar) > 0:
        chart = build_chart(G, u_bar)
    if method == "exact":
        H = lagrangian_hessian(chart, E, G)
    elif method == "fd":
        H = pullback_hessian(chart, E, G)
    else:
        raise ContractViolation(f"method must be 'exact' or 'fd', got {method!r}")
    values, _, kernel_dim = hessian_spectrum(H, kernel_rtol)
    square_symmetric = H.shape[0] == H.shape[1] and np.allclose(H, H.T, rtol=0, atol=0)
    return HessianReport(values, kernel_dim, bool(square_symmetric))


def constrained_residual(G, u):
    return float(np.max(np.abs(G.value(u)))) if G.m else 0.0

