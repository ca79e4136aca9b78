"""Explicit projected gradient flow  du/dt = -(grad E - sum lambda_k grad G_k)  on M."""
import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, DomainError, RetractionError, StepRejected
from .geometry import project_tangent, retract
from .numerics import linfit

log = logging.getLogger(__name__)


@dataclass
class FlowOptions:
    dt_max: float = 1e-3
    cfl_coeff: float = 0.2
    tol_pgrad: float = 1e-8
    t_max: float = 1.0
    retract_every: int = 1
    record_every: int = 100
    dt_min: float = 1e-12
    retract_tol: float = 1e-12
    keep_snapshots: bool = False

    def __post_init__(self):
        for name in ("dt_max", "cfl_coeff", "tol_pgrad", "t_max", "dt_min", "retract_tol"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ContractViolation(f"flow option {name} must be positive, got {v}")
        for name in ("retract_every", "record_every"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ContractViolation(f"flow option {name} must be an integer >= 1, got {v}")


@dataclass
class FlowTrace:
    m: int
    rows: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    status: str = "running"
    reason: str = ""
    u: np.ndarray = None

    @property
    def terminal_status(self):
        return f"failed({self.reason})" if self.status == "failed" else self.status

    def _col(self, i):
        return np.array([r[i] for r in self.rows])

    @property
    def step(self):
        return self._col(0).astype(int)

    @property
    def t(self):
        return self._col(1)

    @property
    def energy(self):
        return self._col(2)

    @property
    def residuals(self):
        return np.array([r[3:3 + self.m] for r in self.rows]).reshape(len(self.rows), self.m)

    @property
    def pgrad_norm(self):
        return self._col(3 + self.m)

    def header(self):
        return ["step", "t", "energy"] + [f"constraint_{k}" for k in range(self.m)] + ["pgrad_norm"]

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for r in self.rows:
            w.writerow([str(int(r[0]))] + [f"{x:.17g}" for x in r[1:]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def check_invariants(self, energy_slack=1e-12, residual_tol=1e-8, scale=0.0):
        """Return a list of violated trace invariants (empty when all hold)."""
        problems = []
        t, e = self.t, self.energy
        if np.any(np.diff(t) <= 0):
            problems.append("t is not strictly increasing")
        rise = np.diff(e) - energy_slack * (1.0 + np.abs(e[:-1]))
        if np.any(rise > 0):
            problems.append(f"energy increased by up to {np.max(np.diff(e)):.3e}")
        if self.m and np.max(np.abs(self.residuals)) > residual_tol * (1.0 + scale):
            problems.append(f"constraint residual {np.max(np.abs(self.residuals)):.3e}")
        return problems


def time_step(E, u, opts):
    h = E.space.h
    amax = max(float(E.amax(u)), np.finfo(float).tiny)
    return min(opts.dt_max, opts.cfl_coeff * h * h / amax)


def step(E, G, u, dt, pgrad=None, do_retract=True, retract_tol=1e-12):
    """One explicit Euler step along the projected gradient, then retraction."""
    if not dt > 0:
        raise ContractViolation(f"dt must be positive, got {dt}")
    if pgrad is None:
        pgrad = project_tangent(E, G, u)
    v = u - dt * pgrad
    if not E.admissible(v):
        raise StepRejected(f"step of size {dt:.3e} left the admissible set")
    if do_retract:
        v = retract(G, v, tol=retract_tol)
        if not E.admissible(v):
            raise StepRejected(f"retraction after step {dt:.3e} left the admissible set")
    return v


def run_flow(E, G, u0, opts=None, max_steps=None):
    """Integrate the projected flow until the projected gradient drops below tolerance."""
    opts = opts or FlowOptions()
    space = E.space
    u = retract(G, space.check(u0, "u0"), tol=opts.retract_tol)
    if not E.admissible(u):
        raise DomainError("initial field is not admissible")
    trace = FlowTrace(m=G.m)
    t, n = 0.0, 0
    last_recorded = -1

    def record(pn):
        nonlocal last_recorded
        trace.rows.append((n, t, E.energy(u), *G.value(u), pn))
        if opts.keep_snapshots:
            trace.snapshots[n] = u.copy()
        last_recorded = n

    while True:
        pg = project_tangent(E, G, u)
        pn = space.norm(pg)
        terminal = None
        if not np.isfinite(pn):
            terminal = ("failed", "non-finite projected gradient")
        elif pn <= opts.tol_pgrad:
            terminal = ("converged", "")
        elif t >= opts.t_max * (1 - 1e-14) or (max_steps is not None and n >= max_steps):
            terminal = ("t_max_reached", "")
        if terminal or n % opts.record_every == 0:
            record(pn)
        if terminal:
            trace.status, trace.reason = terminal
            break
        dt = min(time_step(E, u, opts), opts.t_max - t)
        do_retract = (n + 1) % opts.retract_every == 0
        while True:
            try:
                u_new = step(E, G, u, dt, pgrad=pg, do_retract=do_retract,
                             retract_tol=opts.retract_tol)
                break
            except (StepRejected, DomainError, RetractionError) as exc:
                dt *= 0.5
                log.debug("step %d rejected (%s); dt -> %.3e", n, exc, dt)
                if dt < opts.dt_min:
                    u_new = None
                    break
        if u_new is None:
            trace.status, trace.reason = "failed", "stiffness"
            if last_recorded != n:
                record(pn)
            break
        u = u_new
        t += dt
        n += 1
    trace.u = u
    return trace


def energy_decay_rate(trace, e_bar, window=None, floor=1e-9):
    """Exponential rate r of E(u(t)) - E(u_bar) ~ exp(-r t).

    The default window is the last decade above ``floor * (1 + |e_bar|)``.
    """
    gap = trace.energy - e_bar
    if window is None:
        lo = floor * (1.0 + abs(e_bar))
        window = (lo, 10.0 * lo)
    sel = (gap >= window[0]) & (gap <= window[1])
    if np.count_nonzero(sel) < 3:
        raise ContractViolation(
            f"only {np.count_nonzero(sel)} trace rows with energy gap in {window}")
    slope, _, _ = linfit(trace.t[sel], np.log(gap[sel]))
    return -slope
