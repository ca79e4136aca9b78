"""Command-line experiment runner.

Exit codes: 0 success (flow converged), 2 flow stopped at t_max, 3 numerical or
check failure, 64 usage or configuration error.
"""
import argparse
import dataclasses
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from .analysis import (best_constant, blowup_sweep, find_critical, fit_exponent,
                       hessian_report, sample_chart_coordinates, sample_constant, sample_near)
from .checks import grad_check
from .config import (ConfigError, build_problem, config_hash, flow_options, initial_field,
                     load_config, require_seed)
from .errors import LojaLabError
from .flow import run_flow
from .geometry import (build_chart, lemma42_comparison, phi_prime_singular_values, psi,
                       psi_prime_fd_error, tangent_identity_check)
from .svg import trace_svg

EXIT_OK, EXIT_TMAX, EXIT_FAIL, EXIT_USAGE = 0, 2, 3, 64
THREADS_ENV = "LOJA_LAB_THREADS"

log = logging.getLogger("loja_lab")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    return x


def _dumps(obj):
    return json.dumps(_plain(obj), sort_keys=True)


class Outputs:
    """Collects files written into the output directory."""

    def __init__(self, directory):
        self.dir = directory
        self.files = []
        os.makedirs(directory, exist_ok=True)

    def write(self, name, text):
        with open(os.path.join(self.dir, name), "w", newline="") as fh:
            fh.write(text)
        self.files.append(name)

    def jsonl(self, name, records):
        self.write(name, "".join(_dumps(r) + "\n" for r in records))

    def json(self, name, obj):
        self.write(name, json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n")


def _threads():
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError(THREADS_ENV, f"must be a positive integer, got {raw!r}")
    return n


# ---------------------------------------------------------------------------
# commands


def cmd_flow(cfg, out, threads):
    E, G = build_problem(cfg)
    trace = run_flow(E, G, initial_field(cfg, E), flow_options(cfg))
    out.write("trace.csv", trace.to_csv())
    if cfg["output"]["emit_svg"]:
        out.write("trace.svg", trace_svg(trace))
    print(f"{trace.terminal_status}: steps {trace.step[-1]}, t {trace.t[-1]:.6g}, "
          f"energy {trace.energy[-1]:.12g}, pgrad_norm {trace.pgrad_norm[-1]:.3e}")
    if trace.status == "converged":
        return EXIT_OK
    if trace.status == "t_max_reached":
        return EXIT_TMAX
    print(f"flow failed: {trace.reason}", file=sys.stderr)
    return EXIT_FAIL


def _base_point(cfg, E, G):
    if cfg["analysis"]["base"] == "origin":
        return E.space.zeros()
    opts = dataclasses.replace(flow_options(cfg), tol_pgrad=1e-6, record_every=10**9)
    return find_critical(E, G, initial_field(cfg, E), flow_opts=opts)


def cmd_loja_fit(cfg, out, threads):
    seed = require_seed(cfg)
    a = cfg["analysis"]
    E, G = build_problem(cfg)
    u_bar = _base_point(cfg, E, G)
    chart = build_chart(G, u_bar)
    samples = sample_near(E, G, u_bar, a["radius"], a["count"], seed, chart=chart)
    fit = fit_exponent(E, G, u_bar, samples)
    plain = fit_exponent(E, G, u_bar, samples, gradient="full")
    constants = []
    for theta in a["theta_grid"]:
        if cfg["model"] == "seq_quad":
            C, source = best_constant(E, theta, a["sigma"], seed=seed), "probe"
        else:
            C, source = sample_constant(E, G, u_bar, samples, theta), "samples"
        constants.append({"theta": theta, "C": C, "source": source})
    out.jsonl("fit.jsonl", [fit.to_record()])
    out.jsonl("fit_plain.jsonl", [plain.to_record()])
    out.jsonl("constants.jsonl", constants)
    print(f"theta {fit.theta:.6f} (plain {plain.theta:.6f}), C {fit.C:.6g}, r2 {fit.r2:.6f}, "
          f"n_samples {fit.n_samples}")
    return EXIT_OK


def cmd_counterexample(cfg, out, threads):
    x = cfg["counterexample"]
    rows = blowup_sweep(x["Ns"], x["lambda_rule"], x["theta"], x["sigma"], x["route"],
                        seed=x["seed"], workers=threads)
    lines = ["N,C,ratio"]
    for r in rows:
        ratio = "" if r["ratio"] is None else f"{r['ratio']:.17g}"
        lines.append(f"{r['N']},{r['C']:.17g},{ratio}")
    out.write("sweep.csv", "\n".join(lines) + "\n")
    out.jsonl("sweep.jsonl", rows)
    for r in rows:
        print(f"N {r['N']:4d}  C {r['C']:.10g}" + ("" if r["ratio"] is None
                                                   else f"  ratio {r['ratio']:.10g}"))
    return EXIT_OK


def _check(results, name, value, tol, upper=True):
    ok = bool(value <= tol) if upper else bool(value >= tol)
    results[name] = {"value": value, "tol": tol, "pass": ok}


def cmd_chart_check(cfg, out, threads):
    seed = require_seed(cfg)
    a = cfg["analysis"]
    E, G = build_problem(cfg)
    u_bar = _base_point(cfg, E, G)
    chart = build_chart(G, u_bar)
    omegas = [chart.omega_bar] + sample_chart_coordinates(chart, a["radius"], a["count"], seed)
    results = {}
    angles = [tangent_identity_check(chart, G, w) for w in omegas]
    _check(results, "tangent_angle_kernel_vs_image", max(t[0] for t in angles), 1e-6)
    _check(results, "tangent_angle_kernel_vs_curves", max(t[1] for t in angles), 1e-6)
    _check(results, "psi_prime_fd_error", max(psi_prime_fd_error(chart, G, w) for w in omegas),
           1e-6)
    smin = min(float(phi_prime_singular_values(chart, G, w)[-1]) for w in omegas)
    _check(results, "min_singular_value_id_plus_psi_prime", smin, 0.5, upper=False)
    if cfg["model"] == "sphere":
        err = max(abs(psi(chart, G, w)[0] - (np.sqrt(1.0 - w @ w) - 1.0)) for w in omegas)
        _check(results, "psi_closed_form_error", float(err), 1e-10)
    if cfg["model"] == "constraint_hessian_example":
        err = max(abs(psi(chart, G, w)[0] - G.graph(w)) for w in omegas)
        _check(results, "psi_closed_form_error", float(err), 1e-10)
    lemma = lemma42_comparison(chart, E, G, omegas)
    results["lemma42_violations"] = {"value": len(lemma.violations), "tol": 0,
                                     "pass": lemma.ok}
    rep = hessian_report(chart, E, G, kernel_rtol=a["kernel_rtol"])
    report = {
        "checks": results,
        "hessian": {"lowest_eigenvalues": rep.eigenvalues[:5], "kernel_dim": rep.kernel_dim,
                    "index_zero_analog": rep.index_zero_analog},
        "singular_values": chart.singular_values,
        "samples": len(omegas),
    }
    out.json("chart_check.json", report)
    failed = [k for k, v in results.items() if not v["pass"]]
    for k, v in results.items():
        print(f"{'PASS' if v['pass'] else 'FAIL'} {k}: {v['value']:.3e} (tol {v['tol']})")
    print(f"kernel_dim {rep.kernel_dim}, lowest eigenvalue {rep.eigenvalues[0]:.10g}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_grad_check(cfg, out, threads):
    seed = require_seed(cfg)
    E, G = build_problem(cfg)
    rep = grad_check(E, G, pairs=cfg["analysis"]["count"], seed=seed)
    out.json("grad_check.json", dict(rep.to_record(), failures=rep.failures[:20]))
    print(f"{'PASS' if rep.ok else 'FAIL'} {rep.pairs} pairs: gradient {rep.max_gradient_error:.3e}, "
          f"asymmetry {rep.max_asymmetry:.3e}, Hessian {rep.max_hessian_fd_error:.3e}, "
          f"constraint {rep.max_constraint_error:.3e}")
    return EXIT_OK if rep.ok else EXIT_FAIL


COMMANDS = {
    "flow": cmd_flow,
    "loja-fit": cmd_loja_fit,
    "counterexample": cmd_counterexample,
    "chart-check": cmd_chart_check,
    "grad-check": cmd_grad_check,
}


def build_parser():
    p = _Parser(prog="loja-lab", description="Constrained gradient-flow and gradient-inequality experiments.")
    p.add_argument("--version", action="version", version=f"loja-lab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, help="JSON experiment config")
        s.add_argument("--out", help="output directory (overrides output.dir)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        cfg = load_config(args.config)
        threads = _threads()
        out_dir = args.out or cfg["output"]["dir"]
        if out_dir is None:
            raise ConfigError("--out", "no output directory given (use --out or output.dir)")
        out = Outputs(out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    message = ""
    try:
        code = COMMANDS[args.command](cfg, out, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code, message = EXIT_USAGE, str(exc)
    except (LojaLabError, ValueError, ArithmeticError) as exc:
        print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        code, message = EXIT_FAIL, f"{type(exc).__name__}: {exc}"
    manifest = {
        "command": args.command,
        "config_sha256": config_hash(args.config),
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - start, 6),
        "threads": threads,
        "outputs": sorted(out.files),
        "exit_code": code,
        "message": message,
    }
    out.json("manifest.json", manifest)
    return code


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
