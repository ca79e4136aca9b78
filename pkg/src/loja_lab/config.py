"""Experiment configuration: one JSON document, unknown fields rejected.

Validation errors are :class:`ConfigError` and name the offending field as a dotted
path, e.g. ``grid.n``.
"""
import copy
import hashlib
import json
import math

import numpy as np

from .analysis import constraint_example_for
from .errors import ContractViolation
from .flow import FlowOptions
from .models import (LAMBDA_RULES, NAMED_FUNCTIONS, AllenCahnModel, GraphAreaModel,
                     HeightEnergy, MonomialModel, NoConstraint, RevolutionModel, SeqQuadModel,
                     SphereConstraint, integral_constraint,
                     mass_constraint, revolution_volume_constraint)
from .numerics import Grid1D


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


GRID_MODELS = ("revolution", "graph_area", "allen_cahn")
SEQUENCE_MODELS = ("seq_quad", "constraint_hessian_example", "sphere", "monomial")
MODELS = GRID_MODELS + SEQUENCE_MODELS

# section -> {field: (kind, default)}; default None means optional with no value.
SCHEMA = {
    "grid": {"a": ("real", 0.0), "b": ("real", 1.0), "n": ("int", 199)},
    "constraint": {"kind": ("str", None), "g": ("str", None), "target": ("real", 0.0),
                   "nu": ("real", None)},
    "sequence": {"N": ("int", 10), "lambda_rule": ("str", "geometric"), "p": ("int", 2),
                 "dim": ("int", 3)},
    "initial": {"kind": ("str", None), "amplitude": ("real", 1e-2), "mode": ("int", 2),
                "values": ("reals", None)},
    "flow": {"dt_max": ("real", 1e-3), "cfl_coeff": ("real", 0.2), "tol_pgrad": ("real", 1e-8),
             "t_max": ("real", 10.0), "retract_every": ("int", 1), "record_every": ("int", 100),
             "dt_min": ("real", 1e-12), "retract_tol": ("real", 1e-12)},
    "analysis": {"radius": ("real", 1e-3), "count": ("int", 40), "seed": ("int", None),
                 "theta_grid": ("reals", [0.5]), "sigma": ("real", 1.0),
                 "kernel_rtol": ("real", 1e-6), "base": ("str", "critical")},
    "counterexample": {"Ns": ("ints", list(range(2, 21, 2))), "lambda_rule": ("str", "geometric"),
                       "theta": ("real", 0.5), "sigma": ("real", 1.0), "route": ("str", "direct"),
                       "seed": ("int", 0)},
    "output": {"dir": ("str", None), "emit_svg": ("bool", False)},
}
TOP_LEVEL = ("model",) + tuple(SCHEMA)

CONSTRAINT_KINDS = {
    "revolution": ("volume", "mass", "integral", "none"),
    "graph_area": ("mass", "integral", "volume", "none"),
    "allen_cahn": ("mass", "integral", "volume", "none"),
    "seq_quad": ("none",),
    "monomial": ("none",),
    "constraint_hessian_example": ("builtin",),
    "sphere": ("sphere",),
}
DEFAULT_CONSTRAINT = {"revolution": "volume", "graph_area": "none", "allen_cahn": "mass",
                      "seq_quad": "none", "monomial": "none",
                      "constraint_hessian_example": "builtin", "sphere": "sphere"}


def _coerce(path, kind, value):
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if kind == "real":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(path, f"expected a finite number, got {value!r}")
        return float(value)
    if kind in ("reals", "ints"):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        inner = "real" if kind == "reals" else "int"
        return [_coerce(f"{path}[{i}]", inner, v) for i, v in enumerate(value)]
    raise AssertionError(kind)


def parse_config(doc):
    """Validate a decoded JSON document and fill in defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in doc:
        if key not in TOP_LEVEL:
            raise ConfigError(key, "unknown field")
    if "model" not in doc:
        raise ConfigError("model", "missing required field")
    model = doc["model"]
    if model not in MODELS:
        raise ConfigError("model", f"unknown model {model!r}; choose from {list(MODELS)}")
    cfg = {"model": model}
    for section, fields in SCHEMA.items():
        given = doc.get(section, {})
        if not isinstance(given, dict):
            raise ConfigError(section, "expected an object")
        out = {}
        for key, value in given.items():
            if key not in fields:
                raise ConfigError(f"{section}.{key}", "unknown field")
            out[key] = _coerce(f"{section}.{key}", fields[key][0], value)
        for key, (_, default) in fields.items():
            out.setdefault(key, copy.deepcopy(default))
        cfg[section] = out
    _check_semantics(cfg)
    return cfg


def _check_semantics(cfg):
    model = cfg["model"]
    if model in GRID_MODELS:
        g = cfg["grid"]
        if g["n"] < 3:
            raise ConfigError("grid.n", f"need at least 3 interior nodes, got {g['n']}")
        if not g["a"] < g["b"]:
            raise ConfigError("grid.b", f"need a < b, got a={g['a']}, b={g['b']}")
    c = cfg["constraint"]
    if c["kind"] is None:
        c["kind"] = DEFAULT_CONSTRAINT[model]
    if c["kind"] not in CONSTRAINT_KINDS[model]:
        raise ConfigError("constraint.kind",
                          f"{c['kind']!r} is not defined for model {model!r}; "
                          f"choose from {list(CONSTRAINT_KINDS[model])}")
    if c["kind"] == "integral":
        if c["g"] is None:
            raise ConfigError("constraint.g", "integral constraints need a named function")
        if c["g"] not in NAMED_FUNCTIONS:
            raise ConfigError("constraint.g", f"unknown function {c['g']!r}; "
                                              f"choose from {sorted(NAMED_FUNCTIONS)}")
    s = cfg["sequence"]
    for key in ("N", "p", "dim"):
        if s[key] < 1:
            raise ConfigError(f"sequence.{key}", "must be a positive integer")
    if s["lambda_rule"] not in LAMBDA_RULES:
        raise ConfigError("sequence.lambda_rule", f"choose from {list(LAMBDA_RULES)}")
    try:
        FlowOptions(**cfg["flow"])
    except ContractViolation as exc:
        name = str(exc).split()[2]
        raise ConfigError(f"flow.{name}", str(exc)) from None
    a = cfg["analysis"]
    for key in ("radius", "sigma", "kernel_rtol"):
        if not a[key] > 0:
            raise ConfigError(f"analysis.{key}", "must be positive")
    if a["count"] < 1:
        raise ConfigError("analysis.count", "must be a positive integer")
    if a["base"] not in ("critical", "origin"):
        raise ConfigError("analysis.base", "choose from ['critical', 'origin']")
    for i, t in enumerate(a["theta_grid"]):
        if not 0.0 < t <= 0.5:
            raise ConfigError(f"analysis.theta_grid[{i}]", "theta must lie in (0, 1/2]")
    x = cfg["counterexample"]
    if not x["Ns"]:
        raise ConfigError("counterexample.Ns", "must be a non-empty list")
    if any(N < 1 for N in x["Ns"]) or any(b <= a for a, b in zip(x["Ns"], x["Ns"][1:])):
        raise ConfigError("counterexample.Ns", "must be strictly ascending positive integers")
    if x["lambda_rule"] not in LAMBDA_RULES:
        raise ConfigError("counterexample.lambda_rule", f"choose from {list(LAMBDA_RULES)}")
    if x["route"] not in ("direct", "chart"):
        raise ConfigError("counterexample.route", "choose from ['direct', 'chart']")
    if not 0.0 < x["theta"] <= 0.5:
        raise ConfigError("counterexample.theta", "theta must lie in (0, 1/2]")
    if not x["sigma"] > 0:
        raise ConfigError("counterexample.sigma", "must be positive")
    init = cfg["initial"]
    if init["kind"] not in (None, "sine", "zero", "values"):
        raise ConfigError("initial.kind", "choose from ['sine', 'zero', 'values']")
    if init["kind"] == "values" and init["values"] is None:
        raise ConfigError("initial.values", "required when initial.kind is 'values'")


def load_config(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON: {exc}") from None
    return parse_config(doc)


def config_hash(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def require_seed(cfg):
    if cfg["analysis"]["seed"] is None:
        raise ConfigError("analysis.seed", "a seed is required whenever sampling is requested")
    return cfg["analysis"]["seed"]


# ---------------------------------------------------------------------------
# building objects


def build_problem(cfg):
    """Return (E, G) for the configured model and constraint."""
    model, c, s = cfg["model"], cfg["constraint"], cfg["sequence"]
    if model in GRID_MODELS:
        g = cfg["grid"]
        grid = Grid1D(g["a"], g["b"], g["n"])
        E = {"revolution": RevolutionModel, "graph_area": GraphAreaModel,
             "allen_cahn": AllenCahnModel}[model](grid)
        kind = c["kind"]
        if kind == "volume":
            nu = c["nu"] if c["nu"] is not None else np.pi * grid.length
            G = revolution_volume_constraint(grid, nu)
        elif kind == "mass":
            G = mass_constraint(grid, c["target"])
        elif kind == "integral":
            G = integral_constraint(grid, c["g"], c["target"])
        else:
            G = NoConstraint(grid)
        return E, G
    if model == "seq_quad":
        E = SeqQuadModel.from_rule(s["N"], s["lambda_rule"])
        return E, NoConstraint(E.space)
    if model == "monomial":
        E = MonomialModel(s["p"], s["dim"])
        return E, NoConstraint(E.space)
    if model == "constraint_hessian_example":
        return constraint_example_for(s["N"], s["lambda_rule"])
    return HeightEnergy(s["dim"]), SphereConstraint(s["dim"])


def initial_field(cfg, E):
    """Starting point for flows and critical-point searches."""
    init, space = cfg["initial"], E.space
    kind = init["kind"]
    if kind is None:
        kind = "sine" if isinstance(space, Grid1D) else ("values" if init["values"] else "default")
    if kind == "zero":
        return space.zeros()
    if kind == "values":
        u = np.asarray(init["values"], dtype=float)
        if u.shape != (space.n,):
            raise ConfigError("initial.values", f"expected {space.n} values, got {u.size}")
        return u
    if kind == "sine":
        if not isinstance(space, Grid1D):
            raise ConfigError("initial.kind", "'sine' needs a grid model")
        xi = (space.x - space.a) / space.length
        return init["amplitude"] * np.sin(init["mode"] * np.pi * xi)
    # sequence-space default: a fixed tilted point
    u = init["amplitude"] * np.ones(space.n)
    if cfg["model"] == "sphere":
        u = np.zeros(space.n)
        u[0], u[-1] = 0.3, 1.0
    return u


def flow_options(cfg):
    return FlowOptions(**cfg["flow"])

