"""Batch front-end: ``rkl [COMMAND] CONFIG.yaml [--set key.path=value ...]``.

A run config is a YAML file with the blocks ``command``, ``kernel``,
``ladder``, ``quadrature``, ``params`` (command specific) and ``output``.
Defaults are merged in, ``--set`` overrides applied, and the result is
validated against a JSON schema before any computation. Every artifact
carries the SHA-256 hash of the resolved config.

Exit codes: 0 success, 2 invalid config, 3 characteristic value hit in a
single-lambda command, 4 accuracy budget exceeded.
"""

from __future__ import annotations

import argparse
import copy
import dataclasses
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from .convergence import (
    CSV_COLUMNS,
    boundedness_region_probe,
    compactness_diagnostics,
    moebius_parameter,
    moebius_uniform_study,
    resolvent_convergence_study,
    tail_product_norms,
)
from .errors import AccuracyError, CharacteristicValueError, ConfigError
from .fredholm import characteristic_values, determinant, determinant_series_oracle, fredholm_resolvent, is_characteristic
from .kernels import CATALOG_IDS, TruncationLadder, catalog_kernel, carleman_norms, make_subkernel, tabulated_kernel
from .parallel import blas_limits
from .plotting import render_plot
from .quadrature import build_rule, discretize
from .reporting import config_hash, dumps_csv, dumps_json, report_csv, write_text
from .resolvent import neumann_resolvent, nystrom_direct, resolvent_residuals
from .solver import as_function, load_profile_csv, manufactured_rhs, solve_second_kind
from .spectral import SpectralWindow, classify_point, default_grid, interval_convergence_study, interval_projection

COMMANDS = ("eval", "determinant", "resolvent", "solve", "converge", "region", "spectral", "classify")
STUDIES = ("resolvent", "moebius", "compactness", "tail")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CHARACTERISTIC = 3
EXIT_ACCURACY = 4

_NUMBER = {"type": "number"}
_COMPLEX = {
    "oneOf": [
        _NUMBER,
        {
            "type": "object",
            "properties": {"re": _NUMBER, "im": _NUMBER},
            "required": ["re", "im"],
            "additionalProperties": False,
        },
    ]
}
_POINTS = {"type": "array", "items": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}}
_INDEX = {"type": "integer", "minimum": 1}
_INDEX_OR_NULL = {"oneOf": [_INDEX, {"type": "null"}]}
_INDEX_LIST = {"type": "array", "items": _INDEX}
_BOX = {"type": "array", "items": _NUMBER, "minItems": 4, "maxItems": 4}
_PROFILE = {"oneOf": [{"type": "string"}, {"type": "object"}]}
_KIND = {"enum": ["one_sided", "two_sided"]}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "kernel", "ladder", "quadrature", "params", "output"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "kernel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "id": {"enum": list(CATALOG_IDS)},
                "params": {"type": "object"},
                "tabulated": {"type": "string"},
                "hermitian": {"type": "boolean"},
            },
            "oneOf": [{"required": ["id"]}, {"required": ["tabulated"]}],
        },
        "ladder": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rule": {"enum": ["linear", "quartic", "explicit"]},
                "size": _INDEX,
                "step": {"type": "number", "exclusiveMinimum": 0},
                "values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
            },
            "required": ["rule"],
        },
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"panels_per_unit": _INDEX, "points_per_panel": _INDEX},
            "required": ["panels_per_unit", "points_per_panel"],
        },
        "params": {"type": "object"},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "stem": {"type": "string", "minLength": 1},
                "formats": {"type": "array", "items": {"enum": ["json", "csv", "svg"]}, "uniqueItems": True},
            },
            "required": ["dir", "stem", "formats"],
        },
    },
}


def _params_schema(props: dict, required=()) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props, "required": list(required)}


PARAM_SCHEMAS = {
    "eval": _params_schema({"n": _INDEX_OR_NULL, "kind": _KIND, "points": _POINTS, "norms_at": {"type": "array", "items": _NUMBER}}),
    "determinant": _params_schema(
        {
            "lambda": _COMPLEX,
            "n": _INDEX_OR_NULL,
            "kind": _KIND,
            "series_m_max": _INDEX_OR_NULL,
            "scan": {
                "oneOf": [
                    {"type": "null"},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "re": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
                            "im": _NUMBER,
                            "count": {"type": "integer", "minimum": 2},
                        },
                        "required": ["re", "count"],
                    },
                ]
            },
            "characteristic": {
                "oneOf": [
                    {"type": "null"},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"box": _BOX, "grid": {"type": "integer", "minimum": 3}},
                    },
                ]
            },
        }
    ),
    "resolvent": _params_schema(
        {
            "lambda": _COMPLEX,
            "n": _INDEX_OR_NULL,
            "kind": _KIND,
            "method": {"enum": ["fredholm_ratio", "neumann", "nystrom_direct"]},
            "terms": _INDEX,
            "points": _POINTS,
            "residuals": {"type": "boolean"},
        }
    ),
    "solve": _params_schema(
        {
            "lambda": _COMPLEX,
            "n": _INDEX_OR_NULL,
            "kind": _KIND,
            "route": {"enum": ["direct_linear", "resolvent_formula"]},
            "g": {"oneOf": [{"type": "null"}, _PROFILE]},
            "g_csv": {"oneOf": [{"type": "null"}, {"type": "string"}]},
            "manufactured": {"oneOf": [{"type": "null"}, _PROFILE]},
            "points": {"type": "array", "items": _NUMBER},
        }
    ),
    "converge": _params_schema(
        {
            "study": {"enum": list(STUDIES)},
            "lambda": _COMPLEX,
            "lambdas": {"type": "array", "items": _COMPLEX},
            "n_list": _INDEX_LIST,
            "reference_n": _INDEX_OR_NULL,
            "beta": {
                "oneOf": [
                    {"type": "null"},
                    {"type": "array", "items": _NUMBER},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {"rule": {"enum": ["inverse_square", "inverse", "zero"]}, "scale": _NUMBER},
                        "required": ["rule"],
                    },
                ]
            },
            "probes": _POINTS,
            "m": _INDEX,
            "tol": {"type": "number", "exclusiveMinimum": 0},
        },
        ["study"],
    ),
    "region": _params_schema(
        {
            "box": _BOX,
            "grid": {"type": "array", "items": _INDEX, "minItems": 2, "maxItems": 2},
            "probe_set": _INDEX_LIST,
            "threshold": {"type": "number", "exclusiveMinimum": 0},
            "reference_n": _INDEX_OR_NULL,
            "tail_check": {"type": "boolean"},
        }
    ),
    "spectral": _params_schema(
        {
            "window": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2},
            "n": _INDEX_OR_NULL,
            "n_list": _INDEX_LIST,
            "reference_n": _INDEX_OR_NULL,
            "grid_count": {"type": "integer", "minimum": 2},
            "tol": {"type": "number", "exclusiveMinimum": 0},
        },
        ["window"],
    ),
    "classify": _params_schema(
        {
            "lambda": _NUMBER,
            "mu": {
                "oneOf": [
                    {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "start": {"type": "number", "exclusiveMinimum": 0},
                            "ratio": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                            "count": {"type": "integer", "minimum": 2},
                        },
                        "required": ["start", "ratio", "count"],
                    },
                ]
            },
            "threshold": {"type": "number", "exclusiveMinimum": 0},
            "grid_count": {"type": "integer", "minimum": 2},
        },
        ["lambda"],
    ),
}

DEFAULTS = {
    "ladder": {"rule": "linear", "size": 8, "step": 2.0},
    "quadrature": {"panels_per_unit": 1, "points_per_panel": 10},
    "output": {"dir": "rkl-out", "formats": ["json", "csv", "svg"]},
}

PARAM_DEFAULTS = {
    "eval": {"n": None, "kind": "one_sided", "points": [[0.0, 0.0]], "norms_at": []},
    "determinant": {"lambda": 0.0, "n": None, "kind": "one_sided", "series_m_max": None, "scan": None, "characteristic": None},
    "resolvent": {
        "lambda": 0.0,
        "n": None,
        "kind": "one_sided",
        "method": "fredholm_ratio",
        "terms": 60,
        "points": [[0.0, 0.0]],
        "residuals": True,
    },
    "solve": {
        "lambda": 0.0,
        "n": None,
        "kind": "one_sided",
        "route": "direct_linear",
        "g": None,
        "g_csv": None,
        "manufactured": None,
        "points": [0.0],
    },
    "converge": {"n_list": [1, 2, 3, 4, 5], "reference_n": None, "beta": None, "probes": [[0.0, 0.0]], "m": 1, "tol": 1e-5},
    "region": {
        "box": [-2.0, 4.0, -1.0, 1.0],
        "grid": [25, 5],
        "probe_set": [2, 3, 4],
        "threshold": 100.0,
        "reference_n": None,
        "tail_check": True,
    },
    "spectral": {"n": None, "n_list": [], "reference_n": None, "grid_count": 41, "tol": 1e-6},
    "classify": {"mu": {"start": 0.5, "ratio": 0.5, "count": 8}, "threshold": 1e-3, "grid_count": 121},
}


# ---------------------------------------------------------------------------
# config handling


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def apply_override(config: dict, assignment: str) -> None:
    """Apply ``a.b.c=value`` in place; the value is parsed as YAML."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not of the form key.path=value")
    path, raw = assignment.split("=", 1)
    keys = [k for k in path.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"override {assignment!r} has an empty key")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"override {assignment!r}: {exc}") from exc
    node = config
    for key in keys[:-1]:
        child = node.setdefault(key, {})
        if not isinstance(child, dict):
            raise ConfigError(f"override {assignment!r}: {key!r} is not a block")
        node = child
    node[keys[-1]] = value


def _validate(schema: dict, data, where: str) -> None:
    try:
        jsonschema.validate(data, schema)
    except jsonschema.ValidationError as exc:
        loc = ".".join(str(p) for p in exc.absolute_path)
        raise ConfigError(f"{where}{'.' + loc if loc else ''}: {exc.message}") from exc


def resolve_config(raw: dict, overrides=(), command: str | None = None) -> dict:
    """Merge defaults and overrides into ``raw`` and validate the result."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    cfg = copy.deepcopy(raw)
    if command is not None:
        cfg["command"] = command
    for assignment in overrides:
        apply_override(cfg, assignment)
    cmd = cfg.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {cmd!r}")
    cfg = _merge(DEFAULTS, cfg)
    cfg["output"].setdefault("stem", cmd)
    if not isinstance(cfg.get("params", {}), dict):
        raise ConfigError("params must be a mapping")
    cfg["params"] = _merge(PARAM_DEFAULTS[cmd], cfg.get("params", {}))
    kernel = cfg.get("kernel")
    if isinstance(kernel, dict) and "id" in kernel:
        kernel.setdefault("params", {})
    elif isinstance(kernel, dict) and "tabulated" in kernel:
        kernel.setdefault("hermitian", False)
    _validate(CONFIG_SCHEMA, cfg, "config")
    _validate(PARAM_SCHEMAS[cmd], cfg["params"], "params")
    ladder = cfg["ladder"]
    if ladder["rule"] == "explicit" and "values" not in ladder:
        raise ConfigError("ladder.values is required for the explicit rule")
    if ladder["rule"] != "explicit" and "size" not in ladder:
        raise ConfigError("ladder.size is required")
    # round-trip through JSON so the hash sees plain types only
    return json.loads(json.dumps(cfg, sort_keys=True))


def load_config(path, overrides=(), command: str | None = None) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return resolve_config(raw if raw is not None else {}, overrides, command)


# ---------------------------------------------------------------------------
# building blocks


def _complex(value) -> complex:
    if isinstance(value, dict):
        return complex(value["re"], value["im"])
    return complex(value)


def build_kernel(cfg: dict, base_dir: Path = Path(".")):
    block = cfg["kernel"]
    if "tabulated" in block:
        path = Path(block["tabulated"])
        if not path.is_absolute():
            path = base_dir / path
        return tabulated_kernel(path, block.get("hermitian", False))
    try:
        return catalog_kernel(block["id"], block.get("params", {}))
    except (TypeError, KeyError, ValueError) as exc:
        if isinstance(exc, AccuracyError):
            raise
        raise ConfigError(f"kernel: {exc}") from exc


def build_ladder(cfg: dict) -> TruncationLadder:
    block = cfg["ladder"]
    if block["rule"] == "quartic":
        return TruncationLadder.quartic(block["size"])
    if block["rule"] == "linear":
        return TruncationLadder.linear(block["size"], block.get("step", 2.0))
    try:
        return TruncationLadder(tuple(float(v) for v in block["values"]))
    except ValueError as exc:
        raise ConfigError(f"ladder: {exc}") from exc


class Run:
    """Resolved config plus the objects it describes."""

    def __init__(self, cfg: dict, base_dir: Path = Path(".")):
        self.cfg = cfg
        self.base_dir = base_dir
        self.params = cfg["params"]
        self.ppu = cfg["quadrature"]["panels_per_unit"]
        self.ppp = cfg["quadrature"]["points_per_panel"]
        self.spec = build_kernel(cfg, base_dir)
        self.ladder = build_ladder(cfg)
        self.hash = config_hash(cfg)

    def index(self, n) -> int:
        n = self.ladder.size if n is None else int(n)
        if n > self.ladder.size:
            raise ConfigError(f"index n={n} exceeds ladder size {self.ladder.size}")
        return n

    def operator(self, n=None, kind: str = "one_sided"):
        n = self.index(n)
        sub = make_subkernel(self.spec, self.ladder, n, kind)
        return discretize(sub, build_rule(self.ladder, n, self.ppu, self.ppp, sub))


def _check_lambda(op, lam: complex) -> None:
    flag, abs_det, scale = is_characteristic(op, lam)
    if flag:
        raise CharacteristicValueError(lam, abs_det, scale)


def _grid_rows(s, t, values) -> list:
    return [[si, ti, v.real, v.imag] for si, ti, v in zip(s, t, np.asarray(values, complex))]


# ---------------------------------------------------------------------------
# commands; each returns (result, csv_text_or_None, plot_or_None)


def cmd_eval(run: Run):
    p = run.params
    pts = np.asarray(p["points"], float).reshape(-1, 2)
    target = run.spec if p["n"] is None else make_subkernel(run.spec, run.ladder, run.index(p["n"]), p["kind"])
    vals = [complex(target(s, t)) for s, t in pts] if pts.size else []
    norms = []
    for s in p["norms_at"]:
        tau, taup = carleman_norms(target, float(s))
        norms.append({"s": float(s), "tau": tau, "tau_prime": taup})
    result = {"kernel": target.describe(), "points": pts.tolist(), "values": vals, "carleman_norms": norms}
    csv_text = dumps_csv(("s", "t", "re", "im"), _grid_rows(pts[:, 0], pts[:, 1], vals), run.hash)
    return result, csv_text, None


def cmd_determinant(run: Run):
    p = run.params
    op = run.operator(p["n"], p["kind"])
    lam = _complex(p["lambda"])
    data = determinant(op, lam)
    flag, abs_det, scale = is_characteristic(op, lam)
    result = data.as_dict()
    result["characteristic"] = flag
    result["characteristic_scale"] = scale
    if p["series_m_max"]:
        result["series"] = determinant_series_oracle(op, lam, p["series_m_max"])
    rows = [[lam.real, lam.imag, data.determinant.real, data.determinant.imag, abs(data.determinant)]]
    plot = None
    if p["scan"]:
        sc = p["scan"]
        xs = np.linspace(sc["re"][0], sc["re"][1], sc["count"])
        im = float(sc.get("im", 0.0))
        dets = [determinant(op, complex(x, im), refine=False).determinant for x in xs]
        rows = [[x, im, d.real, d.imag, abs(d)] for x, d in zip(xs, dets)]
        result["scan"] = {"lambda_re": xs.tolist(), "lambda_im": im, "determinant": dets}
        plot = ("abs_det_vs_lambda", {"lambda_re": xs.tolist(), "abs_det": [abs(d) for d in dets]})
    if p["characteristic"] is not None:
        ch = p["characteristic"]
        found = characteristic_values(op, tuple(ch.get("box", (-5.0, 5.0, -1.0, 1.0))), ch.get("grid", 41))
        result["characteristic_values"] = [
            {"value": c.value, "multiplicity": c.multiplicity, "abs_det": c.abs_det} for c in found.values
        ]
        if plot is not None:
            plot[1]["zeros"] = [c.value.real for c in found.values if abs(c.value.imag) < 1e-9]
    header = ("lambda_re", "lambda_im", "det_re", "det_im", "abs_det")
    return result, dumps_csv(header, rows, run.hash), plot


def cmd_resolvent(run: Run):
    p = run.params
    op = run.operator(p["n"], p["kind"])
    lam = _complex(p["lambda"])
    _check_lambda(op, lam)
    if p["method"] == "fredholm_ratio":
        ev = fredholm_resolvent(op, lam)
    elif p["method"] == "neumann":
        ev = neumann_resolvent(op, lam, p["terms"])
    else:
        ev = nystrom_direct(op, lam)
    pts = np.asarray(p["points"], float).reshape(-1, 2)
    vals = [complex(ev(s, t)) for s, t in pts]
    result = {"resolvent": ev.describe(), "points": pts.tolist(), "values": vals}
    if p["residuals"]:
        res = resolvent_residuals(ev, op)
        result["residuals"] = {"left": res.left_residual, "right": res.right_residual}
    csv_text = dumps_csv(("s", "t", "re", "im"), _grid_rows(pts[:, 0], pts[:, 1], vals), run.hash)
    return result, csv_text, None


def cmd_solve(run: Run):
    p = run.params
    op = run.operator(p["n"], p["kind"])
    lam = _complex(p["lambda"])
    sources = [k for k in ("g", "g_csv", "manufactured") if p[k] is not None]
    if len(sources) != 1:
        raise ConfigError("solve needs exactly one of params.g, params.g_csv, params.manufactured")
    exact = None
    if p["manufactured"] is not None:
        _check_lambda(op, lam)
        g_nodes, g_func = manufactured_rhs(op, lam, p["manufactured"])
        exact = as_function(p["manufactured"])
        rep = solve_second_kind(op, lam, g_nodes, p["route"])
        rep = dataclasses.replace(rep, g_func=g_func)
    elif p["g_csv"] is not None:
        path = Path(p["g_csv"])
        rep = solve_second_kind(op, lam, load_profile_csv(path if path.is_absolute() else run.base_dir / path), p["route"])
    else:
        rep = solve_second_kind(op, lam, p["g"], p["route"])
    result = {
        "lambda": lam,
        "route": rep.route,
        "n": op.size,
        "residual": rep.residual,
        "condition": rep.condition,
    }
    if exact is not None:
        result["max_error"] = float(np.max(np.abs(rep.f - np.asarray(exact(op.nodes), complex))))
    if rep.g_func is not None and p["points"]:
        result["points"] = list(p["points"])
        result["values"] = list(rep(np.asarray(p["points"], float)))
    rows = [[x, f.real, f.imag, g.real, g.imag] for x, f, g in zip(op.nodes, rep.f, rep.g)]
    return result, dumps_csv(("s", "f_re", "f_im", "g_re", "g_im"), rows, run.hash), None


def _beta_seq(beta):
    if beta is None:
        return None
    if isinstance(beta, list):
        return [float(b) for b in beta]
    scale = float(beta.get("scale", 1.0))
    rule = beta["rule"]
    if rule == "zero":
        return lambda n: 0.0
    if rule == "inverse":
        return lambda n: scale / n
    return lambda n: scale / n**2


def cmd_converge(run: Run):
    p = run.params
    n_list = list(p["n_list"])
    ref = p["reference_n"]
    study = p["study"]
    if "lambdas" in p:
        lambdas = [_complex(z) for z in p["lambdas"]]
    elif "lambda" in p:
        lambdas = [_complex(p["lambda"])]
    elif study != "tail":
        raise ConfigError(f"the {study} study needs params.lambda or params.lambdas")
    common = dict(reference_n=ref, panels_per_unit=run.ppu, points_per_panel=run.ppp)
    if study == "tail":
        tp = tail_product_norms(run.spec, run.ladder, n_list, p["m"], **common)
        rows = [[n, a, b] for n, a, b in zip(tp.n_list, tp.one_sided, tp.two_sided)]
        plot = None
        if n_list:
            plot = (
                "error_vs_n",
                {
                    "n": tp.n_list,
                    "series": {"one_sided": tp.one_sided, "two_sided": tp.two_sided},
                    "ylabel": "operator norm of the tail product",
                },
            )
        return tp, dumps_csv(("n", "one_sided", "two_sided"), rows, run.hash), plot
    probes = tuple(tuple(pt) for pt in p["probes"])
    if study == "resolvent":
        if len(lambdas) != 1:
            raise ConfigError("the resolvent study takes a single lambda")
        report = resolvent_convergence_study(run.spec, run.ladder, lambdas[0], n_list, tol=p["tol"], probes=probes, **common)
    elif study == "moebius":
        report = moebius_uniform_study(
            run.spec, run.ladder, _beta_seq(p["beta"]), lambdas, n_list, tol=p["tol"], probes=probes, **common
        )
    else:
        beta = _beta_seq(p["beta"])
        lam = lambdas[0]
        if beta is None:
            seq = [lam] * len(n_list)
        elif callable(beta):
            seq = [moebius_parameter(lam, beta(n)) for n in n_list]
        else:
            seq = [moebius_parameter(lam, beta[n - 1]) for n in n_list]
        report = compactness_diagnostics(run.spec, run.ladder, seq, n_list, probes=probes, **common)
    plot = ("error_vs_n", report) if study != "compactness" and n_list else None
    return report, report_csv(report, run.hash), plot


def cmd_region(run: Run):
    p = run.params
    probe = boundedness_region_probe(
        run.spec,
        run.ladder,
        tuple(p["box"]),
        tuple(p["grid"]),
        tuple(p["probe_set"]),
        p["threshold"],
        p["reference_n"],
        run.ppu,
        run.ppp,
        p["tail_check"],
    )
    rows = []
    for j, im in enumerate(probe.im):
        for i, re in enumerate(probe.re):
            rows.append([re, im, probe.norms[j][i], probe.bounded[j][i], probe.regular[j][i]])
    header = ("lambda_re", "lambda_im", "max_norm", "bounded", "regular")
    return probe, dumps_csv(header, rows, run.hash), ("region_map", probe)


def cmd_spectral(run: Run):
    p = run.params
    window = SpectralWindow(*p["window"])
    op = run.operator(p["n"], "two_sided")
    proj = interval_projection(op, window)
    grid = default_grid(run.ladder, p["grid_count"])
    mat = proj.matrix(grid, grid)
    result = {
        "window": [window.a, window.b],
        "n": run.index(p["n"]),
        "eigenvalues": proj.eigenvalues.tolist(),
        "trace": proj.trace(),
        "idempotency_defect": proj.idempotency_defect(grid),
        "hermitian_defect": proj.hermitian_defect(grid),
    }
    plot = None
    if p["n_list"]:
        report = interval_convergence_study(
            run.spec, run.ladder, window, p["n_list"], p["reference_n"], run.ppu, run.ppp, p["tol"]
        )
        result["study"] = report
        plot = ("error_vs_n", report)
    ss, tt = np.meshgrid(grid, grid, indexing="ij")
    csv_text = dumps_csv(("s", "t", "re", "im"), _grid_rows(ss.ravel(), tt.ravel(), mat.ravel()), run.hash)
    return result, csv_text, plot


def _mu_seq(mu) -> list:
    if isinstance(mu, list):
        return [float(m) for m in mu]
    return [mu["start"] * mu["ratio"] ** k for k in range(mu["count"])]


def cmd_classify(run: Run):
    p = run.params
    mu = _mu_seq(p["mu"])
    grid = default_grid(run.ladder, p["grid_count"])
    res = classify_point(run.spec, run.ladder, float(p["lambda"]), mu, p["threshold"], run.ppu, run.ppp, grid)
    result = {"lambda": float(p["lambda"]), "mu": mu, **res.to_dict()}
    rows = [[k + 1, mu[k], m, e, v] for k, (m, e, v) in enumerate(zip(res.m_seq, res.eps_seq, res.raw))]
    return result, dumps_csv(("step", "mu", "m", "eps", "scaled_sup"), rows, run.hash), None


HANDLERS = {
    "eval": cmd_eval,
    "determinant": cmd_determinant,
    "resolvent": cmd_resolvent,
    "solve": cmd_solve,
    "converge": cmd_converge,
    "region": cmd_region,
    "spectral": cmd_spectral,
    "classify": cmd_classify,
}


def execute(cfg: dict, base_dir: Path = Path(".")) -> list[Path]:
    """Run a resolved config and write its artifacts; returns the written paths.

    Input files named in the config resolve against ``base_dir``; the output
    directory resolves against the working directory.
    """
    with blas_limits():
        run = Run(cfg, base_dir)
        result, csv_text, plot = HANDLERS[cfg["command"]](run)
    out = cfg["output"]
    out_dir = Path(out["dir"])
    stem = out["stem"]
    written = []
    if "json" in out["formats"]:
        payload = {"command": cfg["command"], "config": cfg, "config_hash": run.hash, "result": result}
        written.append(write_text(out_dir / f"{stem}.json", dumps_json(payload)))
    if "csv" in out["formats"] and csv_text is not None:
        written.append(write_text(out_dir / f"{stem}.csv", csv_text))
    if "svg" in out["formats"] and plot is not None:
        path = out_dir / f"{stem}.svg"
        path.parent.mkdir(parents=True, exist_ok=True)
        render_plot(plot[1], plot[0], path, run.hash)
        written.append(path)
    return written


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rkl", description="Resolvent-kernel lab batch runner.")
    parser.add_argument("args", nargs="+", metavar="[COMMAND] CONFIG", help="optional command override, then a YAML config")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a config leaf")
    parser.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    return parser


def main(argv=None) -> int:
    parser = _parser()
    ns = parser.parse_args(argv)
    if len(ns.args) > 2:
        parser.error("expected [COMMAND] CONFIG")
    command = ns.args[0] if len(ns.args) == 2 else None
    config_path = Path(ns.args[-1])
    try:
        if command is not None and command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}; choose from {COMMANDS}")
        cfg = load_config(config_path, ns.overrides, command)
        if ns.print_config:
            print(dumps_json(cfg), end="")
            return EXIT_OK
        written = execute(cfg, config_path.parent)
    except ConfigError as exc:
        print(f"rkl: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CharacteristicValueError as exc:
        lam = complex(exc.lam)
        print(
            json.dumps(
                {"error": "characteristic_value", "lambda": {"re": lam.real, "im": lam.imag}, "abs_det": exc.abs_det},
                sort_keys=True,
            )
        )
        print(f"rkl: characteristic value lambda={lam} |D|={exc.abs_det:.3e}", file=sys.stderr)
        return EXIT_CHARACTERISTIC
    except AccuracyError as exc:
        print(f"rkl: accuracy budget exceeded: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    for path in written:
        print(path)
    return EXIT_OK


__all__ = ["CSV_COLUMNS", "CONFIG_SCHEMA", "PARAM_SCHEMAS", "apply_override", "execute", "load_config", "main", "resolve_config"]
