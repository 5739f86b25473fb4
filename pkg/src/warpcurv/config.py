"""Run configurations: JSON schemas, defaults, and builders for the objects they name."""

from __future__ import annotations

import copy
import json

import jsonschema
import numpy as np

from .families import (
    build_lambda_r,
    build_lambda_r_s,
    build_rho_r,
    make_isotopy,
    make_twist,
)
from .heatflow import cylinder_circle, torus_loop
from .models import MODELS, model
from .pinching import SamplingGrid, WarpFamily, geometric_grid, linear_grid
from .warp import WARPS, assemble_doubly_warped, warp

COMMANDS = ("curvature-sweep", "pinch-find", "family-check", "heatflow", "oracle-check")


class ConfigError(ValueError):
    pass


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT_POS = {"type": "integer", "minimum": 1}
_SEED = {"type": "integer", "minimum": 0}
_MODEL = {"enum": sorted(MODELS)}
_WARP = {"enum": sorted(WARPS)}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

TWIST = _obj({
    "kind": {"enum": ["identity", "rotation", "bump_rotation"]},
    "angle": _NUM,
    "center": {"type": "array", "items": _NUM},
    "radius": _POS,
}, ["kind"])

METRIC = _obj({
    "family": {"enum": ["rho_r", "lambda_r", "lambda_r_s", "doubly_warped", "model"]},
    "factor": _MODEL,
    "r": _POS,
    "s": {"type": "number", "minimum": 0, "maximum": 1},
    "margin": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
    "eta_margin": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.25},
    "twist": TWIST,
    "name": _MODEL,
    "sigma1": _MODEL,
    "sigma2": _MODEL,
    "phi1": _WARP,
    "phi2": _WARP,
    "t_domain": _PAIR,
}, ["family"])

GRID = _obj({
    "n_t": _INT_POS,
    "n_space": _INT_POS,
    "planes": {"type": "integer", "minimum": 0},
    "t_values": {"type": "array", "items": _NUM, "minItems": 1},
    "t_start": _POS,
    "exclusion": _POS,
})

SCALAR_GRID = _obj({
    "kind": {"enum": ["linear", "geometric", "list"]},
    "start": _POS,
    "stop": _POS,
    "step": _POS,
    "ratio": {"type": "number", "exclusiveMinimum": 1},
    "values": {"type": "array", "items": _POS, "minItems": 1},
}, ["kind"])

FAMILY = _obj({
    "phi1": _WARP,
    "phi2": _WARP,
    "t_interval": _PAIR,
    "K1_bounds": {"oneOf": [_PAIR, {"type": "null"}]},
    "K2_bounds": {"oneOf": [_PAIR, {"type": "null"}]},
}, ["phi1", "phi2", "t_interval"])

_COMMON = {"command": {"enum": list(COMMANDS)}, "seed": _SEED}

SCHEMAS = {
    "curvature-sweep": _obj({
        **_COMMON,
        "metric": METRIC,
        "sweep": _obj({"key": {"enum": ["r", "s"]}, "values": {"type": "array", "items": _NUM, "minItems": 1}},
                      ["key", "values"]),
        "grid": GRID,
        "eps": _POS,
    }, ["metric"]),
    "pinch-find": _obj({
        **_COMMON,
        "mode": {"enum": ["alpha0", "min_r"]},
        "family": FAMILY,
        "alpha_grid": SCALAR_GRID,
        "n_t": _INT_POS,
        "metric": METRIC,
        "r_grid": SCALAR_GRID,
        "s_values": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "grid": GRID,
        "eps": _POS,
        "expect": _obj({"alpha0": _NUM, "tolerance": _POS, "deviation_non_increasing": {"type": "boolean"}}),
    }, ["eps"]),
    "family-check": _obj({
        **_COMMON,
        "metric": METRIC,
        "s_values": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "smoothness_order": {"enum": [0, 1, 2]},
        "grid": GRID,
        "eps": _POS,
    }, ["metric"]),
    "heatflow": _obj({
        **_COMMON,
        "target": {"enum": ["flat_torus2", "hyperbolic_cylinder"]},
        "npts": {"type": "integer", "minimum": 16},
        "winding": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        "amplitude": _NUM,
        "offset": _NUM,
        "tol": _POS,
        "max_steps": _INT_POS,
        "record_every": _INT_POS,
        "expected_energy": _NUM,
        "energy_tolerance": _POS,
    }, ["target"]),
    "oracle-check": _obj({
        **_COMMON,
        "configs": {"type": "array", "minItems": 1, "items": _obj({
            "sigma1": _MODEL, "sigma2": _MODEL, "phi1": _WARP, "phi2": _WARP, "t_domain": _PAIR,
        }, ["sigma1", "sigma2", "phi1", "phi2", "t_domain"])},
        "frames": _INT_POS,
        "tol": _POS,
    }, ["configs"]),
}

DEFAULTS = {
    "curvature-sweep": {"grid": {}, "eps": None, "sweep": None},
    "pinch-find": {"mode": "alpha0", "n_t": 256, "grid": {}, "s_values": None, "expect": {}},
    "family-check": {"s_values": None, "smoothness_order": 2, "grid": {}, "eps": None},
    "heatflow": {"npts": 256, "winding": [1, 0], "amplitude": 0.0, "offset": 0.5, "tol": 1e-6,
                 "max_steps": 200000, "record_every": 100, "expected_energy": None,
                 "energy_tolerance": 1e-3},
    "oracle-check": {"frames": 100, "tol": 1e-5},
}


def _describe(err):
    where = "/".join(str(p) for p in err.absolute_path) or "<top level>"
    return f"config error at {where}: {err.message}"


def load_config(command, text, seed=None):
    """Parse, validate and default a JSON config; returns a plain dict."""
    if command not in SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    validator = jsonschema.Draft202012Validator(SCHEMAS[command])
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError(_describe(errors[0]))
    if raw.get("command", command) != command:
        raise ConfigError(f"config error at command: file is for {raw['command']!r}, not {command!r}")
    cfg = copy.deepcopy(DEFAULTS[command])
    cfg.update(raw)
    cfg["command"] = command
    cfg.setdefault("seed", 0)
    if seed is not None:
        cfg["seed"] = int(seed)
    _semantic_checks(command, cfg)
    return cfg


def _need(cfg, key, where):
    if cfg.get(key) is None:
        raise ConfigError(f"config error at {where}: missing required key {key!r}")


def _semantic_checks(command, cfg):
    if "metric" in cfg and cfg["metric"] is not None:
        _check_metric(cfg["metric"], sweep=cfg.get("sweep"), command=command)
    if command == "pinch-find":
        if cfg["mode"] == "alpha0":
            _need(cfg, "family", "pinch-find")
            _need(cfg, "alpha_grid", "pinch-find")
        else:
            _need(cfg, "metric", "pinch-find")
            _need(cfg, "r_grid", "pinch-find")
    for key in ("alpha_grid", "r_grid"):
        if cfg.get(key):
            scalar_grid(cfg[key], key)


def _check_metric(spec, sweep=None, command=None):
    fam = spec["family"]
    swept = sweep["key"] if sweep else None
    needs = {
        "rho_r": ["factor", "r"],
        "lambda_r": ["factor", "r"],
        "lambda_r_s": ["factor", "r", "s"],
        "doubly_warped": ["sigma1", "sigma2", "phi1", "phi2", "t_domain"],
        "model": ["name"],
    }[fam]
    for key in needs:
        if key == swept:
            continue
        if key == "r" and command == "pinch-find":
            continue
        if key == "s" and command in ("family-check", "pinch-find"):
            continue
        if key not in spec:
            raise ConfigError(f"config error at metric: family {fam!r} needs key {key!r}")


def scalar_grid(spec, where="grid"):
    kind = spec["kind"]
    try:
        if kind == "list":
            vals = np.asarray(spec["values"], float)
        elif kind == "linear":
            vals = linear_grid(spec["start"], spec["stop"], spec["step"])
        else:
            vals = geometric_grid(spec["start"], spec["stop"], spec.get("ratio", 1.1))
    except KeyError as exc:
        raise ConfigError(f"config error at {where}: {kind} grid needs key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"config error at {where}: {exc}") from None
    if np.any(np.diff(vals) <= 0):
        raise ConfigError(f"config error at {where}: values must be increasing")
    return vals


def sampling_grid(spec, seed):
    spec = dict(spec or {})
    if "t_values" in spec:
        spec["t_values"] = tuple(spec["t_values"])
    return SamplingGrid(seed=seed, **spec)


def build_metric(spec, **override):
    """Metric named by a config ``metric`` table (``override`` supplies swept keys)."""
    spec = {**spec, **override}
    fam = spec["family"]
    if fam == "model":
        return model(spec["name"])
    if fam == "doubly_warped":
        return assemble_doubly_warped(model(spec["sigma1"]), model(spec["sigma2"]),
                                      warp(spec["phi1"]), warp(spec["phi2"]), spec["t_domain"])
    factor = model(spec["factor"])
    r = float(spec["r"])
    if fam == "rho_r":
        return build_rho_r(r, factor)
    margin = spec.get("margin", 0.1)
    tw = dict(spec.get("twist", {"kind": "identity"}))
    kind = tw.pop("kind")
    if fam == "lambda_r":
        return build_lambda_r(r, factor, make_twist(factor.dim, kind, **tw), margin)
    iso = make_isotopy(factor.dim, kind, **tw)
    return build_lambda_r_s(r, float(spec["s"]), iso, factor, margin, spec.get("eta_margin", 0.05))


def build_family(spec):
    def bounds(b):
        return None if b is None else tuple(b)

    return WarpFamily(warp(spec["phi1"]), warp(spec["phi2"]), tuple(spec["t_interval"]),
                      bounds(spec.get("K1_bounds")), bounds(spec.get("K2_bounds")),
                      name=f"{spec['phi1']}/{spec['phi2']}")


def build_curve(cfg):
    target = model(cfg["target"])
    if cfg["target"] == "flat_torus2":
        return torus_loop(target, cfg["npts"], tuple(cfg["winding"]), cfg["amplitude"])
    return cylinder_circle(target, cfg["npts"], cfg["offset"], cfg["amplitude"])
