"""Experiment configuration, validation and report writers."""

from __future__ import annotations

import copy
import json
import os
import zlib
from pathlib import Path

import jsonschema
import numpy as np

__all__ = [
    "ConfigError",
    "CONFIG_SCHEMA",
    "DEFAULT_CONFIG",
    "load_config",
    "validate_config",
    "check_rng",
    "write_json",
    "to_jsonable",
    "max_workers",
]

_POS_INT = {"type": "integer", "minimum": 1}
_POS_NUM = {"type": "number", "exclusiveMinimum": 0}

_METRIC = {
    "type": "object",
    "properties": {
        "type": {"enum": ["euclidean", "cap", "hyperbolic", "grid"]},
        "kappa": _POS_NUM,
        "disk_radius": _POS_NUM,
        "lambda_grid": {"type": "array"},
    },
    "required": ["type"],
    "allOf": [{"if": {"properties": {"type": {"const": "grid"}}},
               "then": {"required": ["lambda_grid"]}}],
}

_CONNECTION = {
    "type": "object",
    "properties": {
        "n": _POS_INT,
        "kind": {"enum": ["zero", "abelian_poly", "matrix_poly", "random_poly"]},
        "coefficients": {"type": "object"},
        "degree": {"type": "integer", "minimum": 0},
        "scale": {"type": "number", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": ["kind"],
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "attxray experiment config",
    "type": "object",
    "properties": {
        "metrics": {"type": "array", "items": _METRIC, "minItems": 1},
        "connection": _CONNECTION,
        "n_values": {"type": "array", "items": _POS_INT, "minItems": 1},
        "seed": {"type": "integer", "minimum": 0},
        "resolution": {
            "type": "object",
            "properties": {
                "N_r": _POS_INT,
                "N_phi": {"type": "integer", "minimum": 8, "multipleOf": 2},
                "fan": {"type": "object",
                        "properties": {"n_phi": _POS_INT, "n_a": _POS_INT},
                        "additionalProperties": False},
                "delta_glancing": {"type": "number", "minimum": 0, "exclusiveMaximum": 1.5},
                "h_ode": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "n_theta": _POS_INT,
                "torus": {"type": "object",
                          "properties": {"n_phi": _POS_INT, "n_theta": _POS_INT},
                          "additionalProperties": False},
                "n_simpson": _POS_INT,
            },
            "additionalProperties": False,
        },
        "witness": {
            "type": "object",
            "properties": {
                "J": {"type": "integer", "minimum": 0},
                "L": {"type": "integer", "minimum": 0},
                "width": _POS_NUM,
                "collar": {"type": "object",
                           "properties": {"J": {"type": "integer", "minimum": 0},
                                          "L": {"type": "integer", "minimum": 0},
                                          "factor": {"type": "number", "exclusiveMinimum": 1},
                                          "delta_glancing": {"type": "number", "minimum": 0}},
                           "additionalProperties": False},
            },
            "additionalProperties": False,
        },
        "tsvd_rel": _POS_NUM,
        "refine": {"type": "boolean"},
        "csv": {"type": "boolean"},
    },
    "additionalProperties": False,
}

DEFAULT_CONFIG = {
    "metrics": [
        {"type": "euclidean", "disk_radius": 1.0},
        {"type": "cap", "kappa": 1.0, "disk_radius": 0.5},
        {"type": "hyperbolic", "kappa": 1.0, "disk_radius": 0.6},
    ],
    "n_values": [1, 2],
    "seed": 42,
    "resolution": {
        "N_r": 24,
        "N_phi": 48,
        "fan": {"n_phi": 64, "n_a": 32},
        "delta_glancing": 0.05,
        "h_ode": None,
        "n_theta": 64,
        "torus": {"n_phi": 128, "n_theta": 128},
        "n_simpson": 128,
    },
    "witness": {"J": 2, "L": 2, "width": 0.8,
                "collar": {"J": 6, "L": 12, "factor": 1.1, "delta_glancing": 0.02}},
    "tsvd_rel": 1e-10,
    "refine": True,
    "csv": True,
}


class ConfigError(ValueError):
    """Schema violation; ``pointer`` is the JSON pointer of the offending value."""

    def __init__(self, pointer, message):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def _pointer(path):
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate_config(cfg):
    """Validate against the schema and fill defaults; raises ConfigError."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(_pointer(e.absolute_path), e.message)
    return _merge(DEFAULT_CONFIG, cfg)


def load_config(path):
    """Read a JSON config file and validate it."""
    text = Path(path).read_text()
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from exc
    return validate_config(cfg)


def check_rng(seed, name):
    """Generator for one check, independent of execution order."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])


def to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else str(v)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(to_jsonable(obj), indent=2, sort_keys=True) + "\n")


def max_workers(default=1):
    """Worker cap from ATTXRAY_MAX_WORKERS (at least 1)."""
    v = os.environ.get("ATTXRAY_MAX_WORKERS")
    if not v:
        return default
    try:
        return max(1, int(v))
    except ValueError:
        return default
