"""Configuration files: JSON schema validation, defaults, resolution checks.

A config document is validated structurally (unknown keys rejected; the first
violation is reported with its JSON pointer), then semantically: every ladder
scale must be representable on the grid, with 8 samples per cell for smooth
profiles and exact cell alignment (>= 1 sample) for indicator models.
"""

from __future__ import annotations

import hashlib
import json
import re

import jsonschema

from .errors import ConfigurationError, ResolutionError
from .experiments import ExperimentConfig, TestFunction, default_test_battery
from .grid import Grid
from .models import DilatationModel, model_from_spec, site_lattice
from .operators import (
    MultiplierOp,
    beurling,
    cauchy,
    custom_angular,
    deriv2_over_laplacian,
    dz,
    dzbar,
    identity_op,
    inv_laplacian,
    riesz2,
)
from .profiles import SquareIndicator

EXPERIMENTS = ("iterated", "beltrami", "checkerboard", "stripes_oracle", "hgx",
               "twobump", "calculus", "pde3d")

_COMPLEX = {"oneOf": [{"type": "number"},
                      {"type": "array", "items": {"type": "number"},
                       "minItems": 2, "maxItems": 2}]}

_PAIR = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 3}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment", "grid"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "grid": {
            "type": "object", "additionalProperties": False,
            "required": ["d", "N", "L"],
            "properties": {
                "d": {"type": "integer", "minimum": 1, "maximum": 3},
                "N": {"type": "integer", "minimum": 8},
                "L": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "ladder": {"type": "array", "minItems": 1,
                   "items": {"type": "integer", "minimum": 0}},
        "seeds": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "base": {"type": "integer"},
                "list": {"type": "array", "items": {"type": "integer"}},
            },
        },
        "models": {"type": "array", "items": {"$ref": "#/$defs/model"}},
        "operators": {"type": "array", "items": {"$ref": "#/$defs/operator"}},
        "test_functions": {
            "type": "array",
            "items": {
                "type": "object", "additionalProperties": False,
                "required": ["center", "width"],
                "properties": {
                    "center": _COMPLEX,
                    "width": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": ["integer", "null"], "minimum": 1},
                "K_cap": {"type": "number", "exclusiveMinimum": 1},
            },
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "emit_ppm": {"type": "boolean"},
            },
        },
        "threads": {"type": "integer", "minimum": 1},
        "params": {"type": "object"},
    },
    "$defs": {
        "model": {
            "type": "object", "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["constant", "stripes", "model1_periodic",
                                  "model2_checkerboard", "model3_bumpfield",
                                  "model4_degenerate"]},
                "a": _COMPLEX,
                "masked": {"type": "boolean"},
                "gamma": {"type": "number", "exclusiveMinimum": 2},
                "k_cap": {"type": "number", "exclusiveMinimum": 1},
                "p_exp": {"type": "number", "exclusiveMinimum": 0},
                "independent": {"type": "boolean"},
                "profile": {
                    "type": "object", "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["unit_square_indicator", "gaussian_bump",
                                          "smooth_square_bump", "two_bump",
                                          "mean_zero_radial"]},
                        "width": {"type": "number", "exclusiveMinimum": 0},
                        "amp": {"type": "number"},
                        "sep": {"type": "number", "exclusiveMinimum": 0},
                        "w1": {"type": "number", "exclusiveMinimum": 0},
                        "w2": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "dist": {
                    "type": "object", "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["rademacher", "symmetric_disk", "constant",
                                          "degenerate_k"]},
                        "r": {"type": "number", "exclusiveMinimum": 0},
                        "c": _COMPLEX,
                        "gamma": {"type": "number", "exclusiveMinimum": 2},
                    },
                },
                "envelope": {
                    "type": "object", "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["constant", "indicator_square", "smooth_bump",
                                          "holder_product"]},
                        "a": _COMPLEX,
                        "corner": _PAIR,
                        "side": {"type": "number", "exclusiveMinimum": 0},
                        "center": _PAIR,
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                        "height": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "operator": {
            "oneOf": [
                {"type": "string"},
                {
                    "type": "object", "additionalProperties": False,
                    "required": ["kind", "table"],
                    "properties": {
                        "kind": {"const": "custom"},
                        "table": {"type": "array", "minItems": 2,
                                  "items": {"type": "array", "minItems": 3, "maxItems": 3,
                                            "items": {"type": "number"}}},
                    },
                },
            ],
        },
    },
}

_OP_PATTERN = re.compile(r"^(riesz2|invlap)\((\d+),(\d+)\)$")


def operator_from_spec(spec) -> MultiplierOp:
    if isinstance(spec, dict):
        return custom_angular([(a, complex(re_, im)) for a, re_, im in spec["table"]])
    named = {"beurling": beurling, "cauchy": cauchy, "dz": dz, "dzbar": dzbar,
             "inv_laplacian": inv_laplacian, "identity": identity_op}
    if spec in named:
        return named[spec]()
    m = _OP_PATTERN.match(spec)
    if m:
        builder = riesz2 if m.group(1) == "riesz2" else deriv2_over_laplacian
        return builder(int(m.group(2)), int(m.group(3)))
    raise ConfigurationError(f"unknown operator {spec!r}")


def _json_pointer(err: jsonschema.ValidationError) -> str:
    path = "/" + "/".join(str(p) for p in err.absolute_path) if err.absolute_path else ""
    if err.validator == "additionalProperties":
        m = re.search(r"'([^']+)'", err.message)
        if m:
            return f"{path}/{m.group(1)}"
    return path or "/"


def validate_document(doc: dict) -> None:
    """Structural validation; raises ConfigurationError with a JSON pointer."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        raise ConfigurationError(f"{_json_pointer(err)}: {err.message}")


_DEFAULTS = {
    "ladder": [3, 4, 5, 6],
    "seeds": {"count": 8, "base": 0},
    "models": [],
    "operators": [],
    "solver": {"tol": 1e-10, "max_iter": None, "K_cap": 50.0},
    "output": {"dir": "out", "emit_ppm": False},
    "threads": 1,
    "params": {},
}


def apply_defaults(doc: dict) -> dict:
    out = {key: doc[key] for key in doc}
    for key, val in _DEFAULTS.items():
        if key not in out:
            out[key] = json.loads(json.dumps(val))
        elif isinstance(val, dict):
            merged = json.loads(json.dumps(val))
            merged.update(out[key])
            out[key] = merged
    if "test_functions" not in out:
        out["test_functions"] = [
            {"center": [tf.center.real, tf.center.imag], "width": tf.width}
            for tf in default_test_battery()
        ]
    return out


def _seed_list(spec: dict) -> list:
    if "list" in spec:
        return list(spec["list"])
    count = spec.get("count", 8)
    base = spec.get("base", 0)
    return list(range(base, base + count))


def _model_min_samples(model: DilatationModel) -> int:
    if model.kind in ("constant",):
        return 0
    if model.kind in ("stripes", "model2_checkerboard", "model4_degenerate"):
        return 1
    profile = model.profile
    if profile is None:
        profile = SquareIndicator() if model.kind == "model4_degenerate" else None
    return profile.min_samples if profile is not None else 8


def validate_resolution(grid: Grid, models, ladder) -> None:
    """delta = 2^-j must give >= 8 samples per cell for smooth profiles and an
    exact integer >= 1 for cell-aligned indicator models."""
    for j in ladder:
        delta = 2.0 ** (-j)
        ratio = delta / grid.h
        for i, model in enumerate(models):
            need = _model_min_samples(model)
            if need == 0:
                continue
            if ratio < need - 1e-9:
                raise ResolutionError(
                    f"/models/{i}: delta/h = {ratio:g} < {need} at j = {j} "
                    f"(delta = 2^-{j}, h = {grid.h:g})"
                )
            site_lattice(grid, j)


def build_config(doc: dict) -> ExperimentConfig:
    """Validated document (defaults applied) -> ExperimentConfig."""
    grid_spec = doc["grid"]
    grid = Grid(grid_spec["d"], grid_spec["N"], grid_spec["L"])
    models = []
    for m in doc["models"]:
        spec = dict(m)
        if spec.get("kind") == "model4_degenerate" and "k_cap" not in spec:
            spec["k_cap"] = float(doc["solver"]["K_cap"])
        models.append(model_from_spec(spec))
    operators = [operator_from_spec(o) for o in doc["operators"]]
    tfs = []
    for i, spec in enumerate(doc["test_functions"]):
        c = spec["center"]
        center = complex(*c) if isinstance(c, list) else complex(c)
        tfs.append(TestFunction(center=center, width=float(spec["width"]), label=f"g{i}"))
    ladder = list(doc["ladder"])
    validate_resolution(grid, models, ladder)
    if doc["experiment"] == "calculus":
        for j in ladder:
            if 2.0 ** (-j) / grid.h < 8 - 1e-9:
                raise ResolutionError(
                    f"/ladder: calculus checks use smooth profiles; delta/h = "
                    f"{2.0 ** (-j) / grid.h:g} < 8 at j = {j}"
                )
    return ExperimentConfig(
        experiment=doc["experiment"],
        grid=grid,
        ladder=ladder,
        seeds=_seed_list(doc["seeds"]),
        models=models,
        operators=operators,
        test_functions=tfs,
        tol=float(doc["solver"]["tol"]),
        max_iter=doc["solver"]["max_iter"],
        output_dir=doc["output"]["dir"],
        emit_ppm=bool(doc["output"]["emit_ppm"]),
        threads=int(doc["threads"]),
        params=dict(doc["params"]),
    )


def canonical_digest(doc: dict) -> str:
    data = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(data).hexdigest()


def parse_config(path) -> tuple:
    """Load, validate and normalize a config file.

    Returns (ExperimentConfig, canonical document). Raises ConfigurationError
    (with JSON pointer) on structural problems, ResolutionError on scales the
    grid cannot represent.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config_dict(doc)


def parse_config_dict(doc: dict) -> tuple:
    validate_document(doc)
    doc = apply_defaults(doc)
    cfg = build_config(doc)
    return cfg, doc
