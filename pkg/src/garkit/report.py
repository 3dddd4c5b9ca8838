"""Versioned JSON report schema and serialisation helpers."""

from __future__ import annotations

import json
import math
from typing import Any

import jsonschema
import numpy as np

SCHEMA_VERSION = "1.0"

_NUM = {"type": ["number", "null"]}
_FLAGS = {
    "type": "object",
    "properties": {"Th11": {"type": "boolean"}, "Th12": {"type": "boolean"},
                   "Th33": {"type": "boolean"}, "heuristic": {"type": "boolean"}},
    "required": ["Th11", "Th12", "Th33"],
}
_TABLE = {
    "type": "object",
    "properties": {
        "rows": {"type": "array", "items": {"type": "object", "required": ["n"]}},
        "slopes": {"type": "object"},
        "decreasing": {"type": "object"},
        "warnings": {"type": "array", "items": {"type": "string"}},
    },
    "required": ["rows", "warnings"],
}

MANIFEST_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"type": "string"},
        "args": {"type": "object"},
        "tool_version": {"type": "string"},
        "schema_version": {"const": SCHEMA_VERSION},
        "seed": {"type": ["integer", "null"]},
        "started_at": {"type": "string"},
        "finished_at": {"type": "string"},
    },
    "required": ["command", "args", "tool_version", "schema_version", "seed", "started_at", "finished_at"],
}


def _report(props: dict, required: list) -> dict:
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "properties": {"schema_version": {"const": SCHEMA_VERSION}, "manifest": MANIFEST_SCHEMA,
                       "warnings": {"type": "array", "items": {"type": "string"}}, **props},
        "required": ["schema_version", "manifest", *required],
    }


SCHEMAS = {
    "estimate": _report(
        {
            "index": {"enum": ["gini", "correlation", "custom"]},
            "estimate": {"type": "number"},
            "n": {"type": "integer", "minimum": 1},
            "ci": {
                "type": "object",
                "properties": {"lo": _NUM, "hi": _NUM, "level": {"type": "number"},
                               "method": {"enum": ["none", "model"]}},
                "required": ["lo", "hi", "level", "method"],
            },
        },
        ["index", "estimate", "n", "ci"],
    ),
    "variance": _report(
        {
            "gamma1": {"type": "number"},
            "gamma2": {"type": "number"},
            "gamma3": {"type": "number"},
            "total": {"type": "number"},
            "moment_flags": _FLAGS,
            "nodes": {"type": "integer"},
        },
        ["gamma1", "gamma2", "gamma3", "total", "moment_flags"],
    ),
    "simulate": _report(
        {
            "n": {"type": "integer"},
            "reps": {"type": "integer"},
            "valid_reps": {"type": "integer"},
            "failures": {"type": "integer"},
            "center": _NUM,
            "empirical_mean": _NUM,
            "empirical_var": _NUM,
            "predicted_var": _NUM,
            "var_ratio": _NUM,
            "ks_statistic": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
            "ks_reference": _NUM,
            "ci_coverage": {"type": ["number", "null"], "minimum": 0, "maximum": 1},
        },
        ["n", "reps", "empirical_mean", "empirical_var", "predicted_var", "ks_statistic", "var_ratio", "ci_coverage"],
    ),
    "diagnose": _report(
        {
            "residual_conditions": _TABLE,
            "representation_gap": _TABLE,
            "bahadur": {"oneOf": [_TABLE, {"type": "null"}]},
            "stable": {"type": "boolean"},
        },
        ["residual_conditions", "representation_gap", "bahadur", "stable"],
    ),
    "error": _report(
        {"error": {"type": "object", "properties": {"type": {"type": "string"}, "message": {"type": "string"}},
                   "required": ["type", "message"]},
         "exit_code": {"type": "integer"}},
        ["error", "exit_code"],
    ),
}


def validate_report(doc: dict, kind: str) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match schema ``kind``."""
    jsonschema.validate(doc, SCHEMAS[kind])


def jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars and non-finite floats (to ``None``)."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(doc: dict) -> str:
    return json.dumps(jsonable(doc), indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)
