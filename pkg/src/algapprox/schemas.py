"""JSON schemas for set documents, job documents and run reports."""

from __future__ import annotations

import jsonschema

from .errors import SchemaError

_PIECE = {
    "type": "object",
    "properties": {
        "equations": {"type": "array", "items": {"type": "string"}},
        "inequalities": {"type": "array", "items": {"type": "string"}},
        "declared_dimension": {"type": ["integer", "null"], "minimum": 0},
    },
    "additionalProperties": False,
}

SET_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "set document",
    "type": "object",
    "required": ["variables", "pieces"],
    "properties": {
        "variables": {"type": "array", "items": {"type": "string", "pattern": "^[A-Za-z_][A-Za-z0-9_]*$"},
                      "minItems": 1, "uniqueItems": True},
        "pieces": {"type": "array", "items": _PIECE, "minItems": 1},
        "declared_dimension": {"type": ["integer", "null"], "minimum": 0},
        "name": {"type": "string"},
    },
    "additionalProperties": False,
}

_OPTIONS = {
    "type": "object",
    "properties": {
        "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                  "minItems": 1},
        "samples_per_radius": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "newton_tol": {"type": "number", "exclusiveMinimum": 0},
        "newton_max_iter": {"type": "integer", "minimum": 1},
        "on_set_tol": {"type": "number", "exclusiveMinimum": 0},
        "order_margin": {"type": "number", "exclusiveMinimum": 0},
        "delta_floor": {"type": "number", "exclusiveMinimum": 0},
        "dimension_radii": {"type": "array",
                            "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                            "minItems": 1},
        "max_projection_tries": {"type": "integer", "minimum": 1},
        "max_exponent": {"type": "integer", "minimum": 1},
        "loja_safety": {"type": "number", "minimum": 0},
        "rank_tol": {"type": "number", "exclusiveMinimum": 0},
        "seed_scales": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

JOB_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "job document",
    "type": "object",
    "required": ["variables", "pieces", "s"],
    "properties": {
        **SET_SCHEMA["properties"],
        "s": {"type": "number", "minimum": 1},
        "options": _OPTIONS,
    },
    "additionalProperties": False,
}

_NUMBER_OR_INF = {"anyOf": [{"type": "number"}, {"enum": ["inf"]}]}

_SEQUIV = {
    "type": "object",
    "required": ["direction", "s", "per_radius", "fitted_order", "pass", "notes"],
    "properties": {
        "direction": {"type": "string"},
        "s": {"type": "number"},
        "per_radius": {"type": "array", "items": {
            "type": "object",
            "required": ["radius", "delta", "ratio"],
            "properties": {"radius": {"type": "number"}, "delta": {"type": "number"}, "ratio": {"type": "number"}},
        }},
        "fitted_order": _NUMBER_OR_INF,
        "pass": {"type": "boolean"},
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}

_STEP = {
    "type": "object",
    "required": ["index", "chosen_m", "tried_ms", "verification", "dim_check", "p2_ok", "p3_ok", "failures"],
    "properties": {
        "index": {"type": "integer"},
        "chosen_m": {"type": "integer"},
        "tried_ms": {"type": "array", "items": {"type": "integer"}},
        "m_start": {"type": "integer"},
        "loja_alpha": {"type": ["number", "null"]},
        "verification": {"type": "array", "items": _SEQUIV},
        "dim_check": {"type": "integer"},
        "p2_ok": {"type": "boolean"},
        "p3_ok": {"type": "boolean"},
        "failures": {"type": "array", "items": {
            "type": "object", "required": ["m", "reason"],
            "properties": {"m": {"type": "integer"}, "reason": {"type": "string"}},
        }},
    },
}

_PIECE_RESULT = {
    "type": "object",
    "required": ["equations", "structured_equations", "steps", "final_report", "final_dimension", "dimension",
                 "pass", "warnings"],
    "properties": {
        "equations": {"type": "array", "items": {"type": "string"}},
        "structured_equations": {"type": "array", "items": {"type": "string"}},
        "steps": {"type": "array", "items": _STEP},
        "projection_matrix": {"type": ["array", "null"]},
        "ball_exponent": {"type": ["integer", "null"]},
        "final_report": {"type": "array", "items": _SEQUIV},
        "final_dimension": {"type": "integer"},
        "dimension": {"type": "integer"},
        "pass": {"type": "boolean"},
        "warnings": {"type": "array", "items": {"type": "string"}},
    },
}

REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "run report",
    "type": "object",
    "required": ["command", "input", "config", "pass", "warnings"],
    "properties": {
        "command": {"enum": ["approximate", "verify"]},
        "input": {"type": "object"},
        "config": {"type": "object"},
        "s": {"type": "number"},
        "result": {
            "type": "object",
            "required": ["pieces", "combined_equations", "pass", "warnings"],
            "properties": {
                "pieces": {"type": "array", "items": _PIECE_RESULT},
                "combined_equations": {"type": ["array", "null"], "items": {"type": "string"}},
                "structured_combined_equations": {"type": ["array", "null"], "items": {"type": "string"}},
                "pass": {"type": "boolean"},
                "warnings": {"type": "array", "items": {"type": "string"}},
            },
        },
        "reports": {"type": "array", "items": _SEQUIV},
        "tables": {"type": "array", "items": {
            "type": "object",
            "required": ["piece", "rows"],
            "properties": {
                "piece": {"type": "integer"},
                "rows": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
            },
        }},
        "error": {
            "type": "object",
            "required": ["kind", "message"],
            "properties": {
                "kind": {"type": "string"},
                "message": {"type": "string"},
                "failures": {"type": "array"},
            },
        },
        "pass": {"type": "boolean"},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "timing": {"type": "object", "additionalProperties": {"type": "number"}},
    },
    "additionalProperties": False,
}


def validate(document, schema: dict, what: str = "document") -> None:
    """Raise SchemaError unless ``document`` matches ``schema``."""
    try:
        jsonschema.validate(document, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"{what} is invalid{' at ' + where if where else ''}: {exc.message}") from exc
