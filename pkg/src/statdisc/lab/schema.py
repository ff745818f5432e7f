"""JSON schema ``statdisc-report/1`` for experiment reports."""

import jsonschema

SCHEMA_ID = "statdisc-report/1"

_complex = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_cvec = {"type": "array", "items": _complex}
_flag = {"type": ["boolean", "null"]}

TRIAL_SCHEMA = {
    "type": "object",
    "required": ["trial_id", "seed", "kind", "n", "d", "quadric_hash", "parameters",
                 "flags", "margins", "status", "error"],
    "properties": {
        "trial_id": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "kind": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "d": {"type": "integer", "minimum": 1},
        "quadric_hash": {"type": ["string", "null"]},
        "quadric": {"type": ["object", "null"]},
        "parameters": {
            "type": "object",
            "properties": {
                "a": {"anyOf": [_cvec, {"type": "null"}]},
                "b": {"anyOf": [{"type": "array", "items": {"type": "number"}},
                                {"type": "null"}]},
                "V": {"anyOf": [_cvec, {"type": "null"}]},
            },
        },
        "flags": {
            "type": "object",
            "properties": {
                "pseudoconvex": _flag,
                "generating": _flag,
                "levi_nondeg": _flag,
                "segre_rank": {"type": ["integer", "null"]},
                "guard": _flag,
                "stationary_minimal": _flag,
                "da_nondeg": _flag,
                "da_strongly": _flag,
                "diffeo": _flag,
                "sym_part_pd": _flag,
                "defective": _flag,
            },
            "additionalProperties": False,
        },
        "margins": {"type": "object",
                    "additionalProperties": {"type": ["number", "null"]}},
        "status": {"enum": ["CONSISTENT", "COUNTEREXAMPLE-CANDIDATE", "FAILED"]},
        "error": {"type": ["string", "null"]},
        "search": {"type": ["object", "null"]},
        "quarantine": {"type": ["object", "null"]},
    },
}

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "header", "config", "trials", "summary", "candidates"],
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "header": {"type": "object", "required": ["created"]},
        "config": {"type": "object",
                   "required": ["kind", "n", "d", "trials", "seed", "a_radius", "budget"]},
        "trials": {"type": "array", "items": TRIAL_SCHEMA},
        "summary": {
            "type": "object",
            "required": ["trials", "failed", "candidates_raw", "candidates_surviving",
                         "pd_certificate", "implication", "cells"],
        },
        "candidates": {"type": "array", "items": TRIAL_SCHEMA},
    },
}


def validate_report(report):
    """Raise ``jsonschema.ValidationError`` if ``report`` does not match the schema."""
    jsonschema.validate(report, REPORT_SCHEMA)
