"""JSON schemas for scenario files (draft 2020-12).

Structural checks live here; numeric invariants that depend on several
fields (simplex rays, allocations summing to 1, ...) are enforced by the
model constructors after the schema passes.
"""

from __future__ import annotations

COMMANDS = ("classify", "tailprob", "breiman", "sbj", "constants", "ruin", "ldp")

_POS = {"type": "number", "exclusiveMinimum": 0}
_NUM = {"type": "number"}
_POS_GRID = {"type": "array", "minItems": 1, "items": _POS}


def _family(name, required, props):
    return {
        "if": {"properties": {"family": {"const": name}}, "required": ["family"]},
        "then": {
            "required": ["family", *required],
            "properties": {"family": True, **props},
            "additionalProperties": False,
        },
    }


TAIL_MODEL = {
    "type": "object",
    "required": ["family"],
    "properties": {
        "family": {"enum": ["pareto", "lognormal", "weibull_heavy", "log_pareto", "bounded_uniform",
                            "degenerate", "exponential"]}
    },
    "allOf": [
        _family("pareto", ["alpha"], {"alpha": _POS, "scale": _POS}),
        _family("lognormal", [], {"mu": _NUM, "sigma": _POS}),
        _family("weibull_heavy", ["shape"], {"shape": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                                             "scale": _POS}),
        _family("log_pareto", ["beta"], {"beta": _POS}),
        _family("bounded_uniform", [], {"upper": _POS}),
        _family("degenerate", ["c"], {"c": _POS}),
        _family("exponential", [], {"rate": _POS}),
    ],
}

_VECTOR = {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}}

RARE_SET = {
    "type": "object",
    "required": ["directions"],
    "properties": {"directions": {"type": "array", "minItems": 1, "items": _VECTOR},
                   "dim": {"type": "integer", "minimum": 1}},
    "additionalProperties": False,
}

VECTOR_MODEL = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["independent", "mrv_ray"]}},
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "independent"}}, "required": ["kind"]},
            "then": {
                "required": ["kind", "marginals"],
                "properties": {"kind": True, "marginals": {"type": "array", "minItems": 1, "items": TAIL_MODEL}},
                "additionalProperties": False,
            },
        },
        {
            "if": {"properties": {"kind": {"const": "mrv_ray"}}, "required": ["kind"]},
            "then": {
                "required": ["kind", "alpha", "rays"],
                "properties": {
                    "kind": True,
                    "alpha": _POS,
                    "radius": TAIL_MODEL,
                    "rays": {
                        "type": "array",
                        "minItems": 1,
                        "items": {
                            "type": "object",
                            "required": ["w", "dir"],
                            "properties": {"w": _POS, "dir": _VECTOR},
                            "additionalProperties": False,
                        },
                    },
                },
                "additionalProperties": False,
            },
        },
    ],
}

COUPLING = {
    "type": "object",
    "required": ["theta"],
    "properties": {"theta": TAIL_MODEL, "fgm_theta": {"type": "number", "minimum": -0.99, "maximum": 0.99}},
    "additionalProperties": False,
}

RISK = {
    "type": "object",
    "required": ["lambda", "horizon", "interest", "claim_model", "allocation", "ruin_set"],
    "properties": {
        "lambda": _POS,
        "horizon": _POS,
        "interest": {"type": "number", "minimum": 0},
        "claim_model": VECTOR_MODEL,
        "allocation": {"type": "array", "minItems": 1, "items": _POS},
        "ruin_set": {
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": ["any_component", "total_sum"]}, "dim": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "premium_rates": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "fgm_theta": {"type": "number", "minimum": -0.99, "maximum": 0.99},
    },
    "additionalProperties": False,
}

_ALPHA = {"anyOf": [_POS, {"type": "null"}]}

PAYLOADS = {
    "classify": {
        "type": "object",
        "required": ["model"],
        "properties": {"model": TAIL_MODEL, "x_max": _POS,
                       "b_grid": {"type": "array", "minItems": 1, "items": {"type": "number", "exclusiveMinimum": 1}}},
        "additionalProperties": False,
    },
    "tailprob": {
        "type": "object",
        "required": ["vector_model", "set", "x_grid"],
        "properties": {"vector_model": VECTOR_MODEL, "set": RARE_SET, "x_grid": _POS_GRID, "mc": {"type": "boolean"}},
        "additionalProperties": False,
    },
    "breiman": {
        "type": "object",
        "required": ["vector_model", "set", "coupling", "alpha", "x_grid"],
        "properties": {"vector_model": VECTOR_MODEL, "set": RARE_SET, "coupling": COUPLING, "alpha": _POS,
                       "x_grid": _POS_GRID},
        "additionalProperties": False,
    },
    "sbj": {
        "type": "object",
        "required": ["set", "pairs", "x_grid"],
        "properties": {
            "set": RARE_SET,
            "x_grid": _POS_GRID,
            "mode": {"enum": ["sbj", "mrv_weighted"]},
            "pairs": {
                "type": "array",
                "minItems": 1,
                "items": {
                    "type": "object",
                    "required": ["vector_model", "coupling"],
                    "properties": {"vector_model": VECTOR_MODEL, "coupling": COUPLING,
                                   "copies": {"type": "integer", "minimum": 1}},
                    "additionalProperties": False,
                },
            },
        },
        "additionalProperties": False,
    },
    "constants": {
        "type": "object",
        "required": ["risk"],
        "properties": {"risk": RISK, "alpha": _ALPHA, "n_max": {"type": "integer", "minimum": 1}},
        "additionalProperties": False,
    },
    "ruin": {
        "type": "object",
        "required": ["risk", "x_grid"],
        "properties": {"risk": RISK, "alpha": _ALPHA, "x_grid": _POS_GRID},
        "additionalProperties": False,
    },
    "ldp": {
        "type": "object",
        "required": ["models", "set", "gamma", "mode", "x_grid"],
        "properties": {
            "models": {"type": "array", "minItems": 1, "items": VECTOR_MODEL},
            "set": RARE_SET,
            "gamma": _POS,
            "shift_c": _NUM,
            "mode": {"enum": ["fixed_n", "random_sum"]},
            "n": {"type": "integer", "minimum": 1},
            "lambda": _POS,
            "t": _POS,
            "x_grid": _POS_GRID,
            "n_grid": {"type": "array", "minItems": 2, "items": {"type": "integer", "minimum": 2}},
        },
        "allOf": [
            {"if": {"properties": {"mode": {"const": "fixed_n"}}}, "then": {"required": ["n"]}},
            {"if": {"properties": {"mode": {"const": "random_sum"}}}, "then": {"required": ["lambda", "t"]}},
        ],
        "additionalProperties": False,
    },
}

_BUDGET = {"type": "integer", "minimum": 1}

SCENARIO = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "seed", "payload"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "n_samples": _BUDGET,
        "n_paths": _BUDGET,
        "payload": {"type": "object"},
        "output": {
            "type": "object",
            "required": ["path"],
            "properties": {"path": {"type": "string", "minLength": 1}, "format": {"enum": ["json", "csv"]}},
            "additionalProperties": False,
        },
    },
    "oneOf": [{"required": ["n_samples"]}, {"required": ["n_paths"]}],
    "additionalProperties": False,
}
