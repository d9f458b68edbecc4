"""JSON serialisation of experiments and the schemas of every file output."""

from __future__ import annotations

import json
from typing import Optional, TextIO

from .simulate import Truth
from .transforms import Experiment, Group

EXPERIMENT_SCHEMA = {
    "type": "object",
    "required": ["dim_in", "dim_out", "pairs"],
    "properties": {
        "dim_in": {"type": "integer", "minimum": 1},
        "dim_out": {"type": "integer", "minimum": 1},
        "pairs": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["input", "output"],
                "properties": {
                    "input": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                    "output": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                },
            },
        },
        "truth": {
            "type": "object",
            "required": ["group", "params"],
            "properties": {
                "group": {"type": "string", "enum": [g.value for g in Group]},
                "params": {"type": "array", "items": {"type": "number"}},
                "n_ideal": {"type": "integer", "minimum": 0},
            },
        },
    },
}

RESULT_SCHEMA = {
    "type": "object",
    "required": ["group", "params", "objective", "pos_size"],
    "properties": {
        "group": {"type": "string", "enum": [g.value for g in Group]},
        "params": {"type": "array", "items": {"type": "number"}, "minItems": 1},
        "objective": {"type": "number", "minimum": 0},
        "pos_size": {"type": "integer", "minimum": 0},
        "candidates_evaluated": {"type": "integer", "minimum": 1},
        "refinement_steps": {"type": "integer", "minimum": 0},
    },
}

TRIAL_SCHEMA = {
    "type": "object",
    "required": ["seed", "params", "param_error", "exact_recovery", "objective", "pos_size"],
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "params": {"type": "array", "items": {"type": "number"}},
        "param_error": {"type": "number", "minimum": 0},
        "exact_recovery": {"type": "boolean"},
        "objective": {"type": "number", "minimum": 0},
        "pos_size": {"type": "integer", "minimum": 0},
    },
}


def experiment_to_dict(exp: Experiment, truth: Optional[Truth] = None) -> dict:
    out = {
        "dim_in": exp.dim_in,
        "dim_out": exp.dim_out,
        "pairs": [{"input": i.tolist(), "output": o.tolist()} for i, o in zip(exp.inputs, exp.outputs)],
    }
    if truth is not None:
        out["truth"] = truth.to_dict()
    return out


def experiment_from_dict(data: dict) -> tuple[Experiment, Optional[Truth]]:
    try:
        pairs = data["pairs"]
        exp = Experiment(
            [p["input"] for p in pairs],
            [p["output"] for p in pairs],
            dim_in=data["dim_in"],
            dim_out=data["dim_out"],
        )
    except (KeyError, TypeError) as err:
        raise ValueError(f"malformed experiment document: {err}") from None
    truth = None
    if "truth" in data:
        t = data["truth"]
        truth = Truth(Group.parse(t["group"]), tuple(float(v) for v in t["params"]), int(t.get("n_ideal", 0)))
    return exp, truth


def dump_experiment(exp: Experiment, stream: TextIO, truth: Optional[Truth] = None) -> None:
    json.dump(experiment_to_dict(exp, truth), stream, indent=1)
    stream.write("\n")


def load_experiment(stream: TextIO) -> tuple[Experiment, Optional[Truth]]:
    return experiment_from_dict(json.load(stream))
