"""Run-configuration loading and schema validation for the CLI.

One JSON file per run; unknown keys are rejected so typos fail loudly before
any work starts. Paths are resolved against the config file's directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import jsonschema

from . import io as vio
from .errors import ConfigurationError
from .network import TrainingConfig
from .oracle import Grid
from .phasefield import CrackSegment, MaterialParams
from .surrogate import LoadSchedule, NetworkSpec

_SEGMENT = {
    "type": "array", "minItems": 2, "maxItems": 2,
    "items": {"type": "array", "minItems": 2, "maxItems": 2,
              "items": {"type": "number"}},
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario", "output_dir"],
    "properties": {
        "format_version": {"const": 1},
        "scenario": {"enum": ["tensile", "shear", "darcy"]},
        "layout": {"enum": ["s1", "s2", "unified"]},
        "seed": {"type": "integer"},
        "output_dir": {"type": "string"},
        "data_dir": {"type": "string"},
        "sensor_file": {"type": "string"},
        "material": {
            "type": "object", "additionalProperties": False,
            "required": ["nu_lame", "mu_lame", "g_c", "l_0"],
            "properties": {k: {"type": "number"}
                           for k in ("nu_lame", "mu_lame", "g_c", "l_0")},
        },
        "b_scalar": {"type": "number", "exclusiveMinimum": 0},
        "geometry": {
            "type": "object", "additionalProperties": False,
            "required": ["cracks"],
            "properties": {"cracks": {"type": "array", "minItems": 1,
                                      "items": _SEGMENT}},
        },
        "schedule": {"type": "array", "minItems": 1,
                     "items": {"type": "number", "exclusiveMinimum": 0}},
        "grid": {
            "type": "object", "additionalProperties": False,
            "required": ["nx", "ny"],
            "properties": {"nx": {"type": "integer", "minimum": 8},
                           "ny": {"type": "integer", "minimum": 8}},
        },
        "oracle": {
            "type": "object", "additionalProperties": False,
            "properties": {"tol": {"type": "number", "exclusiveMinimum": 0},
                           "max_iter": {"type": "integer", "minimum": 1}},
        },
        "network": {
            "type": "object", "additionalProperties": False,
            "required": ["branch_hidden", "trunk_hidden", "q"],
            "properties": {
                "branch_hidden": {"type": "array", "minItems": 1,
                                  "items": {"type": "integer", "minimum": 1}},
                "trunk_hidden": {"type": "array", "minItems": 1,
                                 "items": {"type": "integer", "minimum": 1}},
                "q": {"type": "integer", "minimum": 1},
            },
        },
        "training": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "learning_rate": {"type": "number", "exclusiveMinimum": 0},
                "beta1": {"type": "number"},
                "beta2": {"type": "number"},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "epochs": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer"},
                "lambda_data": {"type": "number", "minimum": 0},
                "lambda_var": {"type": "number", "minimum": 0},
                "displacement_scale": {"type": "number",
                                       "exclusiveMinimum": 0},
                "energy_scale": {"type": ["number", "null"]},
            },
        },
        "points": {"type": "integer", "minimum": 0},
        "darcy": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "kernel": {
                    "type": "object", "additionalProperties": False,
                    "properties": {
                        "l1": {"type": "number", "exclusiveMinimum": 0},
                        "l2": {"type": "number", "exclusiveMinimum": 0},
                        "truncation": {"type": "integer", "minimum": 1}},
                },
                "n_samples": {"type": "integer", "minimum": 1},
                "sample_seed": {"type": "integer"},
            },
        },
        "predict": {
            "type": "object", "additionalProperties": False,
            "properties": {"crack": _SEGMENT,
                           "delta_w": {"type": "number",
                                       "exclusiveMinimum": 0}},
        },
    },
}

_FRACTURE_REQUIRED = ("material", "geometry", "schedule", "grid", "network",
                      "sensor_file")


@dataclass
class RunConfig:
    raw: dict
    base_dir: str

    @property
    def scenario(self) -> str:
        return self.raw["scenario"]

    @property
    def layout(self) -> str:
        return self.raw.get("layout", "darcy" if self.scenario == "darcy"
                            else "s2")

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    def path(self, key: str, default=None) -> str:
        value = self.raw.get(key, default)
        if value is None:
            raise ConfigurationError(f"config key '{key}' is required")
        return os.path.normpath(os.path.join(self.base_dir, value))

    @property
    def output_dir(self) -> str:
        return self.path("output_dir")

    @property
    def data_dir(self) -> str:
        return self.path("data_dir", self.raw.get("data_dir",
                                                  self.raw["output_dir"]))

    @property
    def material(self) -> MaterialParams:
        m = self.raw["material"]
        return MaterialParams(m["nu_lame"], m["mu_lame"], m["g_c"], m["l_0"])

    @property
    def b_scalar(self) -> float:
        return float(self.raw.get("b_scalar", 1000.0))

    @property
    def cracks(self):
        return [CrackSegment(seg[0][0], seg[0][1], seg[1][0], seg[1][1])
                for seg in self.raw["geometry"]["cracks"]]

    @property
    def schedule(self) -> LoadSchedule:
        return LoadSchedule(tuple(self.raw["schedule"]), self.scenario)

    @property
    def grid(self) -> Grid:
        g = self.raw.get("grid", {"nx": 64, "ny": 64})
        return Grid(g["nx"], g["ny"])

    @property
    def oracle_options(self) -> dict:
        o = self.raw.get("oracle", {})
        return {"tol": float(o.get("tol", 1e-8)),
                "max_iter": int(o.get("max_iter", 40_000))}

    @property
    def network(self) -> NetworkSpec:
        n = self.raw["network"]
        return NetworkSpec(tuple(n["branch_hidden"]), tuple(n["trunk_hidden"]),
                           int(n["q"]))

    @property
    def training(self) -> TrainingConfig:
        t = dict(self.raw.get("training", {}))
        t.setdefault("seed", self.seed)
        return TrainingConfig(**t)

    @property
    def points_cap(self) -> int:
        return int(self.raw.get("points", 0))

    @property
    def darcy_options(self) -> dict:
        d = self.raw.get("darcy", {})
        kernel = d.get("kernel", {})
        return {"l1": float(kernel.get("l1", 0.25)),
                "l2": float(kernel.get("l2", 0.25)),
                "truncation": int(kernel.get("truncation", 100)),
                "n_samples": int(d.get("n_samples", 20)),
                "sample_seed": int(d.get("sample_seed", 0))}


def load_config(path: str) -> RunConfig:
    raw = vio.read_json(path)
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigurationError(f"invalid config {path}: {exc.message}") \
            from exc
    scenario = raw["scenario"]
    if scenario != "darcy":
        missing = [k for k in _FRACTURE_REQUIRED if k not in raw]
        if missing:
            raise ConfigurationError(
                f"config {path} is missing {missing} for scenario "
                f"'{scenario}'")
        if "layout" not in raw:
            raise ConfigurationError(f"config {path} needs a layout for "
                                     f"scenario '{scenario}'")
    return RunConfig(raw, os.path.dirname(os.path.abspath(path)))
