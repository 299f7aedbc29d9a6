"""JSON run configuration: schema, validation and object construction.

Modes are 1-based in configuration files (``sim.i0``) and 0-based in the
Python API.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema

from .chain import validate_generator
from .designer import ControlGains, NonlinearBounds, QuasiLinearBounds, Scenario
from .models import BUILTIN_MODELS, PolynomialModel, Term
from .simulator import ControlLaw, SimConfig
from .spectral import Variant

_NUM = {"type": "number"}
_NUMS = {"type": "array", "items": _NUM, "minItems": 1}
_TERM = {
    "type": "object",
    "additionalProperties": False,
    "required": ["coef", "power"],
    "properties": {"coef": _NUM, "power": {"type": "number", "minimum": 0}, "abs": {"type": "boolean"}},
}
_TERMS_PER_MODE = {"type": "array", "items": {"type": "array", "items": _TERM}, "minItems": 1}

CONFIG_SCHEMA: dict = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {"enum": [s.value for s in Scenario]},
        "generator": {"type": "array", "items": _NUMS, "minItems": 1},
        "gains": _NUMS,
        "model": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["builtin"],
                    "properties": {"builtin": {"enum": sorted(BUILTIN_MODELS)}},
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["polynomial"],
                    "properties": {
                        "polynomial": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["drift", "diffusion"],
                            "properties": {"drift": _TERMS_PER_MODE, "diffusion": _TERMS_PER_MODE},
                        }
                    },
                },
            ]
        },
        "bounds": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "k", "q1", "q2", "p", "theta", "A", "B"],
                    "properties": {
                        "type": {"const": "nonlinear"},
                        "k": _NUM, "q1": _NUM, "q2": _NUM, "p": _NUM, "theta": _NUM,
                        "A": _NUMS, "B": _NUMS, "c": _NUM,
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["type", "k_bar"],
                    "properties": {
                        "type": {"const": "quasilinear"},
                        "k_bar": _NUM, "D": _NUMS, "E": _NUMS, "d": _NUMS, "e": _NUMS,
                    },
                },
            ]
        },
        "sigma": {"type": "number", "exclusiveMinimum": 0},
        "tau": {"type": "number", "exclusiveMinimum": 0},
        "tau0": {"type": "number", "minimum": 0},
        "controlled": {"type": "boolean"},
        "variant": {"enum": [v.value for v in Variant]},
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "horizon": {"type": "number", "exclusiveMinimum": 0},
                "x0": {"oneOf": [_NUM, _NUMS]},
                "i0": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
                "record_stride": {"type": "integer", "minimum": 1},
                "n_paths": {"type": "integer", "minimum": 1},
                "q_list": {"type": "array", "items": {"type": "number", "minimum": 1}, "minItems": 1},
                "window": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
            },
        },
    },
}

_ROOT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "family", "target", "root", "residual"],
    "properties": {"name": {"type": "string"}, "family": {"type": "string"}, "target": _NUM,
                   "root": _NUM, "residual": _NUM},
}
_NUM_OR_NULL = {"type": ["number", "null"]}

REPORT_SCHEMA: dict = {
    "type": "object",
    "additionalProperties": False,
    "required": ["scenario", "verdict", "hypotheses"],
    "properties": {
        "scenario": {"enum": [s.value for s in Scenario]},
        "verdict": {"type": "string"},
        "variant": {"enum": [v.value for v in Variant] + [None]},
        "sigma": _NUM_OR_NULL,
        "tau_sampling_max": _NUM_OR_NULL,
        "tau_plus_lag_max": _NUM_OR_NULL,
        "zeta": _NUM_OR_NULL,
        "exponents": {"type": "object", "additionalProperties": _NUM},
        "divergence_rate": _NUM_OR_NULL,
        "roots": {"type": "array", "items": _ROOT},
        "hypotheses": {"type": "object", "additionalProperties": {"type": "boolean"}},
        "intermediate": {"type": "object"},
        "admissible": {"type": ["boolean", "null"]},
        "notes": {"type": "array", "items": {"type": "string"}},
        "detail": {"type": "string"},
    },
}


class ConfigError(ValueError):
    pass


def _describe(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"config error at {where}: {err.message}"


def validate_config(raw: Any) -> dict:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        # oneOf failures bury the useful message one level down
        err = errors[0]
        if err.context:
            err = max(err.context, key=lambda e: len(e.absolute_path))
        raise ConfigError(_describe(err))
    return raw


def load_config(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return validate_config(raw)


@dataclass
class RunConfig:
    raw: dict

    def _need(self, key: str):
        if key not in self.raw:
            raise ConfigError(f"config error at <root>: '{key}' is required for this command")
        return self.raw[key]

    @property
    def variant(self) -> Variant:
        return Variant(self.raw.get("variant", Variant.FORMULA_B.value))

    def model(self):
        spec = self._need("model")
        if "builtin" in spec:
            m = BUILTIN_MODELS[spec["builtin"]]()
            if "generator" in self.raw:
                raise ConfigError("config error at generator: builtin models carry their own generator")
            return m
        poly = spec["polynomial"]

        def terms(table):
            return tuple(tuple(Term(t["coef"], t["power"], t.get("abs", False)) for t in mode) for mode in table)

        try:
            return PolynomialModel(
                generator=validate_generator(self._need("generator")),
                drift_terms=terms(poly["drift"]),
                diffusion_terms=terms(poly["diffusion"]),
                declared_bounds=self.bounds(required=False),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"config error at model: {exc}") from exc

    def generator(self):
        if "model" in self.raw:
            return self.model().generator
        try:
            return validate_generator(self._need("generator"))
        except ValueError as exc:
            raise ConfigError(f"config error at generator: {exc}") from exc

    def gains(self) -> ControlGains:
        try:
            return ControlGains(self._need("gains"))
        except ValueError as exc:
            raise ConfigError(f"config error at gains: {exc}") from exc

    def bounds(self, required: bool = True):
        b = self.raw.get("bounds")
        if b is None:
            if "model" in self.raw and "builtin" in self.raw["model"]:
                return BUILTIN_MODELS[self.raw["model"]["builtin"]]().declared_bounds
            if required:
                self._need("bounds")
            return None
        try:
            if b["type"] == "nonlinear":
                return NonlinearBounds(k=b["k"], q1=b["q1"], q2=b["q2"], p=b["p"], theta=b["theta"],
                                       A=b["A"], B=b["B"], c=b.get("c", 0.0))
            return QuasiLinearBounds(k_bar=b["k_bar"], D=b.get("D"), E=b.get("E"), d=b.get("d"), e=b.get("e"))
        except ValueError as exc:
            raise ConfigError(f"config error at bounds: {exc}") from exc

    def law(self) -> ControlLaw | None:
        controlled = self.raw.get("controlled", "tau" in self.raw)
        if not controlled:
            return None
        tau = self._need("tau")
        try:
            return ControlLaw(self.gains(), tau, self.raw.get("tau0", 0.0))
        except ValueError as exc:
            raise ConfigError(f"config error at tau: {exc}") from exc

    def sim_section(self) -> dict:
        return self.raw.get("sim", {})

    def sim(self, seed: int | None = None) -> SimConfig:
        s = self._need("sim")
        for key in ("dt", "horizon"):
            if key not in s:
                raise ConfigError(f"config error at sim: '{key}' is required")
        try:
            return SimConfig(
                dt=s["dt"],
                horizon=s["horizon"],
                x0=s.get("x0", 1.0),
                i0=s.get("i0", 1) - 1,
                seed=s.get("seed", 0) if seed is None else seed,
                record_stride=s.get("record_stride", 1),
            )
        except ValueError as exc:
            raise ConfigError(f"config error at sim: {exc}") from exc
